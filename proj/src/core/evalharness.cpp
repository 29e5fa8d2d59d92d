#include "scsampler/evalharness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "scsampler/error.hpp"
#include "scsampler/parallel.hpp"
#include "scsampler/rng.hpp"

namespace scsampler {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::uint64_t kSelectionStream = 0x5e1ec7;

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string strategy_label(const StrategySpec& spec) {
  std::string label(strategy_name(spec.kind));
  if (spec.kind == StrategyKind::scsampler && spec.sampler && spec.sampler->fusion) {
    const auto& fc = *spec.sampler->fusion;
    label += "/" + std::string(fusion_scheme_name(fc.scheme));
    if (fc.alpha) label += "(alpha=" + format_fixed(*fc.alpha, 3) + ")";
    if (fc.k_prime) label += "(K'=" + std::to_string(*fc.k_prime) + ")";
  }
  return label;
}

SelectionResult sampler_selection(const SamplerModel& sampler, const VideoRecord& video,
                                  std::size_t k, std::size_t stride) {
  const auto candidates = stride_candidates(video.num_clips, stride);
  SelectionResult out;
  if (!sampler.fusion) {
    std::vector<SaliencyScorer> all = sampler.visual;
    all.insert(all.end(), sampler.audio.begin(), sampler.audio.end());
    StridedScores strided{candidates, score_video(all, video, candidates)};
    out = select_topk(strided, k);
  } else {
    if (sampler.visual.empty() || sampler.audio.empty()) {
      throw ConfigError("fusion needs both visual and audio scorers");
    }
    const auto sv = score_video(sampler.visual, video, candidates);
    const auto sa = score_video(sampler.audio, video, candidates);
    const std::size_t k_eff = std::min(k, candidates.size());
    std::vector<std::size_t> local;
    FusionConfig fc = *sampler.fusion;
    if (k_eff == candidates.size()) {
      for (std::size_t c = 0; c < candidates.size(); ++c) local.push_back(c);
    } else {
      if (fc.k_prime) fc.k_prime = std::min(*fc.k_prime, k_eff - 1);
      if (fc.k_prime && *fc.k_prime == 0) {
        local = select_topk(sv, k_eff).indices;
      } else {
        local = fuse(fc, sv, sa, k_eff).indices;
      }
    }
    out.k_requested = k;
    for (std::size_t c : local) out.indices.push_back(candidates[c]);
  }
  out.strategy = "scsampler";
  out.video_id = video.id;
  return out;
}

}  // namespace

double CostModel::sampler_total() const {
  double total = 0.0;
  for (const auto& [name, c] : sampler_per_clip) total += c;
  return total;
}

CostModel CostModel::restricted_to(std::span<const std::string> modalities) const {
  CostModel out{classifier_per_clip, {}, fixed_overhead};
  for (const auto& m : modalities) {
    auto it = sampler_per_clip.find(m);
    if (it != sampler_per_clip.end()) out.sampler_per_clip.insert(*it);
  }
  return out;
}

void CostModel::check() const {
  if (!(classifier_per_clip >= 0.0) || !(fixed_overhead >= 0.0)) {
    throw ConfigError("cost model entries must be nonnegative");
  }
  for (const auto& [name, c] : sampler_per_clip) {
    if (!(c >= 0.0)) throw ConfigError("sampler cost for '" + name + "' must be nonnegative");
  }
}

double compute_cost(const CostModel& model, std::size_t num_clips, std::size_t k,
                    std::size_t stride, CostScheme scheme) {
  if (num_clips == 0 || k == 0 || stride == 0) {
    throw std::invalid_argument("compute_cost needs positive L, K and N");
  }
  const double L = static_cast<double>(num_clips);
  if (scheme == CostScheme::dense) return L * model.classifier_per_clip + model.fixed_overhead;
  const std::size_t scored = ceil_div(num_clips, stride);
  return static_cast<double>(scored) * model.sampler_total() +
         static_cast<double>(std::min(k, scored)) * model.classifier_per_clip +
         model.fixed_overhead;
}

std::string_view strategy_name(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::dense:
      return "dense";
    case StrategyKind::random:
      return "random";
    case StrategyKind::uniform:
      return "uniform";
    case StrategyKind::empirical:
      return "empirical";
    case StrategyKind::oracle:
      return "oracle";
    case StrategyKind::scsampler:
      return "scsampler";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::dense, StrategyKind::random, StrategyKind::uniform,
                 StrategyKind::empirical, StrategyKind::oracle, StrategyKind::scsampler}) {
    if (strategy_name(k) == name) return k;
  }
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

std::vector<std::string> SamplerModel::modalities() const {
  std::vector<std::string> out;
  for (const auto* group : {&visual, &audio}) {
    for (const auto& s : *group) {
      if (std::find(out.begin(), out.end(), s.modality) == out.end()) out.push_back(s.modality);
    }
  }
  return out;
}

SelectionResult select_for_video(const ClipClassifier& f, const VideoRecord& video,
                                 std::size_t video_index, const StrategySpec& spec,
                                 const EvalParams& params) {
  const std::uint64_t seed = derive_seed(params.seed, kSelectionStream, video_index);
  const std::size_t L = video.num_clips;
  SelectionResult sel;
  switch (spec.kind) {
    case StrategyKind::dense:
      sel = select_dense(L);
      break;
    case StrategyKind::random:
      sel = select_random(L, params.k, seed);
      break;
    case StrategyKind::uniform:
      sel = select_uniform(L, params.k);
      break;
    case StrategyKind::empirical:
      if (spec.histogram == nullptr) throw ConfigError("empirical strategy needs a histogram");
      sel = select_empirical(*spec.histogram, L, params.k, seed);
      break;
    case StrategyKind::oracle:
      sel = select_oracle(f, video, params.k);
      break;
    case StrategyKind::scsampler:
      if (spec.sampler == nullptr) throw ConfigError("scsampler strategy needs a sampler model");
      sel = sampler_selection(*spec.sampler, video, params.k, params.stride);
      break;
  }
  sel.video_id = video.id;
  return sel;
}

EvalReport evaluate_strategy(const DatasetManifest& test, const ClipClassifier& f,
                             const StrategySpec& spec, const EvalParams& params,
                             const CostModel& cost) {
  if (params.k == 0 || params.stride == 0) throw ConfigError("K and N must be >= 1");
  if (test.videos.empty()) throw DataError("evaluation set is empty");
  if (f.num_classes() != test.num_classes()) {
    throw DataError("classifier has " + std::to_string(f.num_classes()) +
                    " classes but dataset '" + test.dataset_id + "' has " +
                    std::to_string(test.num_classes()));
  }
  cost.check();

  EvalReport report;
  report.dataset_id = test.dataset_id;
  report.strategy = strategy_label(spec);
  report.k = params.k;
  report.stride = params.stride;
  report.classifier = f.describe();
  if (spec.kind == StrategyKind::scsampler && spec.sampler && spec.sampler->fusion) {
    report.fusion = fusion_scheme_name(spec.sampler->fusion->scheme);
    report.alpha = spec.sampler->fusion->alpha;
    report.k_prime = spec.sampler->fusion->k_prime;
  }

  CostModel effective{cost.classifier_per_clip, {}, cost.fixed_overhead};
  CostScheme scheme = CostScheme::sampled;
  std::size_t cost_stride = 1;
  if (spec.kind == StrategyKind::dense || spec.kind == StrategyKind::oracle) {
    scheme = CostScheme::dense;
  } else if (spec.kind == StrategyKind::scsampler) {
    const auto mods = spec.sampler->modalities();
    effective = cost.restricted_to(mods);
    cost_stride = params.stride;
  }

  const std::size_t n = test.videos.size();
  std::vector<VideoEvalRecord> records(n);
  std::vector<char> top5_hit(n, 0);
  std::vector<double> costs(n);
  parallel_for(n, params.workers, [&](std::size_t idx) {
    const auto& v = test.videos[idx];
    const auto sel = select_for_video(f, v, idx, spec, params);
    std::vector<ClassDistribution> dists;
    dists.reserve(sel.indices.size());
    double true_sum = 0.0;
    for (std::size_t i : sel.indices) {
      dists.push_back(f.classify_clip(v, i));
      true_sum += dists.back().probs[v.label];
    }
    const auto mean = aggregate_mean(dists);
    auto& rec = records[idx];
    rec.id = v.id;
    rec.num_clips = v.num_clips;
    rec.true_label = v.label;
    rec.predicted = mean.top_class();
    rec.indices = sel.indices;
    rec.true_class_score_sum = true_sum;
    if (params.top5) {
      const auto order = rank_order(mean.probs);
      for (std::size_t r = 0; r < std::min<std::size_t>(5, order.size()); ++r) {
        if (order[r] == v.label) top5_hit[idx] = 1;
      }
    }
    costs[idx] = compute_cost(effective, v.num_clips, params.k, cost_stride, scheme);
  });

  std::size_t correct = 0;
  std::size_t correct5 = 0;
  double total_cost = 0.0;
  std::vector<SelectionResult> sels;
  std::vector<std::size_t> lengths;
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (records[idx].predicted == records[idx].true_label) ++correct;
    correct5 += static_cast<std::size_t>(top5_hit[idx]);
    total_cost += costs[idx];
    SelectionResult s;
    s.indices = records[idx].indices;
    sels.push_back(std::move(s));
    lengths.push_back(records[idx].num_clips);
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(n);
  if (params.top5) report.top5_accuracy = static_cast<double>(correct5) / static_cast<double>(n);
  report.gflops_per_video = total_cost / static_cast<double>(n);
  report.histogram = histogram_of_selections(sels, lengths, params.bins, test.dataset_id);
  report.videos = std::move(records);
  return report;
}

EmpiricalHistogram location_histogram(std::span<const EvalReport> reports, std::size_t bins) {
  std::vector<SelectionResult> sels;
  std::vector<std::size_t> lengths;
  for (const auto& r : reports) {
    for (const auto& v : r.videos) {
      SelectionResult s;
      s.indices = v.indices;
      sels.push_back(std::move(s));
      lengths.push_back(v.num_clips);
    }
  }
  return histogram_of_selections(sels, lengths, bins);
}

std::string_view sweep_parameter_name(SweepParameter p) {
  switch (p) {
    case SweepParameter::k:
      return "K";
    case SweepParameter::stride:
      return "N";
    case SweepParameter::alpha:
      return "alpha";
    case SweepParameter::k_prime:
      return "K_prime";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "K" || name == "k") return SweepParameter::k;
  if (name == "N" || name == "n" || name == "stride") return SweepParameter::stride;
  if (name == "alpha") return SweepParameter::alpha;
  if (name == "K_prime" || name == "k_prime" || name == "K'") return SweepParameter::k_prime;
  throw ConfigError("unknown sweep parameter '" + std::string(name) + "'");
}

std::vector<EvalReport> sweep(const DatasetManifest& test, const ClipClassifier& f,
                              const StrategySpec& spec, const EvalParams& params,
                              const CostModel& cost, const SweepSpec& sweep_spec) {
  if (sweep_spec.values.empty()) throw ConfigError("sweep has no values");
  std::vector<EvalReport> out;
  for (double value : sweep_spec.values) {
    EvalParams p = params;
    StrategySpec s = spec;
    SamplerModel sampler_copy;
    auto as_count = [value](std::string_view what) {
      if (!(value >= 1.0) || value != std::floor(value)) {
        throw ConfigError(std::string(what) + " sweep values must be positive integers");
      }
      return static_cast<std::size_t>(value);
    };
    switch (sweep_spec.parameter) {
      case SweepParameter::k:
        p.k = as_count("K");
        break;
      case SweepParameter::stride:
        p.stride = as_count("N");
        break;
      case SweepParameter::alpha:
      case SweepParameter::k_prime: {
        if (spec.sampler == nullptr || !spec.sampler->fusion) {
          throw ConfigError("alpha / K_prime sweeps need a fused scsampler strategy");
        }
        sampler_copy = *spec.sampler;
        if (sweep_spec.parameter == SweepParameter::alpha) {
          if (!sampler_copy.fusion->alpha) throw ConfigError("fusion scheme has no alpha");
          sampler_copy.fusion->alpha = value;
        } else {
          if (!sampler_copy.fusion->k_prime) throw ConfigError("fusion scheme has no K_prime");
          sampler_copy.fusion->k_prime = as_count("K_prime");
        }
        sampler_copy.fusion->check();
        s.sampler = &sampler_copy;
        break;
      }
    }
    out.push_back(evaluate_strategy(test, f, s, p, cost));
  }
  return out;
}

EvalReport cross_protocol(const SamplerModel& sampler, const DatasetManifest& eval_dataset,
                          const ClipClassifier& eval_classifier, const EvalParams& params,
                          const CostModel& cost) {
  if (eval_classifier.num_classes() != eval_dataset.num_classes()) {
    throw DataError("label-space mismatch: classifier '" + eval_classifier.describe() +
                    "' has " + std::to_string(eval_classifier.num_classes()) +
                    " classes, dataset '" + eval_dataset.dataset_id + "' has " +
                    std::to_string(eval_dataset.num_classes()));
  }
  StrategySpec spec{StrategyKind::scsampler, &sampler, nullptr};
  auto report = evaluate_strategy(eval_dataset, eval_classifier, spec, params, cost);
  report.provenance["sampler_classifier"] = sampler.trained_with_classifier;
  report.provenance["sampler_dataset"] = sampler.trained_on_dataset;
  report.provenance["eval_classifier"] = eval_classifier.describe();
  report.provenance["eval_dataset"] = eval_dataset.dataset_id;
  return report;
}

std::string report_to_jsonl(const EvalReport& r) {
  std::ostringstream out;
  ordered_json summary;
  summary["type"] = "summary";
  summary["dataset"] = r.dataset_id;
  summary["strategy"] = r.strategy;
  summary["classifier"] = r.classifier;
  summary["K"] = r.k;
  summary["N"] = r.stride;
  if (!r.fusion.empty()) summary["fusion"] = r.fusion;
  if (r.alpha) summary["alpha"] = *r.alpha;
  if (r.k_prime) summary["K_prime"] = *r.k_prime;
  summary["accuracy"] = r.accuracy;
  if (r.top5_accuracy) summary["top5_accuracy"] = *r.top5_accuracy;
  summary["gflops_per_video"] = r.gflops_per_video;
  summary["rank_convention"] = "0-based, lower is better";
  if (!r.provenance.empty()) summary["provenance"] = r.provenance;
  summary["histogram"] = r.histogram.bins;
  out << summary.dump() << '\n';
  for (const auto& v : r.videos) {
    ordered_json rec;
    rec["type"] = "video";
    rec["id"] = v.id;
    rec["label"] = v.true_label;
    rec["predicted"] = v.predicted;
    rec["indices"] = v.indices;
    out << rec.dump() << '\n';
  }
  return out.str();
}

void write_report_jsonl(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& r : reports) out << report_to_jsonl(r);
}

std::string reports_to_csv(std::span<const EvalReport> reports) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : reports) {
    out += r.strategy.find(',') == std::string::npos ? r.strategy : "\"" + r.strategy + "\"";
    out += ',' + std::to_string(r.k) + ',' + std::to_string(r.stride) + ',' +
           format_fixed(r.accuracy, 4) + ',' + format_fixed(r.gflops_per_video, 4) + '\n';
  }
  return out;
}

void write_reports_csv(std::span<const EvalReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << reports_to_csv(reports);
}

std::string selection_to_jsonl(const SelectionResult& s) {
  ordered_json j;
  j["video_id"] = s.video_id;
  j["strategy"] = s.strategy;
  j["K"] = s.k_requested;
  j["indices"] = s.indices;
  if (s.scores) j["scores"] = *s.scores;
  return j.dump();
}

SelectionResult parse_selection_jsonl(std::string_view line) {
  const auto j = nlohmann::json::parse(line);
  SelectionResult s;
  s.video_id = j.at("video_id").get<std::string>();
  s.strategy = j.at("strategy").get<std::string>();
  s.k_requested = j.at("K").get<std::size_t>();
  s.indices = j.at("indices").get<std::vector<std::size_t>>();
  if (j.contains("scores")) s.scores = j.at("scores").get<std::vector<double>>();
  return s;
}

}  // namespace scsampler
