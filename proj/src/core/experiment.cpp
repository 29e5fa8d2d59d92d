#include "scsampler/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "scsampler/classifier.hpp"
#include "scsampler/error.hpp"

namespace scsampler {
namespace {

using json = nlohmann::json;

template <typename T>
T field(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

TrainingConfig parse_training(const json& j, TrainingConfig base, const std::string& where) {
  if (j.is_null()) return base;
  base.seed = field<std::uint64_t>(j, "seed", base.seed, where);
  base.epochs = field<std::size_t>(j, "epochs", base.epochs, where);
  base.learning_rate = field<double>(j, "learning_rate", base.learning_rate, where);
  base.batch_size = field<std::size_t>(j, "batch_size", base.batch_size, where);
  base.margin_eta = field<double>(j, "margin_eta", base.margin_eta, where);
  base.pairs_per_video_per_epoch =
      field<std::size_t>(j, "pairs_per_video_per_epoch", base.pairs_per_video_per_epoch, where);
  try {
    base.check();
  } catch (const ConfigError& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return base;
}

std::vector<ScorerSpec> parse_scorers(const json& j, const std::string& where) {
  std::vector<ScorerSpec> out;
  for (const auto& item : j) {
    ScorerSpec s;
    s.modality = field<std::string>(item, "modality", "", where);
    if (s.modality.empty()) throw ConfigError(where + ": scorer needs a modality");
    s.kind = parse_scorer_kind(field<std::string>(item, "kind", "linear-sigmoid", where));
    s.hidden_width = field<std::size_t>(item, "hidden_width", kDefaultHiddenWidth, where);
    out.push_back(std::move(s));
  }
  return out;
}

SynthConfig parse_synth(const json& j) {
  SynthConfig s;
  if (j.is_null()) return s;
  const std::string w = "synth";
  s.seed = field<std::uint64_t>(j, "seed", s.seed, w);
  if (j.contains("geometry_seed")) {
    s.geometry_seed = field<std::uint64_t>(j, "geometry_seed", 0, w);
  }
  if (j.contains("class_mean_seed")) {
    s.class_mean_seed = field<std::uint64_t>(j, "class_mean_seed", 0, w);
  }
  s.dataset_id = field<std::string>(j, "dataset_id", s.dataset_id, w);
  s.num_classes = field<std::size_t>(j, "num_classes", s.num_classes, w);
  s.train_videos_per_class =
      field<std::size_t>(j, "train_videos_per_class", s.train_videos_per_class, w);
  s.test_videos_per_class =
      field<std::size_t>(j, "test_videos_per_class", s.test_videos_per_class, w);
  if (j.contains("clips_per_video")) {
    const auto& c = j.at("clips_per_video");
    if (c.is_array() && c.size() == 2) {
      s.clips_min = c[0].get<std::size_t>();
      s.clips_max = c[1].get<std::size_t>();
    } else if (c.is_number_unsigned()) {
      s.clips_min = s.clips_max = c.get<std::size_t>();
    } else {
      throw ConfigError("synth.clips_per_video: expected a count or [min, max]");
    }
  }
  if (j.contains("modalities")) {
    s.modalities.clear();
    for (const auto& m : j.at("modalities")) {
      s.modalities.push_back({field<std::string>(m, "name", "", w + ".modalities"),
                              field<std::size_t>(m, "dim", 16, w + ".modalities")});
    }
  }
  s.salient_fraction = field<double>(j, "salient_fraction", s.salient_fraction, w);
  s.class_signal_strength = field<double>(j, "class_signal_strength", s.class_signal_strength, w);
  s.noise_sigma = field<double>(j, "noise_sigma", s.noise_sigma, w);
  s.audio_visual_correlation =
      field<double>(j, "audio_visual_correlation", s.audio_visual_correlation, w);
  s.position_bias = parse_position_bias(field<std::string>(
      j, "saliency_position_bias", std::string(position_bias_name(s.position_bias)), w));
  s.saliency_share = field<double>(j, "saliency_share", s.saliency_share, w);
  s.scene_sigma = field<double>(j, "scene_sigma", s.scene_sigma, w);
  return s;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string scorer_file(const char* group, std::size_t index, const std::string& modality) {
  return std::string(group) + "_" + std::to_string(index) + "_" + modality + ".sclm";
}

DatasetManifest load_checked(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw DataError("dataset manifest not found: " + path.string() +
                    " (run `generate` or set dataset.train/test)");
  }
  return load_manifest(path);
}

LinearClipClassifier load_trained_classifier(const ExperimentConfig& cfg) {
  const auto path = cfg.checkpoint_dir() / "classifier.sclm";
  if (!std::filesystem::exists(path)) {
    throw DataError("classifier checkpoint missing: " + path.string() +
                    " (run `train classifier` first)");
  }
  return load_classifier(path);
}

std::ofstream open_log(const ExperimentConfig& cfg, const std::string& name) {
  const auto dir = cfg.resolve(cfg.output_dir) / "logs";
  std::filesystem::create_directories(dir);
  std::ofstream log(dir / name, std::ios::binary | std::ios::trunc);
  if (!log) throw DataError("cannot write log " + (dir / name).string());
  return log;
}

void print_reports(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << std::left << std::setw(44) << "strategy" << std::setw(6) << "K" << std::setw(6) << "N"
      << std::setw(10) << "accuracy" << "gflops/video\n";
  for (const auto& r : reports) {
    out << std::left << std::setw(44) << r.strategy << std::setw(6) << r.k << std::setw(6)
        << r.stride << std::setw(10) << fmt(r.accuracy) << fmt(r.gflops_per_video, 3) << '\n';
  }
}

struct EvalContext {
  DatasetManifest train;
  DatasetManifest test;
  LinearClipClassifier classifier;
  std::optional<SamplerModel> sampler;
  std::optional<EmpiricalHistogram> histogram;
};

EvalContext load_eval_context(const ExperimentConfig& cfg) {
  auto test = load_checked(cfg.test_manifest_path());
  auto classifier = load_trained_classifier(cfg);
  const bool wants_empirical = std::find(cfg.strategies.begin(), cfg.strategies.end(),
                                         StrategyKind::empirical) != cfg.strategies.end();
  const bool wants_sampler = std::find(cfg.strategies.begin(), cfg.strategies.end(),
                                       StrategyKind::scsampler) != cfg.strategies.end();
  EvalContext ctx{wants_empirical ? load_checked(cfg.train_manifest_path()) : DatasetManifest{},
                  std::move(test), std::move(classifier), std::nullopt, std::nullopt};
  if (wants_sampler) ctx.sampler = load_sampler_model(cfg);
  if (wants_empirical) {
    ctx.histogram = build_empirical_histogram(ctx.train, ctx.classifier, cfg.k, cfg.histogram_bins);
  }
  return ctx;
}

StrategySpec spec_for(StrategyKind kind, const EvalContext& ctx) {
  StrategySpec s{kind, nullptr, nullptr};
  if (ctx.sampler) s.sampler = &*ctx.sampler;
  if (ctx.histogram) s.histogram = &*ctx.histogram;
  return s;
}

EvalParams params_for(const ExperimentConfig& cfg) {
  return EvalParams{cfg.k, cfg.stride, cfg.eval_seed, cfg.workers, cfg.histogram_bins, cfg.top5};
}

void write_reports(const ExperimentConfig& cfg, const std::string& stem,
                   const std::vector<EvalReport>& reports) {
  const auto dir = cfg.resolve(cfg.output_dir) / "reports";
  std::filesystem::create_directories(dir);
  write_report_jsonl(reports, dir / (stem + ".jsonl"));
  write_reports_csv(reports, dir / (stem + ".csv"));
}

}  // namespace

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  return (p.is_absolute() ? p : base_dir / p).lexically_normal();
}

std::filesystem::path ExperimentConfig::train_manifest_path() const {
  return train_manifest ? resolve(*train_manifest) : resolve(dataset_dir) / kTrainManifest;
}

std::filesystem::path ExperimentConfig::test_manifest_path() const {
  return test_manifest ? resolve(*test_manifest) : resolve(dataset_dir) / kTestManifest;
}

void ExperimentConfig::check() const {
  if (k == 0) throw ConfigError("K must be >= 1");
  if (stride == 0) throw ConfigError("N must be >= 1");
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (histogram_bins == 0) throw ConfigError("histogram_bins must be >= 1");
  if (fusion) fusion->check();
  cost.check();
  synth.check();
}

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  const std::string top = "config";
  cfg.output_dir = field<std::string>(j, "output_dir", cfg.output_dir.string(), top);
  cfg.workers = field<std::size_t>(j, "workers", cfg.workers, top);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    cfg.dataset_dir = field<std::string>(d, "dir", cfg.dataset_dir.string(), "dataset");
    if (d.contains("train")) cfg.train_manifest = field<std::string>(d, "train", "", "dataset");
    if (d.contains("test")) cfg.test_manifest = field<std::string>(d, "test", "", "dataset");
  }
  cfg.synth = parse_synth(j.value("synth", json()));

  const json cls = j.value("classifier", json::object());
  cfg.classifier_modality = field<std::string>(cls, "modality", cfg.classifier_modality, "classifier");
  TrainingConfig cls_defaults;
  cls_defaults.learning_rate = 0.05;
  cfg.classifier_training =
      parse_training(cls.value("training", json()), cls_defaults, "classifier.training");

  const json smp = j.value("sampler", json::object());
  const auto loss = field<std::string>(smp, "loss", "sal-rank", "sampler");
  if (loss == "ac") {
    cfg.sampler_loss = SamplerLoss::ac;
  } else if (loss == "sal-rank") {
    cfg.sampler_loss = SamplerLoss::sal_rank;
  } else {
    throw ConfigError("sampler.loss: expected 'ac' or 'sal-rank', got '" + loss + "'");
  }
  if (smp.contains("visual")) {
    cfg.visual_scorers = parse_scorers(smp.at("visual"), "sampler.visual");
  } else {
    cfg.visual_scorers = {{std::string(modality::kMotion)},
                          {std::string(modality::kResidual)},
                          {std::string(modality::kIFrame)}};
  }
  if (smp.contains("audio")) {
    cfg.audio_scorers = parse_scorers(smp.at("audio"), "sampler.audio");
  }
  TrainingConfig smp_defaults;
  smp_defaults.learning_rate = 0.5;
  smp_defaults.batch_size = 32;
  cfg.sampler_training =
      parse_training(smp.value("training", json()), smp_defaults, "sampler.training");
  cfg.joint_training = parse_training(j.value("joint_training", json()), cfg.sampler_training,
                                      "joint_training");

  if (j.contains("fusion") && !j.at("fusion").is_null()) {
    const auto& f = j.at("fusion");
    auto fc = FusionConfig::defaults(
        parse_fusion_scheme(field<std::string>(f, "scheme", "union-list", "fusion")));
    if (f.contains("alpha")) fc.alpha = field<double>(f, "alpha", 0.0, "fusion");
    if (f.contains("K_prime")) fc.k_prime = field<std::size_t>(f, "K_prime", 0, "fusion");
    cfg.fusion = fc;
  }

  if (j.contains("strategies")) {
    for (const auto& s : j.at("strategies")) cfg.strategies.push_back(parse_strategy(s.get<std::string>()));
  } else {
    cfg.strategies = {StrategyKind::dense,     StrategyKind::random,    StrategyKind::uniform,
                      StrategyKind::empirical, StrategyKind::scsampler, StrategyKind::oracle};
  }
  cfg.k = field<std::size_t>(j, "K", cfg.k, top);
  cfg.stride = field<std::size_t>(j, "N", cfg.stride, top);
  if (j.contains("seeds")) cfg.eval_seed = field<std::uint64_t>(j.at("seeds"), "eval", cfg.eval_seed, "seeds");
  cfg.histogram_bins = field<std::size_t>(j, "histogram_bins", cfg.histogram_bins, top);
  cfg.top5 = field<bool>(j, "top5", cfg.top5, top);

  if (j.contains("cost_model")) {
    const auto& c = j.at("cost_model");
    cfg.cost.classifier_per_clip = field<double>(c, "classifier_per_clip", 0.0, "cost_model");
    cfg.cost.fixed_overhead = field<double>(c, "fixed_overhead", 0.0, "cost_model");
    if (c.contains("sampler_per_clip")) {
      for (const auto& [name, value] : c.at("sampler_per_clip").items()) {
        cfg.cost.sampler_per_clip[name] = value.get<double>();
      }
    }
  }
  if (j.contains("sweep") && !j.at("sweep").is_null()) {
    const auto& s = j.at("sweep");
    SweepSpec spec;
    spec.parameter = parse_sweep_parameter(field<std::string>(s, "parameter", "K", "sweep"));
    spec.values = field<std::vector<double>>(s, "values", {}, "sweep");
    cfg.sweep = spec;
  }
  cfg.check();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open experiment config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str(), path.parent_path());
}

TrainTarget parse_train_target(std::string_view name) {
  if (name == "classifier") return TrainTarget::classifier;
  if (name == "sampler") return TrainTarget::sampler;
  if (name == "joint") return TrainTarget::joint;
  throw ConfigError("unknown train target '" + std::string(name) + "'");
}

std::uint64_t directory_checksum(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](unsigned char c) {
    h ^= c;
    h *= 0x100000001b3ULL;
  };
  for (const auto& f : files) {
    for (char c : std::filesystem::relative(f, dir).generic_string()) mix(static_cast<unsigned char>(c));
    std::ifstream in(f, std::ios::binary);
    char buf[1 << 14];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
      for (std::streamsize k = 0; k < in.gcount(); ++k) mix(static_cast<unsigned char>(buf[k]));
    }
  }
  return h;
}

void cmd_generate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto dir = cfg.resolve(cfg.dataset_dir);
  const auto ds = generate_dataset(cfg.synth, dir, cfg.workers);
  std::size_t clips = 0;
  for (const auto* m : {&ds.train, &ds.test}) {
    for (const auto& v : m->videos) clips += v.num_clips;
  }
  out << "dataset: " << cfg.synth.dataset_id << " -> " << dir.string() << '\n'
      << "videos: " << ds.train.videos.size() << " train, " << ds.test.videos.size() << " test\n"
      << "clips: " << clips << '\n'
      << "modalities:";
  for (const auto& m : ds.train.modalities) out << ' ' << m.name << "(d=" << m.dim << ")";
  char sum[32];
  std::snprintf(sum, sizeof sum, "%016llx",
                static_cast<unsigned long long>(directory_checksum(dir)));
  out << "\nchecksum: " << sum << '\n';
}

void cmd_train(const ExperimentConfig& cfg, TrainTarget target, std::ostream& out) {
  const auto train = load_checked(cfg.train_manifest_path());
  const auto ckpt = cfg.checkpoint_dir();
  std::filesystem::create_directories(ckpt);

  if (target == TrainTarget::classifier) {
    auto log = open_log(cfg, "train_classifier.log");
    TrainingConfig tc = cfg.classifier_training;
    tc.log = &log;
    const auto f = train_linear_classifier(train, cfg.classifier_modality, tc);
    save_classifier(f, ckpt / "classifier.sclm");
    out << "classifier (" << cfg.classifier_modality << ") -> "
        << (ckpt / "classifier.sclm").string() << '\n';
    return;
  }

  if (target == TrainTarget::sampler) {
    std::optional<LinearClipClassifier> f;
    if (cfg.sampler_loss == SamplerLoss::sal_rank) {
      const auto path = ckpt / "classifier.sclm";
      if (!std::filesystem::exists(path)) {
        throw ConfigError(
            "sal-rank sampler training derives its pseudo-labels from the clip classifier's "
            "true-class scores, but no classifier checkpoint exists at " +
            path.string() + "; run `train classifier` first or use loss=ac");
      }
      f = load_classifier(path);
    }
    std::filesystem::create_directories(ckpt / "sampler");
    auto log = open_log(cfg, "train_sampler.log");
    TrainingConfig tc = cfg.sampler_training;
    tc.log = &log;
    auto train_group = [&](const char* group, const std::vector<ScorerSpec>& specs) {
      for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        log << "{\"scorer\":\"" << group << "_" << i << "_" << s.modality << "\"}\n";
        SaliencyScorer scorer = cfg.sampler_loss == SamplerLoss::ac
                                    ? train_ac(train, s.modality, tc)
                                    : train_sal_rank(train, *f, s.modality, tc, s.kind, s.hidden_width);
        const auto path = ckpt / "sampler" / scorer_file(group, i, s.modality);
        save_scorer(scorer, path);
        out << group << " scorer " << scorer_kind_name(scorer.kind) << " (" << s.modality
            << ") -> " << path.string() << '\n';
      }
    };
    train_group("visual", cfg.visual_scorers);
    train_group("audio", cfg.audio_scorers);
    return;
  }

  // joint
  if (cfg.audio_scorers.empty() || cfg.visual_scorers.empty()) {
    throw ConfigError("joint training needs visual and audio scorers");
  }
  const auto f = load_trained_classifier(cfg);
  std::vector<SaliencyScorer> visual;
  for (std::size_t i = 0; i < cfg.visual_scorers.size(); ++i) {
    visual.push_back(load_scorer(ckpt / "sampler" /
                                 scorer_file("visual", i, cfg.visual_scorers[i].modality)));
  }
  if (cfg.audio_scorers.size() != 1) throw ConfigError("joint training supports one audio scorer");
  auto audio = load_scorer(ckpt / "sampler" / scorer_file("audio", 0, cfg.audio_scorers[0].modality));
  auto log = open_log(cfg, "train_joint.log");
  TrainingConfig tc = cfg.joint_training;
  tc.log = &log;
  auto [v2, a2] = train_joint(train, f, std::move(visual), std::move(audio), tc);
  std::filesystem::create_directories(ckpt / "joint");
  for (std::size_t i = 0; i < v2.size(); ++i) {
    save_scorer(v2[i], ckpt / "joint" / scorer_file("visual", i, v2[i].modality));
  }
  save_scorer(a2, ckpt / "joint" / scorer_file("audio", 0, a2.modality));
  out << "joint scorers -> " << (ckpt / "joint").string() << '\n';
}

SamplerModel load_sampler_model(const ExperimentConfig& cfg) {
  const bool joint = cfg.fusion && cfg.fusion->scheme == FusionScheme::joint_training;
  const auto dir = cfg.checkpoint_dir() / (joint ? "joint" : "sampler");
  SamplerModel model;
  auto load_group = [&](const char* group, const std::vector<ScorerSpec>& specs,
                        std::vector<SaliencyScorer>& dst) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const auto path = dir / scorer_file(group, i, specs[i].modality);
      if (!std::filesystem::exists(path)) {
        throw DataError("sampler checkpoint missing: " + path.string() + " (run `train " +
                        (joint ? "joint" : "sampler") + "` first)");
      }
      dst.push_back(load_scorer(path));
    }
  };
  load_group("visual", cfg.visual_scorers, model.visual);
  load_group("audio", cfg.audio_scorers, model.audio);
  if (model.visual.empty() && model.audio.empty()) throw ConfigError("sampler has no scorers");
  model.fusion = cfg.fusion;
  model.trained_with_classifier = "linear:" + cfg.classifier_modality;
  model.trained_on_dataset = cfg.synth.dataset_id;
  return model;
}

std::vector<EvalReport> cmd_evaluate(const ExperimentConfig& cfg, std::ostream& out) {
  const auto ctx = load_eval_context(cfg);
  std::vector<EvalReport> reports;
  for (auto kind : cfg.strategies) {
    reports.push_back(
        evaluate_strategy(ctx.test, ctx.classifier, spec_for(kind, ctx), params_for(cfg), cfg.cost));
  }
  write_reports(cfg, "evaluate", reports);
  print_reports(out, reports);
  return reports;
}

std::vector<EvalReport> cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  if (!cfg.sweep) throw ConfigError("config has no sweep section");
  const auto ctx = load_eval_context(cfg);
  std::vector<EvalReport> reports;
  for (auto kind : cfg.strategies) {
    const bool sampler_only = cfg.sweep->parameter != SweepParameter::k;
    if (sampler_only && kind != StrategyKind::scsampler) continue;
    auto rows = sweep(ctx.test, ctx.classifier, spec_for(kind, ctx), params_for(cfg), cfg.cost,
                      *cfg.sweep);
    reports.insert(reports.end(), rows.begin(), rows.end());
  }
  write_reports(cfg, "sweep", reports);
  print_reports(out, reports);
  return reports;
}

std::size_t cmd_validate(const ExperimentConfig& cfg, std::ostream& out) {
  std::vector<std::string> required;
  for (const auto* group : {&cfg.visual_scorers, &cfg.audio_scorers}) {
    for (const auto& s : *group) required.push_back(s.modality);
  }
  required.push_back(cfg.classifier_modality);
  std::size_t total = 0;
  for (const auto& path : {cfg.train_manifest_path(), cfg.test_manifest_path()}) {
    const auto m = load_checked(path);
    const auto violations = validate_dataset(m, required);
    out << path.string() << ": " << m.videos.size() << " videos, " << violations.size()
        << " violations\n";
    for (const auto& v : violations) {
      out << "  " << v.video_id << " [" << v.modality << "] " << v.rule << ": " << v.detail << '\n';
    }
    total += violations.size();
  }
  return total;
}

}  // namespace scsampler
