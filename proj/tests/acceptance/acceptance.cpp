// Acceptance suite: one PASS/FAIL line per criterion. Trains the frozen
// synthetic benchmark from scratch under --work, so a full run takes a
// little while; every margin and tolerance is pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "scsampler/classifier.hpp"
#include "scsampler/evalharness.hpp"
#include "scsampler/experiment.hpp"
#include "scsampler/fusion.hpp"
#include "scsampler/saliency.hpp"
#include "scsampler/selection.hpp"
#include "support.hpp"

using namespace scsampler;
namespace fs = std::filesystem;

namespace {

// Frozen benchmark. Changing anything here invalidates the pinned margins.
constexpr const char* kFrozenConfig = R"({
  "output_dir": "out",
  "workers": 4,
  "dataset": {"dir": "data"},
  "synth": {
    "seed": 1, "dataset_id": "synth", "num_classes": 10,
    "train_videos_per_class": 20, "test_videos_per_class": 10, "clips_per_video": 60,
    "salient_fraction": 0.2, "saliency_position_bias": "edges",
    "class_signal_strength": 5.0, "noise_sigma": 1.0, "scene_sigma": 0.4,
    "saliency_share": 0.5, "audio_visual_correlation": 0.5
  },
  "classifier": {"modality": "visual-rgb"},
  "sampler": {
    "loss": "sal-rank",
    "visual": [{"modality": "visual-md"}, {"modality": "visual-rgbr"}, {"modality": "visual-if"}],
    "audio": [{"modality": "audio-mel"}]
  },
  "fusion": {"scheme": "union-list", "K_prime": 8},
  "strategies": ["dense", "random", "uniform", "empirical", "scsampler", "oracle"],
  "K": 10, "N": 1, "seeds": {"eval": 1},
  "cost_model": {"classifier_per_clip": 9.794642857142858,
                 "sampler_per_clip": {"visual-md": 0.15625, "visual-rgbr": 0.15625,
                                      "visual-if": 0.15625, "audio-mel": 0.15625}},
  "sweep": {"parameter": "N", "values": [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]}
})";

constexpr std::size_t kPlantedSegment = 12;  // ceil(0.2 * 60)

// Reference-run accuracies of the frozen benchmark (K = 10, N = 1).
constexpr double kRefScsampler = 1.00;
constexpr double kRefDense = 0.88;
constexpr double kRefRandom = 0.53;
constexpr double kRefUniform = 0.72;
constexpr double kRefEmpirical = 0.76;
constexpr double kRefCrossClassifier = 1.00;
constexpr double kRefCrossDataset = 1.00;
// Allowed regression of a pinned margin, in accuracy points.
constexpr double kMarginTolerance = 0.01;
constexpr double kStrideNoise = 0.01;
constexpr double kGradTolerance = 1e-4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail
            << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

using Indices = std::vector<std::size_t>;

// Values of f_y at the chosen clips, largest first.
std::vector<double> chosen_values(const std::vector<double>& fy, const Indices& idx) {
  std::vector<double> v;
  for (std::size_t i : idx) v.push_back(fy[i]);
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

// a dominates b elementwise after sorting; summing both in that order then
// gives sum(a) >= sum(b) with no rounding ambiguity.
bool dominates(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  double sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < b[k]) return false;
    sa += a[k];
    sb += b[k];
  }
  return sa >= sb;
}

struct Bench {
  ExperimentConfig cfg;
  DatasetManifest train;
  DatasetManifest test;
  LinearClipClassifier f{"", SoftmaxHead()};
  SamplerModel sampler;
  EmpiricalHistogram histogram;
  EvalParams params;
  std::map<std::string, EvalReport> reports;
  double seconds = 0.0;
};

ExperimentConfig write_config(const fs::path& dir, const std::string& text) {
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << text;
  return load_experiment_config(dir / "config.json");
}

Bench build_frozen(const fs::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Bench b;
  b.cfg = write_config(dir, kFrozenConfig);
  std::ostringstream sink;
  cmd_generate(b.cfg, sink);
  cmd_train(b.cfg, TrainTarget::classifier, sink);
  cmd_train(b.cfg, TrainTarget::sampler, sink);
  const auto reports = cmd_evaluate(b.cfg, sink);
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& r : reports) b.reports[r.strategy.substr(0, r.strategy.find('/'))] = r;

  b.train = load_manifest(b.cfg.train_manifest_path());
  b.test = load_manifest(b.cfg.test_manifest_path());
  b.f = load_classifier(b.cfg.checkpoint_dir() / "classifier.sclm");
  b.sampler = load_sampler_model(b.cfg);
  b.histogram = build_empirical_histogram(b.train, b.f, b.cfg.k, b.cfg.histogram_bins);
  b.params = EvalParams{b.cfg.k, 1, b.cfg.eval_seed, b.cfg.workers, b.cfg.histogram_bins, false};
  return b;
}

// ---------------------------------------------------------------- 1
Outcome oracle_dominance(const Bench& b) {
  std::size_t videos = 0, subsets = 0;
  for (std::size_t idx = 0; idx < b.test.videos.size(); ++idx) {
    const auto& v = b.test.videos[idx];
    const auto fy = label_scores(b.f, v, v.label);
    const auto best = chosen_values(fy, select_oracle(b.f, v, b.params.k).indices);
    for (auto kind : {StrategyKind::scsampler, StrategyKind::random, StrategyKind::uniform,
                      StrategyKind::empirical}) {
      const StrategySpec spec{kind, &b.sampler, &b.histogram};
      const auto sel = select_for_video(b.f, v, idx, spec, b.params);
      if (!dominates(best, chosen_values(fy, sel.indices))) {
        return {false, "video " + v.id + " beaten by " + std::string(strategy_name(kind))};
      }
    }
    ++videos;
  }
  Rng rng(20240601);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t L = 1 + rng.index(8);
    const std::size_t K = 1 + rng.index(std::min<std::size_t>(3, L));
    ScriptedClassifier g(4);
    g.add("w", testing::random_score_table(rng, L, 4));
    auto w = testing::make_video("w", rng.index(4), L);
    const auto fy = label_scores(g, w, w.label);
    const auto best = chosen_values(fy, select_oracle(g, w, K).indices);
    Indices cur;
    std::function<bool(std::size_t)> walk = [&](std::size_t from) {
      if (cur.size() == K) {
        ++subsets;
        return dominates(best, chosen_values(fy, cur));
      }
      for (std::size_t i = from; i < L; ++i) {
        cur.push_back(i);
        const bool ok = walk(i + 1);
        cur.pop_back();
        if (!ok) return false;
      }
      return true;
    };
    if (!walk(0)) return {false, "exhaustive subset beats oracle at L=" + std::to_string(L)};
  }
  return {true, std::to_string(videos) + " benchmark videos x 4 strategies, " +
                    std::to_string(subsets) + " enumerated subsets"};
}

// ---------------------------------------------------------------- 2
Outcome trend(const Bench& b) {
  const double scs = b.reports.at("scsampler").accuracy;
  struct Row {
    const char* name;
    double ref;
  };
  bool ok = b.seconds < 300.0;
  std::string detail = "scsampler=" + fmt(scs, 2);
  for (const Row& r : {Row{"dense", kRefDense}, Row{"random", kRefRandom},
                       Row{"uniform", kRefUniform}, Row{"empirical", kRefEmpirical}}) {
    const double acc = b.reports.at(r.name).accuracy;
    const double margin = scs - acc;
    const double pinned = kRefScsampler - r.ref;
    const bool row_ok = margin > 0.0 && margin >= pinned - kMarginTolerance - 1e-9;
    ok = ok && row_ok;
    detail += " " + std::string(r.name) + "=" + fmt(acc, 2) + " (margin " + fmt(margin, 2) +
              ", pinned " + fmt(pinned, 2) + ")";
  }
  detail += ", pipeline " + fmt(b.seconds, 1) + "s";
  return {ok, detail};
}

// ---------------------------------------------------------------- 3
template <typename Loss>
std::vector<double> central_diff(std::vector<double>& params, Loss loss, double eps = 1e-6) {
  std::vector<double> g(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double keep = params[p];
    params[p] = keep + eps;
    const double up = loss();
    params[p] = keep - eps;
    const double down = loss();
    params[p] = keep;
    g[p] = (up - down) / (2 * eps);
  }
  return g;
}

double rel_err(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double d2 = 0.0, n2 = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    d2 += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
    n2 += numeric[k] * numeric[k];
  }
  return std::sqrt(d2) / std::max(std::sqrt(n2), 1e-12);
}

// -log softmax(W x + b)_y evaluated directly in long double.
double ce_direct(const std::vector<double>& params, std::size_t C, std::size_t d,
                 const std::vector<float>& x, std::size_t y) {
  std::vector<long double> z(C);
  long double m = -1e300L;
  for (std::size_t c = 0; c < C; ++c) {
    z[c] = params[C * d + c];
    for (std::size_t k = 0; k < d; ++k) z[c] += static_cast<long double>(params[c * d + k]) * x[k];
    m = std::max(m, z[c]);
  }
  long double total = 0.0L;
  for (auto v : z) total += std::exp(v - m);
  return static_cast<double>(-(z[y] - m - std::log(total)));
}

Outcome gradients() {
  Rng rng(777);
  const double eta = 0.1;
  double worst_rank = 0.0, worst_ce = 0.0, worst_ac = 0.0, worst_joint = 0.0;
  std::size_t n_rank = 0, n_ce = 0, n_ac = 0, n_joint = 0;

  while (n_rank < 200) {
    const auto kind = n_rank % 2 ? ScorerKind::mlp_1hidden : ScorerKind::linear_sigmoid;
    const std::size_t d = 1 + rng.index(8);
    auto s = make_scorer(kind, "x", d, 1 + rng.index(6), rng.next());
    for (auto& p : s.params) p = 0.7 * rng.normal();
    const auto a = testing::gaussian_floats(rng, d), c = testing::gaussian_floats(rng, d);
    const int z = rng.index(2) ? 1 : -1;
    if (-z * (s.score(a) - s.score(c) + eta) < 1e-3) continue;  // inactive or at the kink
    const auto g = sal_rank_gradient(s, a, c, z, eta);
    const auto fd = central_diff(s.params, [&] { return sal_rank_loss(s.score(a), s.score(c), z, eta); });
    worst_rank = std::max(worst_rank, rel_err(g, fd));
    ++n_rank;
  }
  for (; n_ce < 100; ++n_ce) {
    const std::size_t C = 2 + rng.index(9), d = 1 + rng.index(10);
    SoftmaxHead h(C, d);
    for (auto& p : h.params) p = rng.normal();
    const auto x = testing::gaussian_floats(rng, d);
    const std::size_t y = rng.index(C);
    std::vector<double> g(h.params.size(), 0.0);
    h.accumulate_cross_entropy(x, y, 1.0, g);
    const auto fd = central_diff(h.params, [&] { return ce_direct(h.params, C, d, x, y); });
    worst_ce = std::max(worst_ce, rel_err(g, fd));
  }
  for (; n_ac < 100; ++n_ac) {
    const std::size_t C = 2 + rng.index(9), d = 1 + rng.index(10);
    auto s = make_scorer(ScorerKind::ac_classifier, "x", d, C, rng.next());
    for (auto& p : s.params) p = rng.normal();
    const auto x = testing::gaussian_floats(rng, d);
    const std::size_t y = rng.index(C);
    const auto g = cross_entropy_gradient(s, x, y);
    const auto fd = central_diff(s.params, [&] { return ce_direct(s.params, C, d, x, y); });
    worst_ac = std::max(worst_ac, rel_err(g, fd));
  }
  while (n_joint < 100) {
    const std::size_t nv = 1 + rng.index(3), d = 1 + rng.index(6);
    std::vector<SaliencyScorer> sc;
    for (std::size_t m = 0; m <= nv; ++m) {
      auto s = make_scorer(m % 2 ? ScorerKind::mlp_1hidden : ScorerKind::linear_sigmoid, "x", d, 4, rng.next());
      for (auto& p : s.params) p = 0.8 * rng.normal();
      sc.push_back(std::move(s));
    }
    std::vector<WeightedScorer> members;
    for (std::size_t m = 0; m < nv; ++m) members.push_back({&sc[m], 0.5 / static_cast<double>(nv)});
    members.push_back({&sc[nv], 0.5});
    std::vector<std::vector<float>> xi, xj;
    for (std::size_t m = 0; m <= nv; ++m) {
      xi.push_back(testing::gaussian_floats(rng, d));
      xj.push_back(testing::gaussian_floats(rng, d));
    }
    const int z = rng.index(2) ? 1 : -1;
    // (mean visual score + audio score) / 2, written out
    auto direct = [&] {
      double vi = 0.0, vj = 0.0;
      for (std::size_t m = 0; m < nv; ++m) {
        vi += sc[m].score(xi[m]);
        vj += sc[m].score(xj[m]);
      }
      const double si = (vi / static_cast<double>(nv) + sc[nv].score(xi[nv])) / 2.0;
      const double sj = (vj / static_cast<double>(nv) + sc[nv].score(xj[nv])) / 2.0;
      return std::max(-z * (si - sj + eta), 0.0);
    };
    if (direct() < 1e-3) continue;
    std::vector<std::span<const float>> ri(xi.begin(), xi.end()), rj(xj.begin(), xj.end());
    std::vector<std::vector<double>> grads;
    for (const auto& s : sc) grads.emplace_back(s.params.size(), 0.0);
    accumulate_ensemble_pair(members, ri, rj, z, eta, 1.0, grads);
    std::vector<double> flat_g, flat_fd;
    for (std::size_t m = 0; m <= nv; ++m) {
      const auto fd = central_diff(sc[m].params, direct);
      flat_g.insert(flat_g.end(), grads[m].begin(), grads[m].end());
      flat_fd.insert(flat_fd.end(), fd.begin(), fd.end());
    }
    worst_joint = std::max(worst_joint, rel_err(flat_g, flat_fd));
    ++n_joint;
  }
  const bool ok = worst_rank < kGradTolerance && worst_ce < kGradTolerance &&
                  worst_ac < kGradTolerance && worst_joint < kGradTolerance;
  std::ostringstream d;
  d.precision(2);
  d << std::scientific << "max rel err sal-rank " << worst_rank << " (" << n_rank << "), classifier CE "
    << worst_ce << " (" << n_ce << "), AC CE " << worst_ac << " (" << n_ac << "), joint " << worst_joint
    << " (" << n_joint << ")";
  return {ok, d.str()};
}

// ---------------------------------------------------------------- 4
Outcome cost_calibration() {
  const double cf = 1097.0 / 112.0;
  CostModel m;
  m.classifier_per_clip = cf;
  m.sampler_per_clip["visual-md"] = (168.0 - 10.0 * cf) / 112.0;
  const double dense = compute_cost(m, 112, 10, 1, CostScheme::dense);
  const double sampled = compute_cost(m, 112, 10, 1, CostScheme::sampled);
  // total over a test set of 100 videos of L = 112
  const double speedup = (100 * dense) / (100 * sampled);
  const bool ok = std::fabs(dense - 1097.0) <= 0.5 && std::fabs(sampled - 168.0) <= 0.5 && speedup > 6.0;
  return {ok, "dense " + fmt(dense, 3) + " GFLOPs, sampled " + fmt(sampled, 3) + " GFLOPs, speedup " +
                  fmt(speedup, 3) + "x"};
}

// ---------------------------------------------------------------- 5
Outcome stride_trend(const Bench& b) {
  const StrategySpec spec{StrategyKind::scsampler, &b.sampler, nullptr};
  const auto rows = sweep(b.test, b.f, spec, b.params, b.cfg.cost, *b.cfg.sweep);
  const auto& unstrided = b.reports.at("scsampler");
  bool same = rows[0].accuracy == unstrided.accuracy;
  for (std::size_t v = 0; v < unstrided.videos.size(); ++v) {
    same = same && rows[0].videos[v].indices == unstrided.videos[v].indices;
  }
  bool within = true;
  std::string curve;
  for (const auto& r : rows) {
    curve += " N=" + std::to_string(r.stride) + ":" + fmt(r.accuracy, 2);
    if (r.stride <= kPlantedSegment && std::fabs(r.accuracy - rows[0].accuracy) > kStrideNoise + 1e-9) {
      within = false;
    }
  }
  std::string detail = std::string(same ? "N=1 equals unstrided" : "N=1 differs from unstrided") +
                       "; within +-" + fmt(kStrideNoise, 2) + " for N<=" +
                       std::to_string(kPlantedSegment) + ": " + (within ? "yes" : "no") + ";" + curve;
  return {same && within, detail};
}

// ---------------------------------------------------------------- 6
Outcome identities(const Bench& b) {
  EvalParams all = b.params;
  all.k = 60;
  const auto& dense = b.reports.at("dense");
  std::size_t checked = 0;
  for (auto kind : {StrategyKind::scsampler, StrategyKind::random, StrategyKind::uniform,
                    StrategyKind::empirical, StrategyKind::oracle}) {
    const auto r = evaluate_strategy(b.test, b.f, {kind, &b.sampler, &b.histogram}, all, b.cfg.cost);
    for (std::size_t v = 0; v < r.videos.size(); ++v) {
      if (r.videos[v].predicted != dense.videos[v].predicted) {
        return {false, "K=L " + std::string(strategy_name(kind)) + " differs from dense on " + r.videos[v].id};
      }
    }
    ++checked;
  }
  for (const auto& v : b.test.videos) {
    const auto sv = score_video(b.sampler.visual, v);
    const auto sa = score_video(b.sampler.audio, v);
    for (std::size_t K : {1u, 5u, 10u, 30u}) {
      const auto tv = select_topk(sv, K).indices, ta = select_topk(sa, K).indices;
      if (fuse_convex_score(sv, sa, 1.0, K).indices != tv || fuse_convex_score(sv, sa, 0.0, K).indices != ta ||
          fuse_convex_list(sv, sa, 1.0, K).indices != tv || fuse_convex_list(sv, sa, 0.0, K).indices != ta) {
        return {false, "alpha degeneracy broken on " + v.id};
      }
    }
  }
  Rng rng(4242);
  std::size_t disjoint = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t L = 3 + rng.index(40);
    const std::size_t K = 2 + rng.index(L - 2);
    const std::size_t kp = 1 + rng.index(K - 1);
    const auto sv = testing::gaussian_doubles(rng, L);
    auto sa = testing::gaussian_doubles(rng, L);
    const auto top_v = select_topk(sv, kp).indices;
    for (std::size_t i : top_v) sa[i] = -100.0 - rng.uniform();  // audio ranks visual picks last
    Indices expected = top_v;
    for (std::size_t i : rank_order(sa)) {
      if (expected.size() == K) break;
      expected.push_back(i);
    }
    std::sort(expected.begin(), expected.end());  // selections are stored in clip order
    if (fuse_union_list(sv, sa, K, kp).indices != expected) {
      return {false, "union-list with disjoint lists differs at L=" + std::to_string(L)};
    }
    ++disjoint;
  }
  return {true, std::to_string(checked) + " strategies at K=L match dense; alpha in {0,1} on " +
                    std::to_string(b.test.videos.size()) + " videos; " + std::to_string(disjoint) +
                    " disjoint union-list cases"};
}

// ---------------------------------------------------------------- 7
std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  const std::vector<std::string> commands{"generate", "validate", "train classifier", "train sampler",
                                          "train joint", "evaluate", "sweep"};
  for (const char* run : {"a", "b"}) {
    const auto dir = work / run;
    fs::remove_all(dir);
    write_config(dir, kFrozenConfig);
    for (const auto& c : commands) {
      const std::string cmd = "\"" + cli + "\" " + c + " \"" + (dir / "config.json").string() +
                              "\" >> \"" + (dir / "stdout.txt").string() + "\" 2>&1";
      if (std::system(cmd.c_str()) != 0) return {false, "`" + c + "` failed in run " + run};
    }
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(work / "a")) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), work / "a"));
  }
  std::size_t count_b = 0;
  for (const auto& e : fs::recursive_directory_iterator(work / "b")) count_b += e.is_regular_file();
  if (files.size() != count_b) return {false, "artifact counts differ"};
  for (const auto& rel : files) {
    if (rel == "stdout.txt") continue;  // echoes the run directory
    if (file_bytes(work / "a" / rel) != file_bytes(work / "b" / rel)) {
      return {false, "differs: " + rel.string()};
    }
  }
  return {true, std::to_string(files.size() - 1) + " artifacts byte-identical across " +
                    std::to_string(commands.size()) + " commands"};
}

// ---------------------------------------------------------------- 8
Indices brute_ranks(const std::vector<double>& s) {
  Indices r(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) r[i] += s[j] > s[i] || (s[j] == s[i] && j < i);
  }
  return r;
}

std::set<std::size_t> brute_top(const std::vector<double>& s, std::size_t m) {
  const auto r = brute_ranks(s);
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (r[i] < m) out.insert(i);
  }
  return out;
}

Outcome brute_force() {
  Rng rng(99);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t L = 1 + rng.index(200), K = 1 + rng.index(L);
    std::vector<double> s(L);
    const bool ties = t % 2 == 0;
    for (auto& x : s) x = ties ? static_cast<double>(rng.index(8)) : rng.normal();
    Indices order(L);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    const std::set<std::size_t> expect(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K));
    const auto got = select_topk(s, K).indices;
    if (std::set<std::size_t>(got.begin(), got.end()) != expect || got.size() != K) {
      return {false, "select_topk differs at L=" + std::to_string(L)};
    }
  }
  std::size_t fusions = 0;
  for (int t = 0; t < 10000; ++t) {
    const std::size_t L = 2 + rng.index(11), K = 2 + rng.index(L - 1);
    std::vector<double> v(L), a(L);
    for (auto& x : v) x = static_cast<double>(rng.index(5));
    for (auto& x : a) x = static_cast<double>(rng.index(5));
    const auto rv = brute_ranks(v), ra = brute_ranks(a);

    const std::size_t kp = 1 + rng.index(K - 1);
    std::set<std::size_t> uni = brute_top(v, kp);
    for (std::size_t r = 0; uni.size() < K; ++r) {
      for (std::size_t i = 0; i < L; ++i) {
        if (ra[i] == r) uni.insert(i);
      }
    }
    const auto gu = fuse_union_list(v, a, K, kp).indices;
    if (std::set<std::size_t>(gu.begin(), gu.end()) != uni || gu.size() != K) {
      return {false, "union-list differs at L=" + std::to_string(L)};
    }

    std::vector<std::size_t> both;
    for (std::size_t m = K;; ++m) {
      const auto tv = brute_top(v, m), ta = brute_top(a, m);
      both.clear();
      std::set_intersection(tv.begin(), tv.end(), ta.begin(), ta.end(), std::back_inserter(both));
      if (both.size() >= K) break;
    }
    while (both.size() > K) {
      auto worst = both.begin();
      for (auto it = both.begin(); it != both.end(); ++it) {
        const auto c = rv[*it] + ra[*it], cw = rv[*worst] + ra[*worst];
        if (c > cw || (c == cw && *it > *worst)) worst = it;
      }
      both.erase(worst);
    }
    const auto gi = fuse_intersect_list(v, a, K).indices;
    if (std::set<std::size_t>(gi.begin(), gi.end()) != std::set<std::size_t>(both.begin(), both.end())) {
      return {false, "intersect-list differs at L=" + std::to_string(L)};
    }
    ++fusions;
  }
  return {true, "10000 top-K vectors, " + std::to_string(fusions) + " union/intersect instances"};
}

// ---------------------------------------------------------------- 9
std::string with_overrides(const std::string& extra_synth, const std::string& tail) {
  std::string cfg = kFrozenConfig;
  if (!extra_synth.empty()) {
    const auto at = cfg.find("\"audio_visual_correlation\": 0.5");
    cfg.insert(at, extra_synth + ", ");
  }
  if (!tail.empty()) cfg.insert(cfg.rfind('}'), ", " + tail);
  return cfg;
}

Outcome cross_protocols(const Bench& b, const fs::path& work) {
  std::ostringstream sink;
  // Sampler fit with pseudo-labels from a different classifier.
  const auto cc_dir = work / "cross_classifier";
  auto cc = write_config(cc_dir, with_overrides("", R"("dataset": {"dir": "../frozen/data"},
      "classifier": {"modality": "visual-rgbr"})"));
  cmd_train(cc, TrainTarget::classifier, sink);
  cmd_train(cc, TrainTarget::sampler, sink);
  auto cc_sampler = load_sampler_model(cc);

  // Sampler fit on a second dataset: same saliency geometry, new class means and videos.
  const auto cd_dir = work / "cross_dataset";
  auto cd = write_config(cd_dir, with_overrides(R"("geometry_seed": 1, "class_mean_seed": 2)", ""));
  cd.synth.seed = 2;
  cd.synth.dataset_id = "synth-b";
  std::ostringstream gen;
  cmd_generate(cd, gen);
  cmd_train(cd, TrainTarget::classifier, sink);
  cmd_train(cd, TrainTarget::sampler, sink);
  auto cd_sampler = load_sampler_model(cd);
  cd_sampler.trained_on_dataset = cd.synth.dataset_id;

  const auto rc = cross_protocol(cc_sampler, b.test, b.f, b.params, b.cfg.cost);
  const auto rd = cross_protocol(cd_sampler, b.test, b.f, b.params, b.cfg.cost);
  const double rnd = b.reports.at("random").accuracy, uni = b.reports.at("uniform").accuracy;
  bool ok = true;
  std::string detail;
  for (const auto& [name, r, ref] : {std::tuple{"cross-classifier", &rc, kRefCrossClassifier},
                                     std::tuple{"cross-dataset", &rd, kRefCrossDataset}}) {
    for (const auto& [base_name, base, base_ref] :
         {std::tuple{"random", rnd, kRefRandom}, std::tuple{"uniform", uni, kRefUniform}}) {
      const double margin = r->accuracy - base;
      const double pinned = ref - base_ref;
      ok = ok && margin > 0.0 && margin >= pinned - kMarginTolerance - 1e-9;
    }
    detail += std::string(detail.empty() ? "" : ", ") + name + "=" + fmt(r->accuracy, 2) + " (" +
              r->provenance.at("sampler_classifier") + " on " + r->provenance.at("sampler_dataset") + ")";
  }
  detail += " vs random=" + fmt(rnd, 2) + " uniform=" + fmt(uni, 2);
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::string cli;
  std::string work = "acceptance_work";
  app.add_option("--cli", cli, "scsampler executable")->required();
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = fs::absolute(work);
  fs::remove_all(root);
  fs::create_directories(root);

  const Bench bench = build_frozen(root / "frozen");
  report(1, "oracle dominance", oracle_dominance(bench));
  report(2, "trend reproduction", trend(bench));
  report(3, "gradient correctness", gradients());
  report(4, "cost-model calibration", cost_calibration());
  report(5, "stride trend", stride_trend(bench));
  report(6, "identity and degeneracy", identities(bench));
  report(7, "determinism", determinism(cli, root / "determinism"));
  report(8, "brute-force equivalence", brute_force());
  report(9, "cross-protocol trend", cross_protocols(bench, root));
  std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria failing")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
