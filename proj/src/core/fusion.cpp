#include "scsampler/fusion.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "scsampler/error.hpp"
#include "scsampler/selection.hpp"

namespace scsampler {
namespace {

void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("fusion inputs differ in length: " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  if (a.empty()) throw std::invalid_argument("fusion over an empty video");
}

SelectionResult finish(std::string strategy, std::vector<std::size_t> indices, std::size_t k) {
  std::sort(indices.begin(), indices.end());
  SelectionResult out;
  out.strategy = std::move(strategy);
  out.indices = std::move(indices);
  out.k_requested = k;
  return out;
}

}  // namespace

std::string_view fusion_scheme_name(FusionScheme scheme) {
  switch (scheme) {
    case FusionScheme::convex_score:
      return "convex-score";
    case FusionScheme::convex_list:
      return "convex-list";
    case FusionScheme::intersect_list:
      return "intersect-list";
    case FusionScheme::union_list:
      return "union-list";
    case FusionScheme::joint_training:
      return "joint-training";
  }
  return "?";
}

FusionScheme parse_fusion_scheme(std::string_view name) {
  for (auto s : {FusionScheme::convex_score, FusionScheme::convex_list,
                 FusionScheme::intersect_list, FusionScheme::union_list,
                 FusionScheme::joint_training}) {
    if (fusion_scheme_name(s) == name) return s;
  }
  throw ConfigError("unknown fusion scheme '" + std::string(name) + "'");
}

FusionConfig FusionConfig::defaults(FusionScheme scheme) {
  FusionConfig cfg{scheme, std::nullopt, std::nullopt};
  if (scheme == FusionScheme::convex_score) cfg.alpha = kDefaultConvexScoreAlpha;
  if (scheme == FusionScheme::convex_list) cfg.alpha = kDefaultConvexListAlpha;
  if (scheme == FusionScheme::union_list) cfg.k_prime = kDefaultKPrime;
  return cfg;
}

void FusionConfig::check() const {
  const bool convex =
      scheme == FusionScheme::convex_score || scheme == FusionScheme::convex_list;
  if (convex != alpha.has_value()) {
    throw ConfigError("fusion alpha is required exactly for the convex schemes");
  }
  if (alpha && !(*alpha >= 0.0 && *alpha <= 1.0)) {
    throw ConfigError("fusion alpha must lie in [0, 1]");
  }
  if ((scheme == FusionScheme::union_list) != k_prime.has_value()) {
    throw ConfigError("fusion K_prime is required exactly for union-list");
  }
  if (k_prime && *k_prime == 0) throw ConfigError("fusion K_prime must be positive");
}

SelectionResult fuse_convex_score(std::span<const double> visual, std::span<const double> audio,
                                  double alpha, std::size_t k) {
  require_same_length(visual, audio);
  std::vector<double> combined(visual.size());
  for (std::size_t i = 0; i < combined.size(); ++i) {
    combined[i] = alpha * visual[i] + (1.0 - alpha) * audio[i];
  }
  auto out = select_topk(combined, k);
  out.strategy = "convex-score";
  return out;
}

SelectionResult fuse_convex_list(std::span<const double> visual, std::span<const double> audio,
                                 double alpha, std::size_t k) {
  require_same_length(visual, audio);
  if (k == 0) throw std::invalid_argument("K must be >= 1");
  const auto rv = rank_positions(visual);
  const auto ra = rank_positions(audio);
  std::vector<double> combined(visual.size());
  for (std::size_t i = 0; i < combined.size(); ++i) {
    combined[i] = alpha * static_cast<double>(rv[i]) + (1.0 - alpha) * static_cast<double>(ra[i]);
  }
  std::vector<std::size_t> order(visual.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (combined[a] != combined[b]) return combined[a] < combined[b];
    if (rv[a] != rv[b]) return rv[a] < rv[b];
    return a < b;
  });
  order.resize(std::min(k, order.size()));
  auto out = finish("convex-list", std::move(order), k);
  out.scores.emplace();
  for (std::size_t i : out.indices) out.scores->push_back(combined[i]);
  return out;
}

SelectionResult fuse_intersect_list(std::span<const double> visual,
                                    std::span<const double> audio, std::size_t k,
                                    IntersectTrace* trace) {
  require_same_length(visual, audio);
  const std::size_t L = visual.size();
  if (k == 0) throw std::invalid_argument("K must be >= 1");
  if (k > L) {
    throw std::invalid_argument("intersect-list needs K <= L (K=" + std::to_string(k) +
                                ", L=" + std::to_string(L) + ")");
  }
  const auto rv = rank_positions(visual);
  const auto ra = rank_positions(audio);

  // A clip is in both top-m lists iff max(rv, ra) < m.
  std::size_t m = k;
  std::vector<std::size_t> members;
  for (;; ++m) {
    members.clear();
    for (std::size_t i = 0; i < L; ++i) {
      if (rv[i] < m && ra[i] < m) members.push_back(i);
    }
    if (members.size() >= k) break;
  }
  if (trace != nullptr) trace->final_m = m;

  // Best combined rank first; among equals the lower index survives.
  std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
    const auto ca = rv[a] + ra[a];
    const auto cb = rv[b] + ra[b];
    if (ca != cb) return ca < cb;
    return a < b;
  });
  members.resize(k);
  return finish("intersect-list", std::move(members), k);
}

SelectionResult fuse_union_list(std::span<const double> visual, std::span<const double> audio,
                                std::size_t k, std::size_t k_prime) {
  require_same_length(visual, audio);
  const std::size_t L = visual.size();
  if (!(k_prime > 0 && k_prime < k && k <= L)) {
    throw std::invalid_argument("union-list needs 0 < K' < K <= L (K'=" +
                                std::to_string(k_prime) + ", K=" + std::to_string(k) +
                                ", L=" + std::to_string(L) + ")");
  }
  const auto ov = rank_order(visual);
  std::vector<bool> chosen(L, false);
  std::vector<std::size_t> picks(ov.begin(), ov.begin() + static_cast<std::ptrdiff_t>(k_prime));
  for (std::size_t i : picks) chosen[i] = true;
  for (std::size_t i : rank_order(audio)) {
    if (picks.size() == k) break;
    if (!chosen[i]) {
      chosen[i] = true;
      picks.push_back(i);
    }
  }
  return finish("union-list", std::move(picks), k);
}

SelectionResult fuse_mean(std::span<const double> visual, std::span<const double> audio,
                          std::size_t k) {
  auto out = fuse_convex_score(visual, audio, 0.5, k);
  out.strategy = "joint-training";
  return out;
}

SelectionResult fuse(const FusionConfig& cfg, std::span<const double> visual,
                     std::span<const double> audio, std::size_t k) {
  cfg.check();
  switch (cfg.scheme) {
    case FusionScheme::convex_score:
      return fuse_convex_score(visual, audio, *cfg.alpha, k);
    case FusionScheme::convex_list:
      return fuse_convex_list(visual, audio, *cfg.alpha, k);
    case FusionScheme::intersect_list:
      return fuse_intersect_list(visual, audio, k);
    case FusionScheme::union_list:
      return fuse_union_list(visual, audio, k, *cfg.k_prime);
    case FusionScheme::joint_training:
      return fuse_mean(visual, audio, k);
  }
  throw ConfigError("unknown fusion scheme");
}

std::pair<std::vector<SaliencyScorer>, SaliencyScorer> train_joint(
    const DatasetManifest& train, const ClipClassifier& f, std::vector<SaliencyScorer> visual,
    SaliencyScorer audio, const TrainingConfig& cfg, TrainingHistory* history) {
  if (visual.empty()) throw ConfigError("joint training needs at least one visual scorer");
  std::vector<WeightedScorer> members;
  const double w_visual = 0.5 / static_cast<double>(visual.size());
  for (auto& s : visual) members.push_back({&s, w_visual});
  members.push_back({&audio, 0.5});
  train_ranking_ensemble(train, f, members, cfg, history);
  return {std::move(visual), std::move(audio)};
}

}  // namespace scsampler
