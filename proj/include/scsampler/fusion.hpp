#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "scsampler/classifier.hpp"
#include "scsampler/saliency.hpp"
#include "scsampler/selection_result.hpp"

namespace scsampler {

enum class FusionScheme { convex_score, convex_list, intersect_list, union_list, joint_training };

std::string_view fusion_scheme_name(FusionScheme scheme);
FusionScheme parse_fusion_scheme(std::string_view name);

inline constexpr double kDefaultConvexScoreAlpha = 0.9;
inline constexpr double kDefaultConvexListAlpha = 0.8;
inline constexpr std::size_t kDefaultKPrime = 8;

struct FusionConfig {
  FusionScheme scheme = FusionScheme::union_list;
  std::optional<double> alpha;
  std::optional<std::size_t> k_prime;

  /// Scheme with its tuned default hyper-parameter.
  static FusionConfig defaults(FusionScheme scheme);
  // Throws ConfigError when alpha / K' do not match the scheme.
  void check() const;
};

/// top-K of alpha * visual + (1 - alpha) * audio.
SelectionResult fuse_convex_score(std::span<const double> visual, std::span<const double> audio,
                                  double alpha, std::size_t k);

/// K smallest alpha * rank_V + (1 - alpha) * rank_A; ties by rank_V, then index.
SelectionResult fuse_convex_list(std::span<const double> visual, std::span<const double> audio,
                                 double alpha, std::size_t k);

struct IntersectTrace {
  std::size_t final_m = 0;
};

/// Grows m from K until the top-m lists share at least K clips, then trims
/// the clips with the largest rank_V + rank_A (higher index first on ties).
SelectionResult fuse_intersect_list(std::span<const double> visual,
                                    std::span<const double> audio, std::size_t k,
                                    IntersectTrace* trace = nullptr);

/// Visual top-K' plus the best audio-ranked clips not already chosen.
SelectionResult fuse_union_list(std::span<const double> visual, std::span<const double> audio,
                                std::size_t k, std::size_t k_prime);

/// top-K of (visual + audio) / 2, the inference rule of joint training.
SelectionResult fuse_mean(std::span<const double> visual, std::span<const double> audio,
                          std::size_t k);

SelectionResult fuse(const FusionConfig& cfg, std::span<const double> visual,
                     std::span<const double> audio, std::size_t k);

/// Fine-tunes the visual and audio scorers with SAL-RANK on
/// (mean(visual scores) + audio score) / 2.
std::pair<std::vector<SaliencyScorer>, SaliencyScorer> train_joint(
    const DatasetManifest& train, const ClipClassifier& f,
    std::vector<SaliencyScorer> visual, SaliencyScorer audio, const TrainingConfig& cfg,
    TrainingHistory* history = nullptr);

}  // namespace scsampler
