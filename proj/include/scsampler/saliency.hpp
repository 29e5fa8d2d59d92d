#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scsampler/classifier.hpp"
#include "scsampler/datamodel.hpp"
#include "scsampler/training.hpp"

namespace scsampler {

enum class ScorerKind { linear_sigmoid, mlp_1hidden, ac_classifier };

std::string_view scorer_kind_name(ScorerKind kind);
ScorerKind parse_scorer_kind(std::string_view name);

inline constexpr std::size_t kDefaultHiddenWidth = 16;

/// Lightweight clip scorer s(phi) in [0, 1] over one modality.
///
/// Parameters live in one flat vector so training and gradient checks can
/// treat every kind uniformly:
///   linear-sigmoid  [w (d), b]
///   mlp-1hidden     [W1 (h x d), b1 (h), w2 (h), b2]
///   ac-classifier   [W (C x d), b (C)]; score = max_c softmax(W phi + b)_c
struct SaliencyScorer {
  ScorerKind kind = ScorerKind::linear_sigmoid;
  std::string modality;
  std::size_t dim = 0;
  // Hidden units (mlp) or classes (ac); unused for linear-sigmoid.
  std::size_t width = 0;
  std::vector<double> params;

  static std::size_t param_count(ScorerKind kind, std::size_t dim, std::size_t width);

  double score(std::span<const float> phi) const;

  /// Returns s(phi) and adds weight * ds/dparams into grad.
  double score_and_accumulate(std::span<const float> phi, double weight,
                              std::span<double> grad) const;
};

/// Seeded initialization: U[-0.01, 0.01] for the linear and ac kinds;
/// fan-in scaled uniform for the mlp.
SaliencyScorer make_scorer(ScorerKind kind, std::string modality, std::size_t dim,
                           std::size_t width, std::uint64_t seed);

SaliencyScorer scorer_from_head(std::string modality, const SoftmaxHead& head);

double score_clip(const SaliencyScorer& scorer, const VideoRecord& video, std::size_t clip);

/// Max class probability of an ac-classifier head.
double ac_saliency(const SaliencyScorer& scorer, std::span<const float> phi);

struct PseudoPair {
  std::string video_id;
  std::size_t i = 0;
  std::size_t j = 0;
  int z = -1;
  bool operator==(const PseudoPair&) const = default;
};

/// `count` ordered pairs (i != j) drawn uniformly from `seed`; z = +1 iff
/// label_scores[i] > label_scores[j] strictly. Fewer than two clips yields
/// no pairs.
std::vector<PseudoPair> make_pseudo_pairs(std::string_view video_id,
                                          std::span<const double> label_scores,
                                          std::size_t count, std::uint64_t seed);

std::vector<PseudoPair> make_pseudo_pairs(const ClipClassifier& f, const VideoRecord& video,
                                          const TrainingConfig& cfg);

/// max(-z (s_i - s_j + eta), 0)
double sal_rank_loss(double s_i, double s_j, int z, double eta);

/// Subgradient of sal_rank_loss w.r.t. the scorer parameters. Zero when the
/// hinge is inactive or exactly at the kink.
std::vector<double> sal_rank_gradient(const SaliencyScorer& scorer,
                                      std::span<const float> phi_i,
                                      std::span<const float> phi_j, int z, double eta);

/// Softmax-loss gradient of an ac-classifier scorer for one clip.
std::vector<double> cross_entropy_gradient(const SaliencyScorer& scorer,
                                           std::span<const float> phi, std::size_t label);

SaliencyScorer train_ac(const DatasetManifest& train, const std::string& modality,
                        const TrainingConfig& cfg, TrainingHistory* history = nullptr);

/// One member of a ranking ensemble: its score enters the combined score
/// with the given weight.
struct WeightedScorer {
  SaliencyScorer* scorer;
  double weight;
};

/// SAL-RANK loss of one pair under the weighted combined score
/// sum_m weight_m * s_m; adds scale * dloss/dparams of member m into
/// grads[m]. phi_i[m] / phi_j[m] are the clips' features for member m.
double accumulate_ensemble_pair(std::span<const WeightedScorer> members,
                                std::span<const std::span<const float>> phi_i,
                                std::span<const std::span<const float>> phi_j, int z,
                                double eta, double scale,
                                std::vector<std::vector<double>>& grads);

/// SAL-RANK SGD on the weighted combination of `members`. Pseudo-pairs are
/// regenerated every epoch; 10% of the training videos are held out and the
/// parameters with the best held-out pair-ranking accuracy are kept.
void train_ranking_ensemble(const DatasetManifest& train, const ClipClassifier& f,
                            std::span<WeightedScorer> members, const TrainingConfig& cfg,
                            TrainingHistory* history = nullptr);

SaliencyScorer train_sal_rank(const DatasetManifest& train, const ClipClassifier& f,
                              const std::string& modality, const TrainingConfig& cfg,
                              ScorerKind kind = ScorerKind::linear_sigmoid,
                              std::size_t hidden_width = kDefaultHiddenWidth,
                              TrainingHistory* history = nullptr);

/// Fraction of clip pairs with distinct label scores that the scores order
/// the same way.
double pair_ranking_accuracy(std::span<const double> saliency,
                             std::span<const double> label_scores);

/// Per-clip mean of the scorers' outputs, over all clips or the given ones.
std::vector<double> score_video(std::span<const SaliencyScorer> scorers,
                                const VideoRecord& video);
std::vector<double> score_video(std::span<const SaliencyScorer> scorers,
                                const VideoRecord& video, std::span<const std::size_t> clips);

void save_scorer(const SaliencyScorer& scorer, const std::filesystem::path& path);
SaliencyScorer load_scorer(const std::filesystem::path& path);

}  // namespace scsampler
