#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scsampler/classifier.hpp"
#include "scsampler/datamodel.hpp"
#include "scsampler/selection_result.hpp"

namespace scsampler {

inline constexpr std::size_t kDefaultHistogramBins = 100;

/// Scores that survived stride filtering, with their clip indices.
struct StridedScores {
  std::vector<std::size_t> index;
  std::vector<double> score;
};

/// Clip order best-first: higher score first, lower index on ties.
std::vector<std::size_t> rank_order(std::span<const double> scores);

/// Rank position of every clip under rank_order (0 = best).
std::vector<std::size_t> rank_positions(std::span<const double> scores);

SelectionResult select_topk(std::span<const double> scores, std::size_t k);
SelectionResult select_topk(const StridedScores& candidates, std::size_t k);

/// Keeps clips 0, N, 2N, ...; ceil(L / N) candidates survive.
StridedScores apply_stride(std::span<const double> scores, std::size_t stride);
std::vector<std::size_t> stride_candidates(std::size_t num_clips, std::size_t stride);

SelectionResult select_oracle(const ClipClassifier& f, const VideoRecord& video, std::size_t k);
SelectionResult select_random(std::size_t num_clips, std::size_t k, std::uint64_t seed);
SelectionResult select_uniform(std::size_t num_clips, std::size_t k);
SelectionResult select_dense(std::size_t num_clips);

struct EmpiricalHistogram {
  std::vector<double> bins;
  std::string built_from;

  std::size_t bin_of(double location) const;
};

/// Normalized histogram of clip locations (i + 0.5) / L over B equal bins.
EmpiricalHistogram histogram_of_selections(std::span<const SelectionResult> selections,
                                           std::span<const std::size_t> num_clips,
                                           std::size_t bins, std::string built_from = {});

/// Histogram of oracle top-K locations over a training set.
EmpiricalHistogram build_empirical_histogram(const DatasetManifest& train,
                                             const ClipClassifier& f, std::size_t k,
                                             std::size_t bins = kDefaultHistogramBins);

/// Draws clip positions from the histogram without replacement; after
/// 50 * K attempts the remainder is filled uniformly from unchosen clips.
SelectionResult select_empirical(const EmpiricalHistogram& hist, std::size_t num_clips,
                                 std::size_t k, std::uint64_t seed);

}  // namespace scsampler
