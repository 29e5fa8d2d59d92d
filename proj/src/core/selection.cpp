#include "scsampler/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scsampler/error.hpp"
#include "scsampler/rng.hpp"

namespace scsampler {
namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

SelectionResult make_result(std::string strategy, std::vector<std::size_t> indices,
                            std::size_t k) {
  std::sort(indices.begin(), indices.end());
  SelectionResult out;
  out.strategy = std::move(strategy);
  out.indices = std::move(indices);
  out.k_requested = k;
  return out;
}

void require_positive_k(std::size_t k) {
  if (k == 0) throw std::invalid_argument("K must be >= 1");
}

}  // namespace

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  auto order = iota(scores.size());
  std::sort(order.begin(), order.end(), [&scores](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  return order;
}

std::vector<std::size_t> rank_positions(std::span<const double> scores) {
  const auto order = rank_order(scores);
  std::vector<std::size_t> pos(scores.size());
  for (std::size_t r = 0; r < order.size(); ++r) pos[order[r]] = r;
  return pos;
}

SelectionResult select_topk(std::span<const double> scores, std::size_t k) {
  StridedScores all{iota(scores.size()), {scores.begin(), scores.end()}};
  return select_topk(all, k);
}

SelectionResult select_topk(const StridedScores& candidates, std::size_t k) {
  require_positive_k(k);
  const std::size_t n = candidates.index.size();
  if (n == 0) throw std::invalid_argument("select_topk over no candidates");
  for (double s : candidates.score) {
    if (std::isnan(s)) throw NumericError("select_topk over a NaN score");
  }
  auto order = iota(n);
  const std::size_t take = std::min(k, n);
  const auto& idx = candidates.index;
  const auto& sc = candidates.score;
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      if (sc[a] != sc[b]) return sc[a] > sc[b];
                      return idx[a] < idx[b];
                    });
  order.resize(take);
  std::sort(order.begin(), order.end(), [&idx](std::size_t a, std::size_t b) {
    return idx[a] < idx[b];
  });

  SelectionResult out;
  out.strategy = "topk";
  out.k_requested = k;
  out.scores.emplace();
  for (std::size_t c : order) {
    out.indices.push_back(idx[c]);
    out.scores->push_back(sc[c]);
  }
  return out;
}

std::vector<std::size_t> stride_candidates(std::size_t num_clips, std::size_t stride) {
  if (stride == 0) throw std::invalid_argument("stride N must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < num_clips; i += stride) out.push_back(i);
  return out;
}

StridedScores apply_stride(std::span<const double> scores, std::size_t stride) {
  StridedScores out;
  out.index = stride_candidates(scores.size(), stride);
  for (std::size_t i : out.index) out.score.push_back(scores[i]);
  return out;
}

SelectionResult select_oracle(const ClipClassifier& f, const VideoRecord& video,
                              std::size_t k) {
  auto out = select_topk(label_scores(f, video, video.label), k);
  out.strategy = "oracle";
  out.video_id = video.id;
  return out;
}

SelectionResult select_random(std::size_t num_clips, std::size_t k, std::uint64_t seed) {
  require_positive_k(k);
  auto pool = iota(num_clips);
  const std::size_t take = std::min(k, num_clips);
  Rng rng(seed);
  // partial Fisher-Yates
  for (std::size_t i = 0; i < take; ++i) {
    std::swap(pool[i], pool[i + rng.index(num_clips - i)]);
  }
  pool.resize(take);
  return make_result("random", std::move(pool), k);
}

SelectionResult select_uniform(std::size_t num_clips, std::size_t k) {
  require_positive_k(k);
  if (k >= num_clips) return make_result("uniform", iota(num_clips), k);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < k; ++j) {
    const auto i = static_cast<std::size_t>(
        std::floor((static_cast<double>(j) + 0.5) * static_cast<double>(num_clips) /
                   static_cast<double>(k)));
    if (out.empty() || out.back() != i) out.push_back(std::min(i, num_clips - 1));
  }
  return make_result("uniform", std::move(out), k);
}

SelectionResult select_dense(std::size_t num_clips) {
  return make_result("dense", iota(num_clips), num_clips);
}

std::size_t EmpiricalHistogram::bin_of(double location) const {
  const auto b = static_cast<std::size_t>(std::floor(location * static_cast<double>(bins.size())));
  return std::min(b, bins.size() - 1);
}

EmpiricalHistogram histogram_of_selections(std::span<const SelectionResult> selections,
                                           std::span<const std::size_t> num_clips,
                                           std::size_t bins, std::string built_from) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  if (selections.size() != num_clips.size()) {
    throw std::invalid_argument("one clip count per selection is required");
  }
  EmpiricalHistogram hist{std::vector<double>(bins, 0.0), std::move(built_from)};
  double total = 0.0;
  for (std::size_t s = 0; s < selections.size(); ++s) {
    for (std::size_t i : selections[s].indices) {
      hist.bins[hist.bin_of(normalized_location(i, num_clips[s]))] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) throw std::invalid_argument("histogram of empty selections");
  for (double& b : hist.bins) b /= total;
  return hist;
}

EmpiricalHistogram build_empirical_histogram(const DatasetManifest& train,
                                             const ClipClassifier& f, std::size_t k,
                                             std::size_t bins) {
  if (train.videos.empty()) throw DataError("empirical histogram over an empty training set");
  std::vector<SelectionResult> picks;
  std::vector<std::size_t> lengths;
  for (const auto& v : train.videos) {
    picks.push_back(select_oracle(f, v, k));
    lengths.push_back(v.num_clips);
  }
  return histogram_of_selections(picks, lengths, bins, train.dataset_id);
}

SelectionResult select_empirical(const EmpiricalHistogram& hist, std::size_t num_clips,
                                 std::size_t k, std::uint64_t seed) {
  require_positive_k(k);
  if (hist.bins.empty()) throw std::invalid_argument("empty histogram");
  const std::size_t take = std::min(k, num_clips);
  std::vector<double> cumulative(hist.bins.size());
  std::partial_sum(hist.bins.begin(), hist.bins.end(), cumulative.begin());
  const double total = cumulative.back();
  const double B = static_cast<double>(hist.bins.size());

  Rng rng(seed);
  std::vector<bool> chosen(num_clips, false);
  std::vector<std::size_t> out;
  for (std::size_t attempt = 0; attempt < 50 * k && out.size() < take && total > 0.0;
       ++attempt) {
    const double r = rng.uniform() * total;
    auto bin = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    bin = std::min(bin, hist.bins.size() - 1);
    const double u = (static_cast<double>(bin) + rng.uniform()) / B;
    const auto raw = static_cast<std::size_t>(std::floor(u * static_cast<double>(num_clips)));
    const std::size_t i = std::min(raw, num_clips - 1);
    if (chosen[i]) continue;
    chosen[i] = true;
    out.push_back(i);
  }
  if (out.size() < take) {
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < num_clips; ++i) {
      if (!chosen[i]) rest.push_back(i);
    }
    for (std::size_t j : select_uniform(rest.size(), take - out.size()).indices) {
      out.push_back(rest[j]);
    }
  }
  return make_result("empirical", std::move(out), k);
}

}  // namespace scsampler
