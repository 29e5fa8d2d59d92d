#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace scsampler {

struct TrainingConfig {
  std::uint64_t seed = 1;
  std::size_t epochs = 20;
  double learning_rate = 0.1;
  std::size_t batch_size = 64;
  // Ranking margin of the SAL-RANK hinge.
  double margin_eta = 0.1;
  std::size_t pairs_per_video_per_epoch = 16;
  // One JSON record per epoch when set.
  std::ostream* log = nullptr;

  // Throws ConfigError on non-positive fields.
  void check() const;
};

struct TrainingHistory {
  std::vector<double> epoch_loss;
  // Held-out pair-ranking accuracy for ranking objectives; empty otherwise.
  std::vector<double> heldout_metric;
  std::size_t selected_epoch = 0;
};

}  // namespace scsampler
