#include "scsampler/training.hpp"

#include "scsampler/error.hpp"

namespace scsampler {

void TrainingConfig::check() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(margin_eta >= 0.0)) throw ConfigError("margin_eta must be >= 0");
  if (pairs_per_video_per_epoch == 0) {
    throw ConfigError("pairs_per_video_per_epoch must be positive");
  }
}

}  // namespace scsampler
