#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace scsampler {

/// Clips chosen for one video by one strategy. `indices` is strictly
/// increasing; `scores`, when present, is aligned with `indices`.
struct SelectionResult {
  std::string video_id;
  std::string strategy;
  std::vector<std::size_t> indices;
  std::optional<std::vector<double>> scores;
  std::size_t k_requested = 0;

  bool operator==(const SelectionResult&) const = default;
};

}  // namespace scsampler
