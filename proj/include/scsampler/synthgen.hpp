#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scsampler/datamodel.hpp"

namespace scsampler {

enum class PositionBias { uniform, edges };

std::string_view position_bias_name(PositionBias bias);
PositionBias parse_position_bias(std::string_view name);

struct SynthModality {
  std::string name;
  std::size_t dim = 16;
};

/// Synthetic untrimmed-video benchmark with a planted contiguous salient
/// segment per video.
///
/// Salient clips of class c draw each visual modality from N(m_c, sigma^2 I);
/// every other clip draws from a background N(zeta_v, sigma^2 I) whose centre
/// zeta_v ~ N(0, scene_sigma^2 I) is fixed per video and marginally shared
/// by all videos. Class means have norm mu and put a `saliency_share`
/// fraction of their energy on one direction common to all classes. Audio
/// rows summarize two-clip windows: r * window signal + (1 - r) * noise.
struct SynthConfig {
  std::uint64_t seed = 1;
  // Seed the direction shared by all class means and the class-specific
  // directions; both default to `seed`. Datasets with the same geometry
  // seed but different class-mean seeds share saliency geometry but not
  // classes.
  std::optional<std::uint64_t> geometry_seed;
  std::optional<std::uint64_t> class_mean_seed;
  std::string dataset_id = "synth";
  std::size_t num_classes = 10;
  std::size_t train_videos_per_class = 20;
  std::size_t test_videos_per_class = 10;
  std::size_t clips_min = 60;
  std::size_t clips_max = 60;
  std::vector<SynthModality> modalities = default_modalities();
  double salient_fraction = 0.2;
  double class_signal_strength = 5.0;
  double noise_sigma = 1.0;
  double audio_visual_correlation = 0.5;
  PositionBias position_bias = PositionBias::edges;
  double saliency_share = 0.5;
  double scene_sigma = 0.4;

  static std::vector<SynthModality> default_modalities();
  // Throws ConfigError naming the offending field.
  void check() const;
};

struct PlantedSegment {
  std::size_t start = 0;
  std::size_t length = 0;
};

struct GeneratedDataset {
  DatasetManifest train;
  DatasetManifest test;
  std::map<std::string, std::vector<bool>, std::less<>> masks;
  std::map<std::string, PlantedSegment, std::less<>> segments;

  /// True exactly on the planted salient clips; throws DataError for unknown ids.
  const std::vector<bool>& saliency_mask(std::string_view video_id) const;
};

inline constexpr std::string_view kTrainManifest = "train.manifest";
inline constexpr std::string_view kTestManifest = "test.manifest";
inline constexpr std::string_view kTrainMasks = "train.masks";
inline constexpr std::string_view kTestMasks = "test.masks";

/// Writes manifests, feature files and mask files under `dir` and returns
/// the loaded result. Output bytes depend only on the config.
GeneratedDataset generate_dataset(const SynthConfig& cfg, const std::filesystem::path& dir,
                                  std::size_t workers = 1);

/// Parses a mask file: one "video_id bits" line per video.
std::map<std::string, std::vector<bool>, std::less<>> read_masks(
    const std::filesystem::path& path);

}  // namespace scsampler
