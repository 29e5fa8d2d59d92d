#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scsampler {

inline constexpr double kProbabilityTolerance = 1e-5;

struct LabelSpace {
  std::vector<std::string> names;

  std::size_t num_classes() const { return names.size(); }
  // Throws DataError unless C >= 2 and names are unique.
  void check() const;
  static LabelSpace numbered(std::size_t num_classes);

  bool operator==(const LabelSpace&) const = default;
};

struct ModalityDescriptor {
  std::string name;
  std::size_t dim = 0;
  // Consecutive clips summarized by one feature row (2 for audio-mel).
  std::size_t window_clips = 1;
  // Set when the final row covers fewer than window_clips clips.
  bool truncated_tail = false;

  bool operator==(const ModalityDescriptor&) const = default;
};

namespace modality {
inline constexpr std::string_view kMotion = "visual-md";
inline constexpr std::string_view kResidual = "visual-rgbr";
inline constexpr std::string_view kIFrame = "visual-if";
inline constexpr std::string_view kAudioMel = "audio-mel";
// Input of the expensive clip classifier in the synthetic benchmark.
inline constexpr std::string_view kRgb = "visual-rgb";
}  // namespace modality

namespace detail {
class Blob {
 public:
  virtual ~Blob() = default;
  virtual const float* data() const = 0;
};
}  // namespace detail

/// Read-only L x d float matrix, either owned or backed by a mapped file.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::shared_ptr<const detail::Blob> blob, std::size_t rows,
                std::size_t cols)
      : blob_(std::move(blob)), rows_(rows), cols_(cols) {}

  static FeatureMatrix from_values(std::size_t rows, std::size_t cols,
                                   std::vector<float> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return blob_ == nullptr; }

  std::span<const float> values() const {
    return {blob_->data(), rows_ * cols_};
  }
  std::span<const float> row(std::size_t i) const {
    return {blob_->data() + i * cols_, cols_};
  }

 private:
  std::shared_ptr<const detail::Blob> blob_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

struct VideoRecord {
  std::string id;
  std::size_t label = 0;
  std::size_t num_clips = 0;
  std::map<std::string, FeatureMatrix, std::less<>> features;
  std::optional<FeatureMatrix> scripted_scores;

  // Paths as written in the manifest, relative to its directory.
  std::map<std::string, std::string, std::less<>> feature_paths;
  std::optional<std::string> score_path;

  // Throws DataError naming the video and modality when absent.
  const FeatureMatrix& modality(std::string_view name) const;
  bool has_modality(std::string_view name) const {
    return features.find(name) != features.end();
  }
};

enum class Split { train, test };
std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct DatasetManifest {
  std::string dataset_id;
  Split split = Split::train;
  LabelSpace label_space;
  std::vector<ModalityDescriptor> modalities;
  std::vector<VideoRecord> videos;

  const ModalityDescriptor* find_modality(std::string_view name) const;
  std::size_t num_classes() const { return label_space.num_classes(); }
};

struct Violation {
  std::string video_id;
  std::string modality;
  std::string rule;
  std::string detail;
};

/// Parses and validates a manifest; feature-file headers are checked
/// eagerly and payloads are mapped on first access.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Serializes the manifest text only; feature files are not touched.
std::string manifest_to_string(const DatasetManifest& manifest);
void write_manifest(const DatasetManifest& manifest,
                    const std::filesystem::path& path);

/// Checks every type invariant across all videos. An empty result means the
/// dataset is valid. `required` lists modalities every video must carry.
std::vector<Violation> validate_dataset(
    const DatasetManifest& manifest,
    std::span<const std::string> required = {});

/// Clip centre mapped into (0, 1): (i + 0.5) / L.
double normalized_location(std::size_t index, std::size_t num_clips);

}  // namespace scsampler
