#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scsampler/datamodel.hpp"
#include "scsampler/rng.hpp"

namespace scsampler::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("scsampler_" + tag + "_" + std::to_string(splitmix64(++counter ^ reinterpret_cast<std::uintptr_t>(this)) % 1000000007));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::vector<float> gaussian_floats(Rng& rng, std::size_t n, double sigma = 1.0) {
  std::vector<float> out(n);
  for (auto& x : out) x = static_cast<float>(sigma * rng.normal());
  return out;
}

inline std::vector<double> gaussian_doubles(Rng& rng, std::size_t n, double sigma = 1.0) {
  std::vector<double> out(n);
  for (auto& x : out) x = sigma * rng.normal();
  return out;
}

inline VideoRecord make_video(std::string id, std::size_t label, std::size_t num_clips) {
  VideoRecord v;
  v.id = std::move(id);
  v.label = label;
  v.num_clips = num_clips;
  return v;
}

inline void attach(VideoRecord& v, const std::string& modality, std::size_t dim,
                   std::vector<float> values) {
  v.features[modality] = FeatureMatrix::from_values(v.num_clips, dim, std::move(values));
}

// Row-major L x C probability table; each row is a softmax of Gaussian logits.
inline FeatureMatrix random_score_table(Rng& rng, std::size_t rows, std::size_t classes) {
  std::vector<float> values(rows * classes);
  for (std::size_t i = 0; i < rows; ++i) {
    double total = 0.0;
    std::vector<double> e(classes);
    for (auto& x : e) {
      x = std::exp(rng.normal());
      total += x;
    }
    for (std::size_t c = 0; c < classes; ++c) values[i * classes + c] = static_cast<float>(e[c] / total);
  }
  return FeatureMatrix::from_values(rows, classes, std::move(values));
}

inline DatasetManifest make_manifest(std::string id, std::size_t num_classes,
                                     std::vector<ModalityDescriptor> modalities) {
  DatasetManifest m;
  m.dataset_id = std::move(id);
  m.label_space = LabelSpace::numbered(num_classes);
  m.modalities = std::move(modalities);
  return m;
}

}  // namespace scsampler::testing
