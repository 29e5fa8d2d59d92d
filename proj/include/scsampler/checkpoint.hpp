#pragma once

// "SCLM" model container: magic, u32 version, u8 kind tag, 3 reserved bytes,
// u32 modality-name length + bytes, u32 tensor count, then per tensor
// u32 rows, u32 cols and rows*cols little-endian float64 values.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace scsampler::io {

enum class ModelKind : std::uint8_t {
  linear_classifier = 0,
  linear_sigmoid = 1,
  mlp_1hidden = 2,
  ac_classifier = 3,
};

struct Tensor {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<double> values;
};

struct ModelFile {
  ModelKind kind = ModelKind::linear_classifier;
  std::string modality;
  std::vector<Tensor> tensors;
};

void write_model_file(const std::filesystem::path& path, const ModelFile& model);
ModelFile read_model_file(const std::filesystem::path& path);

}  // namespace scsampler::io
