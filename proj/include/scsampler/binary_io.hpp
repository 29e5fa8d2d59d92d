#pragma once

// Little-endian matrix containers shared by feature, score and checkpoint
// files: 4-byte magic, u32 version (=1), u32 rows, u32 cols, then
// rows*cols IEEE-754 values in row-major order.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "scsampler/datamodel.hpp"

namespace scsampler::io {

using Magic = std::array<char, 4>;

inline constexpr Magic kFeatureMagic{'S', 'C', 'F', 'T'};
inline constexpr Magic kScoreMagic{'S', 'C', 'S', 'C'};
inline constexpr Magic kModelMagic{'S', 'C', 'L', 'M'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;

struct MatrixHeader {
  Magic magic{};
  std::uint32_t version = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
};

void write_u32(std::ostream& out, std::uint32_t value);
std::uint32_t read_u32(std::istream& in);
void write_f64(std::ostream& out, double value);
double read_f64(std::istream& in);

void write_matrix_file(const std::filesystem::path& path, const Magic& magic,
                       std::size_t rows, std::size_t cols,
                       std::span<const float> values);

// Reads and checks the header, including that the file length matches.
MatrixHeader read_matrix_header(const std::filesystem::path& path,
                                const Magic& expected);

// Header checked now; the payload is memory-mapped on first access.
FeatureMatrix open_matrix_file(const std::filesystem::path& path,
                               const Magic& expected);

std::string magic_string(const Magic& magic);

}  // namespace scsampler::io
