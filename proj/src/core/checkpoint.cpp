#include "scsampler/checkpoint.hpp"

#include <fstream>

#include "scsampler/binary_io.hpp"
#include "scsampler/error.hpp"

namespace scsampler::io {

void write_model_file(const std::filesystem::path& path, const ModelFile& model) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(kModelMagic.data(), 4);
  write_u32(out, kFormatVersion);
  const char tag[4] = {static_cast<char>(model.kind), 0, 0, 0};
  out.write(tag, 4);
  write_u32(out, static_cast<std::uint32_t>(model.modality.size()));
  out.write(model.modality.data(), static_cast<std::streamsize>(model.modality.size()));
  write_u32(out, static_cast<std::uint32_t>(model.tensors.size()));
  for (const auto& t : model.tensors) {
    if (t.values.size() != std::size_t{t.rows} * t.cols) {
      throw std::invalid_argument("tensor payload does not match its shape");
    }
    write_u32(out, t.rows);
    write_u32(out, t.cols);
    for (double v : t.values) write_f64(out, v);
  }
  if (!out) throw DataError("write failed: " + path.string());
}

ModelFile read_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  try {
    Magic magic{};
    if (!in.read(magic.data(), 4) || magic != kModelMagic) {
      throw DataError("bad magic, expected 'SCLM'");
    }
    if (read_u32(in) != kFormatVersion) throw DataError("unsupported version");
    char tag[4];
    if (!in.read(tag, 4)) throw DataError("truncated header");
    const auto kind = static_cast<std::uint8_t>(tag[0]);
    if (kind > static_cast<std::uint8_t>(ModelKind::ac_classifier)) {
      throw DataError("unknown model kind " + std::to_string(kind));
    }
    ModelFile model;
    model.kind = static_cast<ModelKind>(kind);
    model.modality.resize(read_u32(in));
    if (!in.read(model.modality.data(), static_cast<std::streamsize>(model.modality.size()))) {
      throw DataError("truncated modality name");
    }
    const std::uint32_t count = read_u32(in);
    for (std::uint32_t k = 0; k < count; ++k) {
      Tensor t;
      t.rows = read_u32(in);
      t.cols = read_u32(in);
      t.values.resize(std::size_t{t.rows} * t.cols);
      for (double& v : t.values) v = read_f64(in);
      model.tensors.push_back(std::move(t));
    }
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes");
    return model;
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace scsampler::io
