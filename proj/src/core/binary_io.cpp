#include "scsampler/binary_io.hpp"

#include <fcntl.h>
#include <sys/mman.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <mutex>

#include "scsampler/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payloads are read in place; big-endian hosts unsupported");

namespace scsampler::io {
namespace {

class MappedBlob final : public detail::Blob {
 public:
  MappedBlob(std::filesystem::path path, std::size_t bytes)
      : path_(std::move(path)), bytes_(bytes) {}

  ~MappedBlob() override {
    if (base_ != nullptr) ::munmap(base_, bytes_);
  }

  MappedBlob(const MappedBlob&) = delete;
  MappedBlob& operator=(const MappedBlob&) = delete;

  const float* data() const override {
    std::call_once(once_, [this] { map(); });
    return reinterpret_cast<const float*>(static_cast<const char*>(base_) +
                                          kHeaderBytes);
  }

 private:
  void map() const {
    const int fd = ::open(path_.c_str(), O_RDONLY);
    if (fd < 0) throw DataError("cannot open " + path_.string());
    void* base = ::mmap(nullptr, bytes_, PROT_READ, MAP_PRIVATE, fd, 0);
    ::close(fd);
    if (base == MAP_FAILED) throw DataError("cannot map " + path_.string());
    base_ = base;
  }

  std::filesystem::path path_;
  std::size_t bytes_;
  mutable std::once_flag once_;
  mutable void* base_ = nullptr;
};

}  // namespace

void write_u32(std::ostream& out, std::uint32_t value) {
  const char bytes[4] = {static_cast<char>(value & 0xff),
                         static_cast<char>((value >> 8) & 0xff),
                         static_cast<char>((value >> 16) & 0xff),
                         static_cast<char>((value >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    throw DataError("unexpected end of file");
  }
  return static_cast<std::uint32_t>(bytes[0]) |
         (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void write_f64(std::ostream& out, double value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

double read_f64(std::istream& in) {
  double value;
  if (!in.read(reinterpret_cast<char*>(&value), sizeof value)) {
    throw DataError("unexpected end of file");
  }
  return value;
}

std::string magic_string(const Magic& magic) {
  return std::string(magic.data(), magic.size());
}

void write_matrix_file(const std::filesystem::path& path, const Magic& magic,
                       std::size_t rows, std::size_t cols,
                       std::span<const float> values) {
  if (values.size() != rows * cols) {
    throw std::invalid_argument("matrix payload does not match rows x cols");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(magic.data(), 4);
  write_u32(out, kFormatVersion);
  write_u32(out, static_cast<std::uint32_t>(rows));
  write_u32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size_bytes()));
  if (!out) throw DataError("write failed: " + path.string());
}

MatrixHeader read_matrix_header(const std::filesystem::path& path,
                                const Magic& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  MatrixHeader header;
  if (!in.read(header.magic.data(), 4)) {
    throw DataError(path.string() + ": truncated header");
  }
  if (header.magic != expected) {
    throw DataError(path.string() + ": bad magic '" + magic_string(header.magic) +
                    "', expected '" + magic_string(expected) + "'");
  }
  header.version = read_u32(in);
  header.rows = read_u32(in);
  header.cols = read_u32(in);
  if (header.version != kFormatVersion) {
    throw DataError(path.string() + ": unsupported version " +
                    std::to_string(header.version));
  }
  const auto expected_bytes =
      kHeaderBytes + std::uintmax_t{header.rows} * header.cols * sizeof(float);
  if (std::filesystem::file_size(path) != expected_bytes) {
    throw DataError(path.string() + ": file length does not match header");
  }
  return header;
}

FeatureMatrix open_matrix_file(const std::filesystem::path& path,
                               const Magic& expected) {
  const MatrixHeader header = read_matrix_header(path, expected);
  const std::size_t bytes =
      kHeaderBytes + std::size_t{header.rows} * header.cols * sizeof(float);
  return FeatureMatrix(std::make_shared<MappedBlob>(path, bytes), header.rows,
                       header.cols);
}

}  // namespace scsampler::io
