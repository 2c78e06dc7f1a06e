#include "purebox/nn/weights_io.hpp"

#include <cstdint>
#include <fstream>

#include "purebox/core/error.hpp"

namespace purebox::nn {

namespace {
constexpr std::uint64_t kMagic = 0x50425857'54533130ull;  // "PBXWTS10"
}

void write_weights_file(const std::string& path, const std::vector<MatX>& weights) {
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(ErrorKind::IoError, "cannot write " + path);
  f.write(reinterpret_cast<const char*>(&kMagic), sizeof(kMagic));
  const std::uint32_t n = static_cast<std::uint32_t>(weights.size());
  f.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (const auto& w : weights) {
    const std::uint32_t rows = static_cast<std::uint32_t>(w.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(w.cols());
    f.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    f.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    f.write(reinterpret_cast<const char*>(w.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * w.size()));
  }
  if (!f) raise(ErrorKind::IoError, "short write to " + path);
}

std::vector<MatX> read_weights_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorKind::IoError, "cannot read " + path);
  std::uint64_t magic = 0;
  f.read(reinterpret_cast<char*>(&magic), sizeof(magic));
  if (magic != kMagic) raise(ErrorKind::IoError, "bad weights magic in " + path);
  std::uint32_t n = 0;
  f.read(reinterpret_cast<char*>(&n), sizeof(n));
  std::vector<MatX> weights(n);
  for (auto& w : weights) {
    std::uint32_t rows = 0, cols = 0;
    f.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    f.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    w.resize(rows, cols);
    f.read(reinterpret_cast<char*>(w.data()),
           static_cast<std::streamsize>(sizeof(Scalar) * w.size()));
  }
  if (!f) raise(ErrorKind::IoError, "truncated weights file " + path);
  return weights;
}

}  // namespace purebox::nn
