#include "purebox/core/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "purebox/core/error.hpp"

namespace purebox {

namespace {

unsigned char quantize(Scalar v) {
  const Scalar clamped = std::min(Scalar(1), std::max(Scalar(0), v));
  return static_cast<unsigned char>(std::lround(clamped * Scalar(255)));
}

// Skips whitespace and '#' comments between PPM header tokens.
std::size_t next_token(const std::vector<unsigned char>& b, std::size_t pos, std::string& tok) {
  while (pos < b.size()) {
    if (std::isspace(b[pos])) {
      ++pos;
    } else if (b[pos] == '#') {
      while (pos < b.size() && b[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  tok.clear();
  while (pos < b.size() && !std::isspace(b[pos])) tok.push_back(static_cast<char>(b[pos++]));
  return pos;
}

}  // namespace

std::vector<unsigned char> encode_ppm(const VecX& pixels, const ImageShape& shape) {
  if (shape.channels != 3 || pixels.size() != shape.pixels()) {
    raise(ErrorKind::ShapeMismatch, "encode_ppm expects a 3-channel image of matching size");
  }
  char header[64];
  const int n = std::snprintf(header, sizeof(header), "P6\n%d %d\n255\n", shape.width, shape.height);
  std::vector<unsigned char> out(header, header + n);
  out.reserve(out.size() + static_cast<std::size_t>(shape.plane()) * 3);
  const int plane = shape.plane();
  for (int i = 0; i < plane; ++i) {
    out.push_back(quantize(pixels[0 * plane + i]));
    out.push_back(quantize(pixels[1 * plane + i]));
    out.push_back(quantize(pixels[2 * plane + i]));
  }
  return out;
}

VecX decode_ppm(const std::vector<unsigned char>& bytes, ImageShape& shape_out) {
  std::string tok;
  std::size_t pos = next_token(bytes, 0, tok);
  if (tok != "P6") raise(ErrorKind::IoError, "not a binary PPM (P6) stream");
  pos = next_token(bytes, pos, tok);
  const int width = std::stoi(tok);
  pos = next_token(bytes, pos, tok);
  const int height = std::stoi(tok);
  pos = next_token(bytes, pos, tok);
  const int maxval = std::stoi(tok);
  if (maxval != 255) raise(ErrorKind::IoError, "only 8-bit PPM supported");
  ++pos;  // single whitespace after maxval
  const std::size_t need = static_cast<std::size_t>(width) * height * 3;
  if (bytes.size() < pos + need) raise(ErrorKind::IoError, "truncated PPM payload");

  shape_out = ImageShape{3, height, width};
  const int plane = width * height;
  VecX pixels(3 * plane);
  for (int i = 0; i < plane; ++i) {
    pixels[0 * plane + i] = Scalar(bytes[pos + 3 * i + 0]) / Scalar(255);
    pixels[1 * plane + i] = Scalar(bytes[pos + 3 * i + 1]) / Scalar(255);
    pixels[2 * plane + i] = Scalar(bytes[pos + 3 * i + 2]) / Scalar(255);
  }
  return pixels;
}

void write_ppm_file(const std::string& path, const VecX& pixels, const ImageShape& shape) {
  const auto bytes = encode_ppm(pixels, shape);
  std::ofstream f(path, std::ios::binary);
  if (!f) raise(ErrorKind::IoError, "cannot open for write: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

VecX read_ppm_file(const std::string& path, ImageShape& shape_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) raise(ErrorKind::IoError, "cannot open for read: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  return decode_ppm(bytes, shape_out);
}

VecX resize_bilinear(const VecX& pixels, const ImageShape& src, const ImageShape& dst) {
  if (pixels.size() != src.pixels()) raise(ErrorKind::ShapeMismatch, "resize_bilinear input size");
  if (src.height == dst.height && src.width == dst.width) return pixels;

  VecX out(dst.pixels());
  const Scalar sy = Scalar(src.height) / Scalar(dst.height);
  const Scalar sx = Scalar(src.width) / Scalar(dst.width);
  for (int c = 0; c < src.channels; ++c) {
    const Scalar* in_plane = pixels.data() + static_cast<std::ptrdiff_t>(c) * src.plane();
    Scalar* out_plane = out.data() + static_cast<std::ptrdiff_t>(c) * dst.plane();
    for (int y = 0; y < dst.height; ++y) {
      const Scalar fy = (Scalar(y) + Scalar(0.5)) * sy - Scalar(0.5);
      const int y0 = std::clamp(static_cast<int>(std::floor(fy)), 0, src.height - 1);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const Scalar wy = std::clamp(fy - Scalar(y0), Scalar(0), Scalar(1));
      for (int x = 0; x < dst.width; ++x) {
        const Scalar fx = (Scalar(x) + Scalar(0.5)) * sx - Scalar(0.5);
        const int x0 = std::clamp(static_cast<int>(std::floor(fx)), 0, src.width - 1);
        const int x1 = std::min(x0 + 1, src.width - 1);
        const Scalar wx = std::clamp(fx - Scalar(x0), Scalar(0), Scalar(1));
        const Scalar top = in_plane[y0 * src.width + x0] * (1 - wx) + in_plane[y0 * src.width + x1] * wx;
        const Scalar bot = in_plane[y1 * src.width + x0] * (1 - wx) + in_plane[y1 * src.width + x1] * wx;
        out_plane[y * dst.width + x] = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

}  // namespace purebox
