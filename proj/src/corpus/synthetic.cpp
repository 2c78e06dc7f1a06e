#include "purebox/corpus/synthetic.hpp"

#include <cmath>

namespace purebox::corpus {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Mixes the identifying integers into one stream seed.
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint64_t v : {a, b, c}) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    h *= 1099511628211ull;
  }
  return h;
}
}  // namespace

VecX render_synthetic_image(int class_rank, long instance, std::uint64_t base_seed,
                            const ImageShape& shape) {
  Rng rng(mix(base_seed, static_cast<std::uint64_t>(class_rank),
              static_cast<std::uint64_t>(instance)));

  // Class identity: orientation spread by the golden angle so small rank
  // prefixes still cover diverse orientations; frequency cycles over 5 bands.
  const int r = class_rank;
  const double frac = std::fmod(0.381966011 * r, 1.0);
  const double theta = kPi * frac;
  const double freq = 2.0 + (r % 5);
  const double ct = std::cos(theta), st = std::sin(theta);

  // Mild per-class tint; large enough that pairs of classes stay separable by
  // color alone, small against the grating contrast.
  const double hue = 2.0 * kPi * r / 25.0;
  const double tint[3] = {0.10 * std::cos(hue), 0.10 * std::cos(hue + 2.0 * kPi / 3.0),
                          0.10 * std::cos(hue + 4.0 * kPi / 3.0)};

  // Instance variation.
  const double phase = rng.uniform(0, static_cast<Scalar>(2.0 * kPi));
  const double amp = 0.20 + rng.uniform(-0.03, 0.03);
  const double bg_fx = rng.uniform(0.5, 1.5), bg_fy = rng.uniform(0.5, 1.5);
  const double bg_phx = rng.uniform(0, static_cast<Scalar>(2.0 * kPi));
  const double bg_phy = rng.uniform(0, static_cast<Scalar>(2.0 * kPi));

  const int h = shape.height, w = shape.width, plane = shape.plane();
  VecX img(shape.pixels());
  // Channel weights keep the grating mostly luminance with slight chroma.
  const double cw[3] = {0.9, 1.0, 1.1};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w, v = (y + 0.5) / h;
      const double g = amp * std::sin(2.0 * kPi * freq * (u * ct + v * st) + phase);
      const double bg = 0.06 * (std::sin(2.0 * kPi * bg_fx * u + bg_phx) +
                                std::sin(2.0 * kPi * bg_fy * v + bg_phy));
      for (int c = 0; c < 3; ++c) {
        const double value =
            0.5 + cw[c] * g + bg + tint[c] + rng.normal(0, static_cast<Scalar>(0.04));
        img[c * plane + y * w + x] =
            static_cast<Scalar>(std::min(1.0, std::max(0.0, value)));
      }
    }
  }
  return img;
}

}  // namespace purebox::corpus
