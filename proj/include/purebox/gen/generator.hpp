#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "purebox/core/types.hpp"
#include "purebox/corpus/dataset.hpp"
#include "purebox/nn/layers.hpp"
#include "purebox/zoo/classifier.hpp"

namespace purebox::gen {

enum class GeneratorVariant { heavy, light };

const char* to_string(GeneratorVariant variant);
GeneratorVariant generator_variant_from_string(const std::string& name);

struct GeneratorSpec {
  GeneratorVariant variant = GeneratorVariant::heavy;
  int base_filters = 64;  // light default: heavy/2
  int res_blocks = 6;     // light default: 2x heavy
  double norm_budget = 10.0 / 255.0;
};

// Default pairing: light halves the first-layer filters and doubles the
// residual depth, landing near half the parameter count.
GeneratorSpec heavy_default(double budget = 10.0 / 255.0);
GeneratorSpec light_default(double budget = 10.0 / 255.0);

enum class NoiseKind { fixed, distributional };

struct NoiseMode {
  NoiseKind kind = NoiseKind::distributional;
  double sigma = 0.1;
  std::optional<VecX> frozen_noise;  // required iff kind == fixed
};

NoiseMode fixed_noise(VecX frozen);
NoiseMode distributional_noise(double sigma = 0.1);

struct Perturbation {
  VecX delta;  // same layout as a flattened image
  double budget = 0;
  std::string generator_ref;
  std::uint64_t noise_seed = 0;
};

struct GeneratorHandle {
  GeneratorSpec spec;
  ImageShape shape;
  std::shared_ptr<nn::Sequential> net;
  bool trained = false;
  std::string run_id;
  std::vector<double> loss_trace;  // ensemble fooling loss per iteration

  std::size_t parameter_count() const { return nn::parameter_count(*net); }
};

// conv x3 (downsampling) -> residual blocks -> transposed conv x2 -> conv,
// tanh output in [-1,1]. Spatial dims must be divisible by 4.
GeneratorHandle build_generator(const GeneratorSpec& spec, ImageShape shape,
                                std::uint64_t init_seed = 0);

// Fixed mode returns the frozen image regardless of seed; distributional mode
// returns seeded i.i.d. N(0, sigma^2) draws.
VecX sample_noise(const NoiseMode& mode, std::uint64_t seed, ImageShape shape);

struct GenTrainConfig {
  int iters = 400;
  int batch_size = 32;
  double lr = 2e-4;
  std::uint64_t seed = 0;
};

// Trains the generator so one emitted delta per noise draw maximizes the mean
// classification loss of clip(x + delta) against each ensemble member's clean
// predictions.
GeneratorHandle train_generator(GeneratorHandle gen,
                                const std::vector<zoo::ClassifierHandle>& ensemble,
                                const corpus::DataSplit& data, const NoiseMode& mode,
                                double budget, const GenTrainConfig& cfg);

// delta = budget * tanh-scaled output, so max|delta| <= budget by
// construction. Deterministic given the seed.
Perturbation generate_perturbation(const GeneratorHandle& gen, const NoiseMode& mode, double budget,
                                   std::uint64_t seed);

// pixels' = clip(x + delta, 0, 1)
ImageSample apply_perturbation(const ImageSample& x, const Perturbation& p);

// Storage: <dir>/generator.bin + <dir>/spec.json; perturbations as raw
// doubles with a JSON sidecar.
void save_generator(const std::string& dir, const GeneratorHandle& gen);
GeneratorHandle load_generator(const std::string& dir);
void save_perturbation(const std::string& path_prefix, const Perturbation& p, ImageShape shape);
Perturbation load_perturbation(const std::string& path_prefix);

}  // namespace purebox::gen
