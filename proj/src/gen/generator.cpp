#include "purebox/gen/generator.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "purebox/core/error.hpp"
#include "purebox/nn/loss.hpp"
#include "purebox/nn/optim.hpp"
#include "purebox/nn/weights_io.hpp"

namespace purebox::gen {

using nlohmann::json;
using nn::Conv2d;
using nn::ConvTranspose2d;
using nn::InstanceNorm;
using nn::ReLU;
using nn::Sequential;

const char* to_string(GeneratorVariant variant) {
  return variant == GeneratorVariant::heavy ? "heavy" : "light";
}

GeneratorVariant generator_variant_from_string(const std::string& name) {
  if (name == "heavy") return GeneratorVariant::heavy;
  if (name == "light") return GeneratorVariant::light;
  raise(ErrorKind::InvalidSpec, "unknown generator variant: " + name);
}

GeneratorSpec heavy_default(double budget) {
  return GeneratorSpec{GeneratorVariant::heavy, 64, 6, budget};
}

GeneratorSpec light_default(double budget) {
  return GeneratorSpec{GeneratorVariant::light, 32, 12, budget};
}

NoiseMode fixed_noise(VecX frozen) {
  NoiseMode mode;
  mode.kind = NoiseKind::fixed;
  mode.frozen_noise = std::move(frozen);
  return mode;
}

NoiseMode distributional_noise(double sigma) {
  NoiseMode mode;
  mode.kind = NoiseKind::distributional;
  mode.sigma = sigma;
  return mode;
}

namespace {

// Johnson-style residual block at the bottleneck width.
std::unique_ptr<nn::Layer> gen_res_block(ImageShape shape) {
  auto branch = std::make_unique<Sequential>();
  branch->emplace<Conv2d>(shape, shape.channels, 3, 1, 1);
  branch->emplace<InstanceNorm>(shape);
  branch->emplace<ReLU>();
  branch->emplace<Conv2d>(shape, shape.channels, 3, 1, 1);
  branch->emplace<InstanceNorm>(shape);
  return std::make_unique<nn::ResidualAdd>(std::move(branch));
}

}  // namespace

GeneratorHandle build_generator(const GeneratorSpec& spec, ImageShape shape,
                                std::uint64_t init_seed) {
  if (spec.base_filters < 1) raise(ErrorKind::InvalidSpec, "base_filters must be >= 1");
  if (spec.res_blocks < 1) raise(ErrorKind::InvalidSpec, "topology requires >= 1 residual block");
  if (spec.norm_budget <= 0 || spec.norm_budget >= 1) {
    raise(ErrorKind::InvalidSpec, "norm_budget must lie in (0,1)");
  }
  if (shape.height % 4 != 0 || shape.width % 4 != 0) {
    raise(ErrorKind::InvalidSpec, "generator input dims must be divisible by 4");
  }

  const int f = spec.base_filters;
  auto net = std::make_unique<Sequential>();
  ImageShape s = shape;

  s = net->emplace<Conv2d>(s, f, 7, 1, 3)->output_shape();
  net->emplace<InstanceNorm>(s);
  net->emplace<ReLU>();
  s = net->emplace<Conv2d>(s, 2 * f, 3, 2, 1)->output_shape();
  net->emplace<InstanceNorm>(s);
  net->emplace<ReLU>();
  s = net->emplace<Conv2d>(s, 4 * f, 3, 2, 1)->output_shape();
  net->emplace<InstanceNorm>(s);
  net->emplace<ReLU>();
  for (int i = 0; i < spec.res_blocks; ++i) net->append(gen_res_block(s));
  s = net->emplace<ConvTranspose2d>(s, 2 * f, 3, 2, 1, 1)->output_shape();
  net->emplace<InstanceNorm>(s);
  net->emplace<ReLU>();
  s = net->emplace<ConvTranspose2d>(s, f, 3, 2, 1, 1)->output_shape();
  net->emplace<InstanceNorm>(s);
  net->emplace<ReLU>();
  s = net->emplace<Conv2d>(s, shape.channels, 7, 1, 3)->output_shape();
  net->emplace<nn::Tanh>();

  if (!(s == shape)) raise(ErrorKind::InvalidSpec, "generator does not reproduce input dims");

  Rng rng(init_seed);
  net->init(rng);

  GeneratorHandle handle;
  handle.spec = spec;
  handle.shape = shape;
  handle.net = std::shared_ptr<Sequential>(net.release());
  return handle;
}

VecX sample_noise(const NoiseMode& mode, std::uint64_t seed, ImageShape shape) {
  if (mode.kind == NoiseKind::fixed) {
    if (!mode.frozen_noise) {
      raise(ErrorKind::MissingFrozenNoise, "fixed noise mode needs frozen_noise");
    }
    if (mode.frozen_noise->size() != shape.pixels()) {
      raise(ErrorKind::ShapeMismatch, "frozen noise does not match the working resolution");
    }
    return *mode.frozen_noise;
  }
  if (mode.sigma <= 0) raise(ErrorKind::InvalidSpec, "sigma must be positive");
  Rng rng(seed);
  return rng.normal_vec(shape.pixels(), 0, static_cast<Scalar>(mode.sigma));
}

namespace {

std::uint64_t iter_seed(std::uint64_t base, int iter) {
  return base ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(iter + 1));
}

}  // namespace

GeneratorHandle train_generator(GeneratorHandle gen,
                                const std::vector<zoo::ClassifierHandle>& ensemble,
                                const corpus::DataSplit& data, const NoiseMode& mode,
                                double budget, const GenTrainConfig& cfg) {
  if (ensemble.empty()) raise(ErrorKind::EnsembleMismatch, "ensemble must be nonempty");
  for (const auto& member : ensemble) {
    if (!(member.input_shape == gen.shape)) {
      raise(ErrorKind::EnsembleMismatch, "ensemble members must share the working resolution");
    }
  }
  if (budget <= 0 || budget >= 1) raise(ErrorKind::InvalidSpec, "budget must lie in (0,1)");
  if (data.count() == 0) raise(ErrorKind::EmptySplit, "generator training data is empty");

  // Fooling is judged against each member's clean predictions, not dataset
  // labels, so differing label spaces are fine.
  std::vector<std::vector<int>> clean_labels;
  clean_labels.reserve(ensemble.size());
  for (const auto& member : ensemble) clean_labels.push_back(member.predict(data.images));

  std::vector<nn::ParamSlot> slots;
  gen.net->collect_params(slots);
  nn::Adam opt(cfg.lr);
  Rng rng(cfg.seed);
  const Scalar b = static_cast<Scalar>(budget);
  const double inv_members = 1.0 / static_cast<double>(ensemble.size());

  for (int iter = 0; iter < cfg.iters; ++iter) {
    const VecX z = sample_noise(mode, iter_seed(cfg.seed, iter), gen.shape);
    const MatX raw = gen.net->forward(z, true);  // pixels x 1, in [-1,1]
    const VecX delta = b * raw.col(0);

    const int count = std::min(cfg.batch_size, data.count());
    MatX batch(data.images.rows(), count);
    std::vector<std::size_t> picks(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      picks[static_cast<std::size_t>(i)] = static_cast<std::size_t>(rng.index(data.count()));
      batch.col(i) = data.images.col(static_cast<Eigen::Index>(picks[static_cast<std::size_t>(i)]));
    }

    const MatX unclipped = batch.colwise() + delta;
    const MatX mask = ((unclipped.array() >= 0) && (unclipped.array() <= 1)).cast<Scalar>();
    const MatX adv = clip01(unclipped);

    // Minimize J = -(1/M) sum_m CE(f_m(adv), clean_m)
    double mean_ce = 0;
    MatX dadv = MatX::Zero(adv.rows(), adv.cols());
    for (std::size_t m = 0; m < ensemble.size(); ++m) {
      std::vector<int> labels(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        labels[static_cast<std::size_t>(i)] = clean_labels[m][picks[static_cast<std::size_t>(i)]];
      }
      const MatX logits = ensemble[m].net->forward(adv, false);
      auto lg = nn::softmax_cross_entropy(logits, labels);
      if (!std::isfinite(lg.loss)) {
        throw zoo::DivergedTrainingError("generator fooling loss non-finite at iter " +
                                             std::to_string(iter),
                                         {});
      }
      mean_ce += lg.loss * inv_members;
      lg.dlogits *= static_cast<Scalar>(-inv_members);
      dadv += ensemble[m].net->backward(lg.dlogits);
    }

    const VecX ddelta = dadv.cwiseProduct(mask).rowwise().sum();
    const MatX draw = (b * ddelta).eval();
    gen.net->backward(draw);
    opt.step(slots);

    gen.loss_trace.push_back(-mean_ce);
  }

  if (cfg.iters > 0) gen.trained = true;
  gen.spec.norm_budget = budget;
  return gen;
}

Perturbation generate_perturbation(const GeneratorHandle& gen, const NoiseMode& mode, double budget,
                                   std::uint64_t seed) {
  if (budget <= 0 || budget > 1) raise(ErrorKind::InvalidSpec, "budget must lie in (0,1]");
  if (gen.trained && std::abs(budget - gen.spec.norm_budget) > 1e-12) {
    std::fprintf(stderr, "[purebox] warning: emitting at budget %.6f, generator trained at %.6f\n",
                 budget, gen.spec.norm_budget);
  }
  const VecX z = sample_noise(mode, seed, gen.shape);
  const MatX raw = gen.net->forward(z, false);
  Perturbation p;
  p.delta = static_cast<Scalar>(budget) * raw.col(0);
  p.budget = budget;
  p.generator_ref = gen.run_id;
  p.noise_seed = seed;
  // Guaranteed by the tanh scaling; asserted anyway.
  if (static_cast<double>(linf_norm(p.delta)) > budget) {
    raise(ErrorKind::InvalidSpec, "emitted perturbation exceeds its budget");
  }
  return p;
}

ImageSample apply_perturbation(const ImageSample& x, const Perturbation& p) {
  if (x.pixels.size() != p.delta.size()) {
    raise(ErrorKind::ShapeMismatch, "perturbation shape does not match image");
  }
  ImageSample out = x;
  out.pixels = clip01(x.pixels + p.delta);
  return out;
}

// ---------------------------------------------------------------- storage

void save_generator(const std::string& dir, const GeneratorHandle& gen) {
  std::filesystem::create_directories(dir);
  json spec;
  spec["variant"] = to_string(gen.spec.variant);
  spec["base_filters"] = gen.spec.base_filters;
  spec["res_blocks"] = gen.spec.res_blocks;
  spec["norm_budget"] = gen.spec.norm_budget;
  spec["shape"] = {gen.shape.channels, gen.shape.height, gen.shape.width};
  spec["trained"] = gen.trained;
  spec["run_id"] = gen.run_id;
  spec["loss_trace"] = gen.loss_trace;
  std::ofstream sf(dir + "/spec.json");
  if (!sf) raise(ErrorKind::IoError, "cannot write " + dir + "/spec.json");
  sf << spec.dump(2);
  nn::write_weights_file(dir + "/generator.bin", nn::get_weights(*gen.net));
}

GeneratorHandle load_generator(const std::string& dir) {
  std::ifstream sf(dir + "/spec.json");
  if (!sf) raise(ErrorKind::IoError, "cannot read " + dir + "/spec.json");
  json spec = json::parse(sf);

  GeneratorSpec gs;
  gs.variant = generator_variant_from_string(spec.at("variant").get<std::string>());
  gs.base_filters = spec.at("base_filters").get<int>();
  gs.res_blocks = spec.at("res_blocks").get<int>();
  gs.norm_budget = spec.at("norm_budget").get<double>();
  const auto shape = spec.at("shape");
  GeneratorHandle gen = build_generator(
      gs, ImageShape{shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()});
  gen.trained = spec.at("trained").get<bool>();
  gen.run_id = spec.at("run_id").get<std::string>();
  gen.loss_trace = spec.at("loss_trace").get<std::vector<double>>();
  nn::set_weights(*gen.net, nn::read_weights_file(dir + "/generator.bin"));
  return gen;
}

void save_perturbation(const std::string& path_prefix, const Perturbation& p, ImageShape shape) {
  std::ofstream bf(path_prefix + ".bin", std::ios::binary);
  if (!bf) raise(ErrorKind::IoError, "cannot write " + path_prefix + ".bin");
  const std::uint64_t n = static_cast<std::uint64_t>(p.delta.size());
  bf.write(reinterpret_cast<const char*>(&n), sizeof(n));
  bf.write(reinterpret_cast<const char*>(p.delta.data()),
           static_cast<std::streamsize>(sizeof(Scalar) * p.delta.size()));

  json side;
  side["budget"] = p.budget;
  side["noise_seed"] = p.noise_seed;
  side["generator_ref"] = p.generator_ref;
  side["shape"] = {shape.channels, shape.height, shape.width};
  std::ofstream jf(path_prefix + ".json");
  if (!jf) raise(ErrorKind::IoError, "cannot write " + path_prefix + ".json");
  jf << side.dump(2);
}

Perturbation load_perturbation(const std::string& path_prefix) {
  std::ifstream jf(path_prefix + ".json");
  if (!jf) raise(ErrorKind::IoError, "cannot read " + path_prefix + ".json");
  json side = json::parse(jf);

  Perturbation p;
  p.budget = side.at("budget").get<double>();
  p.noise_seed = side.at("noise_seed").get<std::uint64_t>();
  p.generator_ref = side.at("generator_ref").get<std::string>();

  std::ifstream bf(path_prefix + ".bin", std::ios::binary);
  if (!bf) raise(ErrorKind::IoError, "cannot read " + path_prefix + ".bin");
  std::uint64_t n = 0;
  bf.read(reinterpret_cast<char*>(&n), sizeof(n));
  p.delta.resize(static_cast<Eigen::Index>(n));
  bf.read(reinterpret_cast<char*>(p.delta.data()),
          static_cast<std::streamsize>(sizeof(Scalar) * p.delta.size()));
  if (!bf) raise(ErrorKind::IoError, "truncated perturbation file " + path_prefix + ".bin");
  return p;
}

}  // namespace purebox::gen
