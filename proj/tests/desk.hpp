#pragma once

// Desk-scale synthetic datasets shared by tests and the acceptance suite.
// Instance ranges can be offset so two datasets share class structure but no
// images (the disjoint-data setting).

#include <string>
#include <vector>

#include "purebox/corpus/dataset.hpp"
#include "purebox/corpus/synthetic.hpp"
#include "purebox/zoo/classifier.hpp"

namespace desk {

using purebox::ImageShape;
using purebox::MatX;
using purebox::VecX;

inline purebox::corpus::DataSplit make_split(int n_classes, int per_class, ImageShape shape,
                                             std::uint64_t seed, long instance_base,
                                             const std::vector<int>& class_ranks = {}) {
  purebox::corpus::DataSplit split;
  split.images.resize(shape.pixels(), static_cast<Eigen::Index>(n_classes) * per_class);
  int col = 0;
  for (int c = 0; c < n_classes; ++c) {
    const int rank = class_ranks.empty() ? c : class_ranks[static_cast<std::size_t>(c)];
    for (int i = 0; i < per_class; ++i) {
      split.images.col(col) =
          purebox::corpus::render_synthetic_image(rank, instance_base + i, seed, shape);
      split.labels.push_back(c);
      split.refs.push_back("synthetic:" + std::to_string(rank) + ":" +
                           std::to_string(instance_base + i));
      ++col;
    }
  }
  return split;
}

struct DeskSpec {
  int n_classes = 2;
  int per_train = 60;
  int per_val = 15;
  int per_eval = 15;
  ImageShape shape{3, 16, 16};
  std::uint64_t seed = 0;
  long instance_base = 0;               // offset to get disjoint image sets
  std::vector<int> class_ranks = {};    // defaults to 0..n_classes-1
};

inline purebox::corpus::Dataset make_dataset(const DeskSpec& spec) {
  purebox::corpus::Dataset ds;
  ds.shape = spec.shape;
  for (int c = 0; c < spec.n_classes; ++c) {
    const int rank = spec.class_ranks.empty() ? c : spec.class_ranks[static_cast<std::size_t>(c)];
    ds.class_map.push_back("synth" + std::to_string(rank));
  }
  long base = spec.instance_base;
  ds.train = make_split(spec.n_classes, spec.per_train, spec.shape, spec.seed, base,
                        spec.class_ranks);
  base += spec.per_train;
  ds.val = make_split(spec.n_classes, spec.per_val, spec.shape, spec.seed, base, spec.class_ranks);
  base += spec.per_val;
  ds.eval =
      make_split(spec.n_classes, spec.per_eval, spec.shape, spec.seed, base, spec.class_ranks);
  return ds;
}

inline purebox::zoo::TrainConfig quick_train(int epochs, std::uint64_t seed, double lr = 2e-3,
                                             int batch = 16) {
  purebox::zoo::TrainConfig cfg;
  cfg.initial_lr = lr;
  cfg.decay_factor = 10.0;
  cfg.decay_period_epochs = std::max(1, epochs - 2);
  cfg.max_epochs = epochs;
  cfg.batch_size = batch;
  cfg.seed = seed;
  return cfg;
}

}  // namespace desk
