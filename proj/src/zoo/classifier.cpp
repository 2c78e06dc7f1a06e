#include "purebox/zoo/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "purebox/nn/loss.hpp"
#include "purebox/nn/optim.hpp"
#include "purebox/nn/weights_io.hpp"
#include "purebox/zoo/pgd.hpp"

namespace purebox::zoo {

using nlohmann::json;

double lr_at(const TrainConfig& cfg, int epoch) {
  return cfg.initial_lr / std::pow(cfg.decay_factor, epoch / cfg.decay_period_epochs);
}

int best_epoch(const std::vector<EpochStats>& record) {
  if (record.empty()) raise(ErrorKind::EmptyRecords, "no epochs recorded");
  int best = 0;
  for (int e = 1; e < static_cast<int>(record.size()); ++e) {
    if (record[static_cast<std::size_t>(e)].val_accuracy >
        record[static_cast<std::size_t>(best)].val_accuracy) {
      best = e;
    }
  }
  return best;
}

std::vector<int> ClassifierHandle::predict(const MatX& batch) const {
  return nn::argmax_labels(logits(batch));
}

int ClassifierHandle::predict_one(const VecX& pixels) const {
  return predict(pixels)[0];
}

MatX ClassifierHandle::input_loss_gradient(const MatX& batch, const std::vector<int>& labels) const {
  const MatX lg = net->forward(batch, false);
  auto loss = nn::softmax_cross_entropy(lg, labels);
  return net->backward(loss.dlogits);
}

ClassifierHandle ClassifierHandle::clone() const {
  ClassifierHandle copy = *this;
  copy.net = std::shared_ptr<nn::Sequential>(build_classifier_net(arch, input_shape).release());
  nn::set_weights(*copy.net, nn::get_weights(*net));
  return copy;
}

namespace {

void validate_dataset(const ArchSpec& arch, const corpus::Dataset& dataset) {
  if (dataset.num_classes() != arch.num_classes) {
    raise(ErrorKind::DataMismatch,
          "dataset has " + std::to_string(dataset.num_classes()) + " classes, arch expects " +
              std::to_string(arch.num_classes));
  }
  if (dataset.train.count() == 0 || dataset.val.count() == 0) {
    raise(ErrorKind::DataMismatch, "train and val splits must be nonempty");
  }
}

// Optional per-batch transform hook (adversarial training swaps in the PGD
// batch here).
using BatchTransform =
    std::function<MatX(nn::Sequential&, const MatX&, const std::vector<int>&, Rng&)>;

ClassifierHandle train_impl(const ArchSpec& arch, const corpus::Dataset& dataset,
                            const TrainConfig& cfg, const BatchTransform& transform,
                            bool robust_flag, const ClassifierHandle* init_from = nullptr) {
  validate_dataset(arch, dataset);
  Rng rng(cfg.seed);

  ClassifierHandle handle;
  handle.arch = arch;
  handle.input_shape = dataset.shape;
  handle.net = std::shared_ptr<nn::Sequential>(build_classifier_net(arch, dataset.shape).release());
  handle.net->init(rng);
  if (init_from) nn::set_weights(*handle.net, nn::get_weights(*init_from->net));
  handle.class_map = dataset.class_map;
  handle.robust = robust_flag;

  std::vector<nn::ParamSlot> slots;
  handle.net->collect_params(slots);
  nn::SgdMomentum opt(cfg.momentum);

  std::vector<int> order(static_cast<std::size_t>(dataset.train.count()));
  std::iota(order.begin(), order.end(), 0);

  double best_val = -1;
  std::vector<MatX> best_weights;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = lr_at(cfg, epoch);
    rng.shuffle(order);
    double loss_sum = 0;
    int batches = 0;
    for (int start = 0; start < dataset.train.count(); start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, dataset.train.count() - start);
      MatX batch(dataset.train.images.rows(), count);
      std::vector<int> labels(static_cast<std::size_t>(count));
      for (int i = 0; i < count; ++i) {
        batch.col(i) = dataset.train.images.col(order[static_cast<std::size_t>(start + i)]);
        labels[static_cast<std::size_t>(i)] =
            dataset.train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(start + i)])];
      }
      if (transform) batch = transform(*handle.net, batch, labels, rng);

      const MatX logits = handle.net->forward(batch, true);
      auto lg = nn::softmax_cross_entropy(logits, labels);
      if (!std::isfinite(lg.loss)) {
        throw DivergedTrainingError("loss became non-finite at epoch " + std::to_string(epoch),
                                    handle.training_record);
      }
      handle.net->backward(lg.dlogits);
      opt.step(slots, lr);
      loss_sum += lg.loss;
      ++batches;
    }

    const double val_acc = evaluate_accuracy(handle, dataset.val);
    handle.training_record.push_back({loss_sum / std::max(1, batches), val_acc, lr});
    if (val_acc > best_val) {
      best_val = val_acc;
      best_weights = nn::get_weights(*handle.net);
    }
  }

  if (!best_weights.empty()) nn::set_weights(*handle.net, best_weights);
  return handle;
}

}  // namespace

ClassifierHandle train_classifier(const ArchSpec& arch, const corpus::Dataset& dataset,
                                  const TrainConfig& cfg) {
  return train_impl(arch, dataset, cfg, nullptr, false);
}

ClassifierHandle adversarial_train(const ArchSpec& arch, const corpus::Dataset& dataset,
                                   const TrainConfig& cfg, double eps, int pgd_steps,
                                   double pgd_step_size) {
  if (eps < 0 || eps >= 1) raise(ErrorKind::InvalidSpec, "eps must lie in [0,1)");
  if (pgd_steps < 1) raise(ErrorKind::InvalidSpec, "pgd_steps must be >= 1");
  auto transform = [=](nn::Sequential& net, const MatX& batch, const std::vector<int>& labels,
                       Rng& rng) {
    return pgd_untargeted(net, batch, labels, eps, pgd_step_size, pgd_steps, rng);
  };
  return train_impl(arch, dataset, cfg, transform, true);
}

ClassifierHandle fine_tune(const ClassifierHandle& start, const corpus::Dataset& dataset,
                           const TrainConfig& cfg) {
  ClassifierHandle refined = train_impl(start.arch, dataset, cfg, nullptr, start.robust, &start);
  return refined;
}

double evaluate_accuracy(const ClassifierHandle& model, const corpus::DataSplit& split,
                         const VecX* delta) {
  if (split.count() == 0) raise(ErrorKind::EmptySplit, "evaluation split is empty");
  if (delta && delta->size() != split.images.rows()) {
    raise(ErrorKind::ShapeMismatch, "perturbation does not match the working resolution");
  }
  long correct = 0;
  const int chunk = 256;
  for (int start = 0; start < split.count(); start += chunk) {
    const int count = std::min(chunk, split.count() - start);
    MatX batch = split.images.middleCols(start, count);
    if (delta) batch = clip01(batch.colwise() + *delta);
    const auto pred = model.predict(batch);
    for (int i = 0; i < count; ++i) {
      if (pred[static_cast<std::size_t>(i)] == split.labels[static_cast<std::size_t>(start + i)]) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(split.count());
}

// ------------------------------------------------------------- checkpoints

void save_checkpoint(const std::string& dir, const ClassifierHandle& handle,
                     const TrainConfig& cfg) {
  std::filesystem::create_directories(dir);

  json rec;
  rec["arch"] = {{"family", to_string(handle.arch.family)},
                 {"num_classes", handle.arch.num_classes},
                 {"width_scale", handle.arch.width_scale}};
  rec["input_shape"] = {handle.input_shape.channels, handle.input_shape.height,
                        handle.input_shape.width};
  rec["class_map"] = handle.class_map;
  rec["robust"] = handle.robust;
  rec["run_id"] = handle.run_id;
  rec["train_config"] = {{"initial_lr", cfg.initial_lr},
                         {"decay_factor", cfg.decay_factor},
                         {"decay_period_epochs", cfg.decay_period_epochs},
                         {"max_epochs", cfg.max_epochs},
                         {"batch_size", cfg.batch_size},
                         {"seed", cfg.seed},
                         {"momentum", cfg.momentum}};
  rec["training_record"] = json::array();
  for (const auto& e : handle.training_record) {
    rec["training_record"].push_back(
        {{"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}, {"learning_rate", e.learning_rate}});
  }
  std::ofstream rf(dir + "/record.json");
  if (!rf) raise(ErrorKind::IoError, "cannot write " + dir + "/record.json");
  rf << rec.dump(2);

  nn::write_weights_file(dir + "/model.bin", nn::get_weights(*handle.net));
}

ClassifierHandle load_checkpoint(const std::string& dir) {
  std::ifstream rf(dir + "/record.json");
  if (!rf) raise(ErrorKind::IoError, "cannot read " + dir + "/record.json");
  json rec = json::parse(rf);

  ClassifierHandle handle;
  handle.arch.family = arch_family_from_string(rec.at("arch").at("family").get<std::string>());
  handle.arch.num_classes = rec.at("arch").at("num_classes").get<int>();
  handle.arch.width_scale = rec.at("arch").at("width_scale").get<double>();
  const auto shape = rec.at("input_shape");
  handle.input_shape = ImageShape{shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()};
  handle.class_map = rec.at("class_map").get<std::vector<std::string>>();
  handle.robust = rec.at("robust").get<bool>();
  handle.run_id = rec.at("run_id").get<std::string>();
  for (const auto& e : rec.at("training_record")) {
    handle.training_record.push_back({e.at("train_loss").get<double>(),
                                      e.at("val_accuracy").get<double>(),
                                      e.at("learning_rate").get<double>()});
  }

  handle.net =
      std::shared_ptr<nn::Sequential>(build_classifier_net(handle.arch, handle.input_shape).release());
  nn::set_weights(*handle.net, nn::read_weights_file(dir + "/model.bin"));
  return handle;
}

}  // namespace purebox::zoo
