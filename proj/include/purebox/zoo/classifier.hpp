#pragma once

#include <memory>
#include <string>
#include <vector>

#include "purebox/core/error.hpp"
#include "purebox/core/types.hpp"
#include "purebox/corpus/dataset.hpp"
#include "purebox/nn/layers.hpp"
#include "purebox/zoo/arch.hpp"

namespace purebox::zoo {

struct TrainConfig {
  double initial_lr = 5e-4;
  double decay_factor = 10.0;
  int decay_period_epochs = 30;
  int max_epochs = 100;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double momentum = 0.9;
};

// lr(e) = initial_lr / decay_factor^floor(e / decay_period), e 0-based.
double lr_at(const TrainConfig& cfg, int epoch);

struct EpochStats {
  double train_loss;
  double val_accuracy;
  double learning_rate;
};

// Index of the checkpointed epoch: first maximum of val_accuracy.
int best_epoch(const std::vector<EpochStats>& record);

struct ClassifierHandle {
  ArchSpec arch;
  ImageShape input_shape;
  std::shared_ptr<nn::Sequential> net;
  std::vector<std::string> class_map;
  std::vector<EpochStats> training_record;
  bool robust = false;
  std::string run_id;

  MatX logits(const MatX& batch) const { return net->forward(batch, false); }
  std::vector<int> predict(const MatX& batch) const;
  int predict_one(const VecX& pixels) const;

  // Gradient of the mean cross-entropy w.r.t. the input batch.
  MatX input_loss_gradient(const MatX& batch, const std::vector<int>& labels) const;

  // Deep copy (fresh network, same weights); handles are otherwise shared.
  ClassifierHandle clone() const;
};

// Thrown when the training loss goes non-finite; carries the record so far.
class DivergedTrainingError : public Error {
 public:
  DivergedTrainingError(std::string message, std::vector<EpochStats> record)
      : Error(ErrorKind::DivergedTraining, std::move(message)), record(std::move(record)) {}
  std::vector<EpochStats> record;
};

// SGD-with-momentum training with the step-decay schedule; keeps the weights
// of the best-validation epoch.
ClassifierHandle train_classifier(const ArchSpec& arch, const corpus::Dataset& dataset,
                                  const TrainConfig& cfg);

// Fraction of samples whose argmax logit matches the label; `delta`, when
// given, is added to every image with [0,1] clipping first.
double evaluate_accuracy(const ClassifierHandle& model, const corpus::DataSplit& split,
                         const VecX* delta = nullptr);

// Each batch is replaced by its untargeted PGD counterpart (l-inf radius eps,
// random start) before the gradient step.
ClassifierHandle adversarial_train(const ArchSpec& arch, const corpus::Dataset& dataset,
                                   const TrainConfig& cfg, double eps, int pgd_steps,
                                   double pgd_step_size);

// Continues training from the handle's weights on a (possibly different)
// dataset; returns a fresh handle with its own training record.
ClassifierHandle fine_tune(const ClassifierHandle& start, const corpus::Dataset& dataset,
                           const TrainConfig& cfg);

// Checkpoints: <dir>/model.bin (weights) + <dir>/record.json (metadata).
void save_checkpoint(const std::string& dir, const ClassifierHandle& handle,
                     const TrainConfig& cfg);
ClassifierHandle load_checkpoint(const std::string& dir);

}  // namespace purebox::zoo
