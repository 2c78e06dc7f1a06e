#pragma once

#include <string>
#include <vector>

#include "purebox/core/types.hpp"
#include "purebox/gen/generator.hpp"
#include "purebox/transfer/oracle.hpp"

namespace purebox::transfer {

struct TransferReport {
  double clean_accuracy = 0;
  double adversarial_accuracy = 0;
  double accuracy_drop = 0;  // percentage points: 100*(clean - adv)
  // Secondary metric: misclassification rate after perturbation, restricted
  // to images the target classified correctly when clean.
  double fooling_rate = 0;
  int n_images = 0;
  int n_perturbations = 0;
  std::string config_digest;
  std::string eval_set_digest;
};

// Digest of (pixels, label) over the eval set; reports sharing a protocol
// share this value.
std::string eval_set_digest(const std::vector<ImageSample>& eval_set);

// Clean accuracy over the set, adversarial accuracy averaged over all
// (perturbation, image) pairs; order-invariant by construction.
TransferReport evaluate_transfer(const std::vector<gen::Perturbation>& perturbations,
                                 const TargetOracle& target,
                                 const std::vector<ImageSample>& eval_set,
                                 const std::string& config_digest = "");

struct GridKey {
  std::string ensemble;
  int n_sms = 0;
  int n_classes = 0;

  bool operator<(const GridKey& other) const;
  bool operator==(const GridKey&) const = default;
};

struct GridRow {
  GridKey key;
  double mean_drop = 0;
  double mean_fooling = 0;
  int n_reports = 0;
};

struct GridTable {
  std::vector<GridRow> rows;  // sorted by key
  std::string eval_set_digest;
};

// Groups reports by key with mean drops; all reports must share the eval-set
// digest (ProtocolMismatch otherwise).
GridTable aggregate_grid(const std::vector<std::pair<GridKey, TransferReport>>& reports);

std::string report_to_json(const TransferReport& report);
TransferReport report_from_json(const std::string& json_text);
std::string grid_to_csv(const GridTable& table);
GridTable grid_from_csv(const std::string& csv_text);
std::string grid_to_json(const GridTable& table);
std::string grid_to_text(const GridTable& table);  // aligned console table

}  // namespace purebox::transfer
