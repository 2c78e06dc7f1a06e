#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "purebox/core/error.hpp"
#include "purebox/core/types.hpp"
#include "purebox/corpus/dataset.hpp"
#include "purebox/transfer/oracle.hpp"
#include "purebox/zoo/classifier.hpp"

namespace purebox::blend {

enum class BlendMethod { naive, robust };

struct BlendConfig {
  BlendMethod method = BlendMethod::robust;
  double eps0 = 15.0 / 255.0;    // initial budget
  int max_recursions = 6;        // bisection cap
  double norm_tolerance = 0.05;  // fraction of eps0
  int pgd_steps = 40;
  double pgd_step_size = 0;      // 0 -> eps/10
  // The tolerance is normally a post-hoc flag (the cap drives the loop, so
  // query counts stay fixed); opting in stops bisecting once the bracket
  // width reaches norm_tolerance * eps0.
  bool stop_at_tolerance = false;

  void validate() const;
};

// Exact accounting of target-model queries; thread-safe increments.
class QueryLedger {
 public:
  QueryLedger() = default;
  explicit QueryLedger(long long budget_cap) : budget_cap_(budget_cap) {}

  // Records one query for `sample_id`; throws QueryBudgetExhausted when the
  // cap would be exceeded.
  void record(const std::string& sample_id);
  long long total_queries() const { return total_.load(); }
  long long for_sample(const std::string& sample_id) const;
  std::map<std::string, long long> per_sample() const;
  std::optional<long long> budget_cap() const { return budget_cap_; }

 private:
  std::atomic<long long> total_{0};
  mutable std::mutex mutex_;
  std::map<std::string, long long> per_sample_;
  std::optional<long long> budget_cap_;
};

struct BoundaryPair {
  ImageSample inside_image;   // TM label == source label
  ImageSample outside_image;  // TM label != source label
  double inside_param = 0;    // eps or alpha-path parameter
  double outside_param = 0;
  int label_inside = -1;
  int label_outside = -1;
  int queries_used = 0;
  bool tolerance_met = false;  // false only when the recursion cap hit first
};

// Thrown when the ledger cap hits mid-search; carries the partial bracket.
class BudgetExhaustedError : public Error {
 public:
  BudgetExhaustedError(std::string message, std::optional<BoundaryPair> partial)
      : Error(ErrorKind::QueryBudgetExhausted, std::move(message)), partial(std::move(partial)) {}
  std::optional<BoundaryPair> partial;
};

// clamp(alpha*x1 + (1-alpha)*x2, 0, 1); exact convex combination for in-range
// inputs.
ImageSample naive_blend(const ImageSample& x1, const ImageSample& x2, double alpha);

// Targeted PGD toward `target_label` over the robust model, projected into
// the eps-ball around x and [0,1]. Warns (permitted) when the model is not
// flagged robust.
ImageSample robust_blend(const zoo::ClassifierHandle& robust_model, const ImageSample& x,
                         int target_label, double eps, const BlendConfig& cfg);

// Bisects param in [0, eps0] against the hard-label oracle. param_to_image(0)
// must map to the unmodified source.
BoundaryPair boundary_search(const std::function<ImageSample(double)>& param_to_image,
                             const transfer::TargetOracle& tm, int source_label,
                             const BlendConfig& cfg, QueryLedger& ledger,
                             const std::string& sample_id);

struct HarvestProvenance {
  std::string method;  // "naive" or "robust"
  double inside_param = 0;
  double outside_param = 0;
  int tm_label = -1;
  int queries = 0;
  std::string source_ref;
};

struct HarvestResult {
  std::vector<ImageSample> images;  // labeled by the TM
  std::vector<HarvestProvenance> provenance;
  int pairs_found = 0;
  int skipped = 0;        // NoBoundaryFound sources
  bool exhausted = false;  // ledger cap hit; result is partial
};

// Per source image: pick a blend target class (uniform over other classes,
// seeded), run boundary_search, and keep both bracket images labeled by the
// TM. Skips sources whose label never flips.
HarvestResult harvest_boundary_set(const std::vector<ImageSample>& sources,
                                   const std::vector<std::vector<ImageSample>>& per_class_pool,
                                   const std::optional<zoo::ClassifierHandle>& robust_model,
                                   const transfer::TargetOracle& tm, const BlendConfig& cfg,
                                   int n_per_class, QueryLedger& ledger, std::uint64_t seed);

// Fine-tunes the substitute on base_train + boundary images (uniform mixing).
// Boundary labels outside the substitute's class space are dropped (count
// logged to stderr).
zoo::ClassifierHandle refine_substitute(const zoo::ClassifierHandle& sm,
                                        const std::vector<ImageSample>& boundary_set,
                                        const corpus::Dataset& base_dataset,
                                        const zoo::TrainConfig& cfg);

}  // namespace purebox::blend
