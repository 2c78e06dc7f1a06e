#include "purebox/blend/blend.hpp"

#include <algorithm>
#include <cstdio>

#include "purebox/zoo/pgd.hpp"

namespace purebox::blend {

void BlendConfig::validate() const {
  if (eps0 <= 0 || eps0 > 1) raise(ErrorKind::ConfigInvalid, "eps0 must lie in (0,1]");
  if (max_recursions < 1) raise(ErrorKind::ConfigInvalid, "max_recursions must be >= 1");
  if (norm_tolerance <= 0 || norm_tolerance >= 1) {
    raise(ErrorKind::ConfigInvalid, "norm_tolerance must lie in (0,1)");
  }
  if (pgd_steps < 1) raise(ErrorKind::ConfigInvalid, "pgd_steps must be >= 1");
}

void QueryLedger::record(const std::string& sample_id) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (budget_cap_ && total_.load() + 1 > *budget_cap_) {
    raise(ErrorKind::QueryBudgetExhausted,
          "query cap " + std::to_string(*budget_cap_) + " reached");
  }
  total_.fetch_add(1);
  ++per_sample_[sample_id];
}

long long QueryLedger::for_sample(const std::string& sample_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  const auto it = per_sample_.find(sample_id);
  return it == per_sample_.end() ? 0 : it->second;
}

std::map<std::string, long long> QueryLedger::per_sample() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return per_sample_;
}

ImageSample naive_blend(const ImageSample& x1, const ImageSample& x2, double alpha) {
  if (x1.pixels.size() != x2.pixels.size()) {
    raise(ErrorKind::ShapeMismatch, "blend inputs differ in shape");
  }
  if (alpha < 0 || alpha > 1) raise(ErrorKind::AlphaOutOfRange, "alpha must lie in [0,1]");
  const Scalar a = static_cast<Scalar>(alpha);
  ImageSample out;
  out.pixels = clip01(a * x1.pixels + (1 - a) * x2.pixels);
  out.label = -1;
  return out;
}

ImageSample robust_blend(const zoo::ClassifierHandle& robust_model, const ImageSample& x,
                         int target_label, double eps, const BlendConfig& cfg) {
  if (target_label < 0 || target_label >= robust_model.arch.num_classes) {
    raise(ErrorKind::InvalidTarget, "target label " + std::to_string(target_label) +
                                        " outside the model's class space");
  }
  if (eps < 0 || eps > 1) raise(ErrorKind::ConfigInvalid, "eps must lie in [0,1]");
  if (!robust_model.robust) {
    std::fprintf(stderr,
                 "[purebox] warning: blending over a non-robust model; quality degrades\n");
  }
  if (eps == 0) return x;  // zero-radius ball

  const double step = cfg.pgd_step_size > 0 ? cfg.pgd_step_size : eps / 10.0;
  const MatX out =
      zoo::pgd_targeted(*robust_model.net, x.pixels, {target_label}, eps, step, cfg.pgd_steps);
  ImageSample blended = x;
  blended.pixels = out.col(0);
  blended.label = -1;
  return blended;
}

BoundaryPair boundary_search(const std::function<ImageSample(double)>& param_to_image,
                             const transfer::TargetOracle& tm, int source_label,
                             const BlendConfig& cfg, QueryLedger& ledger,
                             const std::string& sample_id) {
  cfg.validate();

  // Endpoint check: the unmodified source must carry the source label
  // (source_label == -1 adopts whatever the TM returns here).
  ImageSample inside = param_to_image(0.0);
  ledger.record(sample_id);
  const int label_at_zero = tm(inside.pixels);
  int queries = 1;
  if (source_label >= 0 && label_at_zero != source_label) {
    raise(ErrorKind::NoBoundaryFound, "TM labels the source as " + std::to_string(label_at_zero) +
                                          ", expected " + std::to_string(source_label));
  }
  const int origin_label = label_at_zero;

  ImageSample outside = param_to_image(cfg.eps0);
  ledger.record(sample_id);
  int outside_label = tm(outside.pixels);
  ++queries;
  if (outside_label == origin_label) {
    raise(ErrorKind::NoBoundaryFound,
          "TM label does not flip at eps0 after " + std::to_string(queries) + " queries");
  }

  double lo = 0.0, hi = cfg.eps0;
  const double tol = cfg.norm_tolerance * cfg.eps0;
  inside.label = origin_label;
  outside.label = outside_label;

  for (int k = 0; k < cfg.max_recursions; ++k) {
    if (cfg.stop_at_tolerance && (hi - lo) <= tol) break;
    const double mid = 0.5 * (lo + hi);
    ImageSample candidate = param_to_image(mid);
    try {
      ledger.record(sample_id);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::QueryBudgetExhausted) {
        BoundaryPair partial;
        partial.inside_image = inside;
        partial.outside_image = outside;
        partial.inside_param = lo;
        partial.outside_param = hi;
        partial.label_inside = origin_label;
        partial.label_outside = outside_label;
        partial.queries_used = queries;
        partial.tolerance_met = (hi - lo) <= tol;
        throw BudgetExhaustedError(e.what(), std::move(partial));
      }
      throw;
    }
    const int label = tm(candidate.pixels);
    ++queries;
    if (label == origin_label) {
      lo = mid;
      candidate.label = label;
      inside = std::move(candidate);
    } else {
      hi = mid;
      outside_label = label;
      candidate.label = label;
      outside = std::move(candidate);
    }
  }

  BoundaryPair pair;
  pair.inside_image = std::move(inside);
  pair.outside_image = std::move(outside);
  pair.inside_param = lo;
  pair.outside_param = hi;
  pair.label_inside = origin_label;
  pair.label_outside = outside_label;
  pair.queries_used = queries;
  pair.tolerance_met = (hi - lo) <= tol;
  return pair;
}

HarvestResult harvest_boundary_set(const std::vector<ImageSample>& sources,
                                   const std::vector<std::vector<ImageSample>>& per_class_pool,
                                   const std::optional<zoo::ClassifierHandle>& robust_model,
                                   const transfer::TargetOracle& tm, const BlendConfig& cfg,
                                   int n_per_class, QueryLedger& ledger, std::uint64_t seed) {
  if (sources.empty()) raise(ErrorKind::EmptyResult, "no source images to harvest from");
  if (cfg.method == BlendMethod::robust && !robust_model) {
    raise(ErrorKind::ConfigInvalid, "robust harvesting needs a robust model");
  }
  const int num_classes = static_cast<int>(per_class_pool.size());
  if (num_classes < 2) raise(ErrorKind::ConfigInvalid, "need at least two classes to blend");

  Rng rng(seed);
  HarvestResult result;
  std::vector<int> taken(static_cast<std::size_t>(num_classes), 0);

  for (std::size_t idx = 0; idx < sources.size(); ++idx) {
    const ImageSample& src = sources[idx];
    if (src.label < 0 || src.label >= num_classes) continue;
    if (taken[static_cast<std::size_t>(src.label)] >= n_per_class) continue;

    // Blend target: uniform over the other classes.
    int target_class = rng.index(num_classes - 1);
    if (target_class >= src.label) ++target_class;

    std::function<ImageSample(double)> param_to_image;
    if (cfg.method == BlendMethod::naive) {
      const auto& pool = per_class_pool[static_cast<std::size_t>(target_class)];
      if (pool.empty()) continue;
      const ImageSample other = pool[static_cast<std::size_t>(rng.index(static_cast<int>(pool.size())))];
      const double eps0 = cfg.eps0;
      param_to_image = [src, other, eps0](double s) {
        return naive_blend(src, other, 1.0 - s / eps0);
      };
    } else {
      const zoo::ClassifierHandle& model = *robust_model;
      int target_label = target_class % model.arch.num_classes;
      if (target_label == src.label % model.arch.num_classes) {
        target_label = (target_label + 1) % model.arch.num_classes;
      }
      param_to_image = [&model, src, target_label, &cfg](double s) {
        return robust_blend(model, src, target_label, s, cfg);
      };
    }

    const std::string sample_id =
        src.manifest_ref.empty() ? "src" + std::to_string(idx) : src.manifest_ref;
    try {
      BoundaryPair pair = boundary_search(param_to_image, tm, -1, cfg, ledger, sample_id);
      ImageSample in_img = pair.inside_image;
      in_img.label = pair.label_inside;
      ImageSample out_img = pair.outside_image;
      out_img.label = pair.label_outside;
      result.images.push_back(std::move(in_img));
      result.images.push_back(std::move(out_img));
      const char* method = cfg.method == BlendMethod::naive ? "naive" : "robust";
      result.provenance.push_back({method, pair.inside_param, pair.outside_param,
                                   pair.label_inside, pair.queries_used, sample_id});
      result.provenance.push_back({method, pair.inside_param, pair.outside_param,
                                   pair.label_outside, pair.queries_used, sample_id});
      ++result.pairs_found;
      ++taken[static_cast<std::size_t>(src.label)];
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::NoBoundaryFound) {
        ++result.skipped;
        continue;
      }
      if (e.kind() == ErrorKind::QueryBudgetExhausted) {
        result.exhausted = true;  // partial harvest
        return result;
      }
      throw;
    }
  }
  return result;
}

zoo::ClassifierHandle refine_substitute(const zoo::ClassifierHandle& sm,
                                        const std::vector<ImageSample>& boundary_set,
                                        const corpus::Dataset& base_dataset,
                                        const zoo::TrainConfig& cfg) {
  if (boundary_set.empty()) raise(ErrorKind::EmptyBoundarySet, "boundary set is empty");

  std::vector<const ImageSample*> usable;
  int dropped = 0;
  for (const auto& s : boundary_set) {
    if (s.label >= 0 && s.label < sm.arch.num_classes) {
      usable.push_back(&s);
    } else {
      ++dropped;
    }
  }
  if (dropped > 0) {
    std::fprintf(stderr, "[purebox] refine: dropped %d TM labels outside the SM class space\n",
                 dropped);
  }
  if (usable.empty()) {
    raise(ErrorKind::EmptyBoundarySet, "no boundary labels inside the SM class space");
  }

  corpus::Dataset mixed;
  mixed.shape = base_dataset.shape;
  mixed.class_map = sm.class_map;
  mixed.val = base_dataset.val;
  mixed.eval = base_dataset.eval;

  const Eigen::Index rows = base_dataset.train.images.rows();
  const int base_n = base_dataset.train.count();
  const int extra_n = static_cast<int>(usable.size());
  mixed.train.images.resize(rows, base_n + extra_n);
  mixed.train.images.leftCols(base_n) = base_dataset.train.images;
  mixed.train.labels = base_dataset.train.labels;
  mixed.train.refs = base_dataset.train.refs;
  for (int i = 0; i < extra_n; ++i) {
    mixed.train.images.col(base_n + i) = usable[static_cast<std::size_t>(i)]->pixels;
    mixed.train.labels.push_back(usable[static_cast<std::size_t>(i)]->label);
    mixed.train.refs.push_back(usable[static_cast<std::size_t>(i)]->manifest_ref);
  }

  return zoo::fine_tune(sm, mixed, cfg);
}

}  // namespace purebox::blend
