#pragma once

#include <Eigen/Dense>

#include <utility>

#include "riskq/risk.hpp"

namespace riskq {

/// Running bias correction for lazy policy evaluation within one backward
/// pass at one stage. Records renewed earlier in the pass contribute their
/// summed improvement Q(y, cached) - min_a Q(y, a); Delta is the sum over
/// renewed records divided by their count (literal mode) or by count times
/// batch size (normalized mode). Zero while no record has been renewed.
class DeltaTracker {
 public:
  DeltaTracker(int batch_size, bool normalized)
      : batch_(batch_size), normalized_(normalized) {}

  void add_renewal(double improvement_sum) {
    sum_ += improvement_sum;
    ++count_;
  }

  double delta() const {
    if (count_ == 0) return 0.0;
    return sum_ / (normalized_ ? static_cast<double>(count_) * batch_ : static_cast<double>(count_));
  }

  int renewed() const { return count_; }

 private:
  double sum_ = 0.0;
  int count_ = 0;
  int batch_;
  bool normalized_;
};

/// Successor values for one record's batch under lazy policy evaluation.
///
/// renew = true: exact minimization for every batch member; the cached
/// actions are replaced through on_cache and, when track_improvement is
/// set, the record's total improvement joins the tracker for use by
/// records later in the pass.
/// renew = false: cached-action Q values shifted down by the tracker's
/// current Delta.
///
/// exact_opt(j) -> (encoded action, optimal value); cached_q(j) -> Q at
/// the stored action; on_cache(j, encoded action) stores a renewal.
template <class ExactOpt, class CachedQ, class OnCache>
void lazy_values(int batch_size, bool renew, bool track_improvement, DeltaTracker& tracker,
                 ExactOpt&& exact_opt, CachedQ&& cached_q, OnCache&& on_cache,
                 Eigen::Ref<Eigen::VectorXd> out) {
  if (renew) {
    double improvement = 0.0;
    for (int j = 0; j < batch_size; ++j) {
      if (track_improvement) improvement += cached_q(j);
      auto [action, value] = exact_opt(j);
      out[j] = value;
      on_cache(j, action);
    }
    if (track_improvement) {
      improvement -= out.head(batch_size).sum();
      tracker.add_renewal(improvement);
    }
  } else {
    const double delta = tracker.delta();
    for (int j = 0; j < batch_size; ++j) out[j] = cached_q(j) - delta;
  }
}

/// Risk estimate from lazily evaluated successor values. By the translation
/// property this equals the aggregate of the cached-action Q values minus
/// Delta when the Case-2 shift was applied.
inline double psi_estimate(const Eigen::Ref<const Eigen::VectorXd>& values,
                           const RiskConfig& cfg) {
  return aggregate(values, cfg);
}

}  // namespace riskq
