#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "riskq/common.hpp"

namespace riskq {

enum class Orientation { Minimize, Maximize };

enum class RiskKind { Mean, WorstMix, SemiDev, MeanAvar, Spectral };

const char* to_string(Orientation o);
const char* to_string(RiskKind k);
Orientation orientation_from_string(const std::string& name);
RiskKind risk_kind_from_string(const std::string& name);

/// One AVaR component of a spectral mixture: the weight placed on the
/// tail term and its level alpha in (0, 1].
struct AvarLevel {
  double weight = 0.0;
  double alpha = 1.0;
};

/// Parameters of the per-stage risk mapping.
///
/// `kappa` drives the batch aggregators (WorstMix, SemiDev); `levels`
/// drives MeanAvar/Spectral, which act on augmented controls and require
/// batch_size == 1. The residual weight on the plain expectation is
/// 1 - sum of level weights and must be nonnegative.
struct RiskConfig {
  RiskKind kind = RiskKind::Mean;
  double kappa = 0.0;
  std::vector<AvarLevel> levels;
  int batch_size = 1;
  Orientation orientation = Orientation::Minimize;

  bool augmented() const { return kind == RiskKind::MeanAvar || kind == RiskKind::Spectral; }
  double tail_weight() const {
    double s = 0.0;
    for (const auto& l : levels) s += l.weight;
    return s;
  }
  RiskConfig with_orientation(Orientation o) const {
    RiskConfig c = *this;
    c.orientation = o;
    return c;
  }
  void validate() const;

  static RiskConfig mean(int batch, Orientation o = Orientation::Minimize);
  static RiskConfig worst_mix(double kappa, int batch, Orientation o = Orientation::Minimize);
  static RiskConfig semi_dev(double kappa, int batch, Orientation o = Orientation::Minimize);
  static RiskConfig mean_avar(double kappa, double alpha, Orientation o = Orientation::Minimize);
  static RiskConfig spectral(std::vector<AvarLevel> levels, Orientation o = Orientation::Minimize);
};

/// Discrete distribution over real outcomes. Probabilities must be
/// nonnegative and sum to one within 1e-12; make() renormalizes inside
/// that tolerance and rejects anything worse.
struct FiniteDistribution {
  Eigen::VectorXd prob;
  Eigen::VectorXd value;

  static FiniteDistribution make(Eigen::VectorXd prob, Eigen::VectorXd value);
  Eigen::Index size() const { return prob.size(); }
  double mean() const { return prob.dot(value); }
};

namespace detail {

// Minimization-orientation batch aggregator. Maximize mirrors it by
// negation, which preserves the coherence axioms mechanically.
template <typename Derived>
double aggregate_min(const Eigen::ArrayBase<Derived>& v, RiskKind kind, double kappa) {
  const double m = v.mean();
  switch (kind) {
    case RiskKind::Mean:
      return m;
    case RiskKind::WorstMix:
      return (1.0 - kappa) * m + kappa * v.maxCoeff();
    case RiskKind::SemiDev:
      return m + kappa * (v - m).max(0.0).mean();
    default:
      throw InputError("aggregate: augmented kinds use aggregate_augmented");
  }
}

}  // namespace detail

/// Risk aggregator Psi applied to one mini-batch of values.
template <typename Derived>
double aggregate(const Eigen::MatrixBase<Derived>& values, const RiskConfig& cfg) {
  if (values.size() == 0) throw InputError("aggregate: empty batch");
  if (values.size() != cfg.batch_size)
    throw InputError("aggregate: batch length does not match RiskConfig batch_size");
  if (cfg.orientation == Orientation::Minimize)
    return detail::aggregate_min(values.array(), cfg.kind, cfg.kappa);
  return -detail::aggregate_min((-values).array(), cfg.kind, cfg.kappa);
}

/// Single-observation estimator for MeanAvar/Spectral with augmented
/// controls eta (one per AVaR level).
double aggregate_augmented(double value, const Eigen::Ref<const Eigen::VectorXd>& etas,
                           const RiskConfig& cfg);

/// AVaR of a discrete loss distribution at level alpha, in closed form
/// from the sorted atoms. Equals min_eta { eta + E[(V-eta)_+]/alpha };
/// any alpha-quantile attains the minimum. Minimization orientation;
/// callers mirror by negation for the reward setting.
double avar_discrete(const FiniteDistribution& dist, double alpha);

/// Exact mini-batch transition risk: the expectation over all N-tuples of
/// atoms of the batch aggregator, by full enumeration (guard: size^N <= 1e7).
double minibatch_risk_exact(const FiniteDistribution& dist, const RiskConfig& cfg);

/// Closed-form mean-AVaR / spectral transition risk on a finite distribution.
double spectral_risk_exact(const FiniteDistribution& dist, const RiskConfig& cfg);

/// Transition risk used by the exact DP solver: mini-batch enumeration for
/// the batch kinds, the AVaR closed form for the augmented kinds.
double transition_risk_exact(const FiniteDistribution& dist, const RiskConfig& cfg);

}  // namespace riskq
