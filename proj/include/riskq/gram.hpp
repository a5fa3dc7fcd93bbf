#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <atomic>
#include <cmath>

#include "riskq/common.hpp"

namespace riskq {

/// Regularized Gram matrix lambda*I + sum phi phi^T with a maintained
/// inverse. Rank-1 updates use the Sherman-Morrison identity; a full
/// re-factorization every 10^4 updates washes out accumulated drift.
///
/// Mutations are single-owner; const queries may run concurrently between
/// mutations.
template <typename Scalar = double>
class GramState {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GramState(Eigen::Index dim, Scalar ridge) : ridge_(ridge) {
    if (dim < 1) throw InputError("GramState: dimension must be >= 1");
    if (!(ridge > Scalar(0))) throw InputError("GramState: ridge must be > 0");
    gram_ = Mat::Identity(dim, dim) * ridge;
    inv_ = Mat::Identity(dim, dim) / ridge;
    scratch_.resize(dim);
  }

  /// Rebuilds the state from a stored Gram matrix (weights reload path).
  static GramState from_matrix(const Mat& gram, Scalar ridge) {
    GramState s(gram.rows(), ridge);
    s.gram_ = gram;
    s.refactor();
    return s;
  }

  GramState(const GramState& o)
      : gram_(o.gram_), inv_(o.inv_), scratch_(o.scratch_), ridge_(o.ridge_),
        count_(o.count_), negative_clamps_(o.negative_clamps_.load()) {}
  GramState& operator=(const GramState& o) {
    gram_ = o.gram_;
    inv_ = o.inv_;
    scratch_ = o.scratch_;
    ridge_ = o.ridge_;
    count_ = o.count_;
    negative_clamps_.store(o.negative_clamps_.load());
    return *this;
  }

  Eigen::Index dim() const { return gram_.rows(); }
  Scalar ridge() const { return ridge_; }
  long count() const { return count_; }
  const Mat& matrix() const { return gram_; }
  const Mat& inverse() const { return inv_; }
  long negative_bonus_count() const { return negative_clamps_.load(); }

  void update(const Eigen::Ref<const Vec>& phi) {
    if (phi.size() != dim()) throw InputError("GramState::update: dimension mismatch");
    scratch_.noalias() = inv_ * phi;
    const Scalar denom = Scalar(1) + phi.dot(scratch_);
    inv_.noalias() -= (scratch_ * scratch_.transpose()) / denom;
    gram_.noalias() += phi * phi.transpose();
    ++count_;
    if (count_ % kRefactorEvery == 0) refactor();
  }

  /// Exploration bonus sqrt(phi^T Lambda^{-1} phi). A numerically negative
  /// quadratic form is clamped to zero and counted.
  Scalar bonus(const Eigen::Ref<const Vec>& phi) const {
    if (phi.size() != dim()) throw InputError("GramState::bonus: dimension mismatch");
    Scalar q = Scalar(0);
    for (Eigen::Index i = 0; i < dim(); ++i) q += phi[i] * inv_.row(i).dot(phi);
    if (q < Scalar(0)) {
      negative_clamps_.fetch_add(1, std::memory_order_relaxed);
      return Scalar(0);
    }
    return std::sqrt(q);
  }

  void refactor() { inv_ = gram_.llt().solve(Mat::Identity(dim(), dim())); }

 private:
  static constexpr long kRefactorEvery = 10000;
  Mat gram_, inv_;
  Vec scratch_;
  Scalar ridge_;
  long count_ = 0;
  mutable std::atomic<long> negative_clamps_{0};
};

/// Accumulator for one stage's ridge regression: the Gram state plus the
/// target-weighted feature sum b = sum phi_tau * y_tau.
struct StageRegression {
  GramState<double> gram;
  Eigen::VectorXd b;

  StageRegression(Eigen::Index dim, double ridge)
      : gram(dim, ridge), b(Eigen::VectorXd::Zero(dim)) {}

  void add(const Eigen::Ref<const Eigen::VectorXd>& phi, double target) {
    gram.update(phi);
    b.noalias() += phi * target;
  }
};

/// Ridge weights w = Lambda^{-1} b, the minimizer of
/// sum (y_tau - w^T phi_tau)^2 + ridge * |w|^2.
inline Eigen::VectorXd ridge_solve(const StageRegression& reg) {
  if (reg.b.size() != reg.gram.dim()) throw InputError("ridge_solve: dimension mismatch");
  return reg.gram.inverse() * reg.b;
}

}  // namespace riskq
