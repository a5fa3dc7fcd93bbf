#pragma once

#include <Eigen/Dense>

#include <vector>

#include "riskq/engine.hpp"
#include "riskq/rng.hpp"

namespace riskq {

enum class RewardModel { Deterministic, Bernoulli };

/// Stage state of the sequential assignment problem: the ascending weights
/// of the workers still available plus the value of the job that just
/// arrived.
struct AssignState {
  int stage = 0;  // 0-based
  std::vector<double> workers;
  double job = 0.0;
};

/// Reward of assigning a worker of weight `worker` to a job of value
/// `job`: the product for the deterministic model, job-or-nothing with
/// success probability `worker` for the Bernoulli model. Both have
/// conditional mean job*worker.
double assignment_reward(double job, double worker, RewardModel model, Rng& rng);

/// Sequential stochastic assignment environment: H jobs with i.i.d.
/// U(0,1) values arrive one at a time; H workers with i.i.d. U(0,1)
/// weights are consumed one per stage. Maximization orientation.
class AssignmentEnv {
 public:
  using State = AssignState;

  AssignmentEnv(int horizon, RewardModel model) : H_(horizon), model_(model) {
    if (horizon < 1) throw InputError("AssignmentEnv: horizon must be >= 1");
  }

  int horizon() const { return H_; }
  RewardModel model() const { return model_; }
  int feature_dim(int h) const { return H_ - h; }
  int num_actions(const State&, int h) const { return H_ - h; }

  /// Workers remaining after removing rank a, then job * chosen weight.
  void features(const State& x, int h, int a, Eigen::Ref<Eigen::VectorXd> out) const;

  State initial_state(Rng& rng) const;

  /// Removes the rank-a worker (order preserved) and installs the next job.
  State transition(const State& x, int a, double next_job) const;

  void sample_batch(const State& x, int h, int a, int n, Rng& rng, Batch<State>& out) const;

  bool deterministic_rewards() const { return model_ == RewardModel::Deterministic; }

 private:
  int H_;
  RewardModel model_;
};

/// Ragged per-stage weight table; row h has one entry per remaining worker.
using WeightTable = std::vector<std::vector<double>>;

/// Optimal expected job value per remaining worker rank for U(0,1) jobs,
/// by the backward recursion with all integrals in closed form. Row h has
/// H-h entries (0-based stages).
WeightTable analytic_thresholds(int horizon);

/// Rank-matching action: the worker whose rank among those remaining
/// matches the job's rank within the next stage's threshold row.
int analytic_action(const AssignState& x, const WeightTable& thresholds);

/// Dimension-balanced distance between two weight tables of equal shape:
/// sqrt of the stage-averaged, length-normalized squared difference.
double weight_distance(const WeightTable& a, const WeightTable& b);

/// Exact expected total reward of the rank-matching policy with U(0,1)
/// jobs and workers: sum over ranks of threshold times the order-statistic
/// mean rank/(H+1).
double analytic_mean(int horizon);

class AnalyticPolicy {
 public:
  explicit AnalyticPolicy(int horizon)
      : thresholds_(analytic_thresholds(horizon)) {}
  int operator()(const AssignState& x, int /*h*/) const {
    return analytic_action(x, thresholds_);
  }
  const WeightTable& thresholds() const { return thresholds_; }

 private:
  WeightTable thresholds_;
};

/// Worker-value regression coefficients from learned stage weights:
/// row h holds the first H-h-1 coefficients (the job-product coefficient
/// is tracked separately), for stages 0..H-2.
WeightTable worker_coefficients(const StageWeights& w);

/// Threshold rows aligned with worker_coefficients: row h of the result is
/// threshold row h+1.
WeightTable oracle_reference(const WeightTable& thresholds);

}  // namespace riskq
