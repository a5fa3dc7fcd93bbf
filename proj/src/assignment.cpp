#include "riskq/assignment.hpp"

#include <algorithm>
#include <cmath>

namespace riskq {

double assignment_reward(double job, double worker, RewardModel model, Rng& rng) {
  if (model == RewardModel::Deterministic) return job * worker;
  return rng.bernoulli(worker) ? job : 0.0;
}

void AssignmentEnv::features(const State& x, int h, int a,
                             Eigen::Ref<Eigen::VectorXd> out) const {
  const int m = H_ - h;  // workers remaining
  if (static_cast<int>(x.workers.size()) != m)
    throw ContractError("AssignmentEnv: state does not match stage");
  if (a < 0 || a >= m) throw InputError("AssignmentEnv: rank out of range");
  int k = 0;
  for (int j = 0; j < m; ++j)
    if (j != a) out[k++] = x.workers[static_cast<std::size_t>(j)];
  out[m - 1] = x.job * x.workers[static_cast<std::size_t>(a)];
}

AssignState AssignmentEnv::initial_state(Rng& rng) const {
  AssignState s;
  s.stage = 0;
  s.workers.resize(static_cast<std::size_t>(H_));
  for (auto& w : s.workers) w = rng.uniform01();
  std::sort(s.workers.begin(), s.workers.end());
  s.job = rng.uniform01();
  return s;
}

AssignState AssignmentEnv::transition(const State& x, int a, double next_job) const {
  if (a < 0 || a >= static_cast<int>(x.workers.size()))
    throw InputError("AssignmentEnv: rank out of range");
  AssignState s;
  s.stage = x.stage + 1;
  s.workers.reserve(x.workers.size() - 1);
  for (int j = 0; j < static_cast<int>(x.workers.size()); ++j)
    if (j != a) s.workers.push_back(x.workers[static_cast<std::size_t>(j)]);
  s.job = next_job;
  return s;
}

void AssignmentEnv::sample_batch(const State& x, int h, int a, int n, Rng& rng,
                                 Batch<State>& out) const {
  const double worker = x.workers.at(static_cast<std::size_t>(a));
  for (int j = 0; j < n; ++j) {
    out.rewards[j] = assignment_reward(x.job, worker, model_, rng);
    if (h < H_ - 1) out.next.push_back(transition(x, a, rng.uniform01()));
  }
}

WeightTable analytic_thresholds(int horizon) {
  if (horizon < 1) throw InputError("analytic_thresholds: horizon must be >= 1");
  // rows[m-1] = thresholds with m workers remaining; U(0,1) jobs give
  // integral (hi^2 - lo^2)/2 and linear tail probabilities.
  std::vector<std::vector<double>> by_remaining(static_cast<std::size_t>(horizon));
  by_remaining[0] = {0.5};
  for (int m = 2; m <= horizon; ++m) {
    const auto& prev = by_remaining[static_cast<std::size_t>(m - 2)];
    std::vector<double> cur(static_cast<std::size_t>(m));
    for (int j = 1; j <= m; ++j) {
      const double lo = j >= 2 ? prev[static_cast<std::size_t>(j - 2)] : 0.0;
      const double hi = j <= m - 1 ? prev[static_cast<std::size_t>(j - 1)] : 1.0;
      double v = (hi * hi - lo * lo) / 2.0;
      if (j >= 2) v += lo * lo;               // lower-ranked worker takes the job
      if (j <= m - 1) v += hi * (1.0 - hi);   // higher-ranked worker takes the job
      cur[static_cast<std::size_t>(j - 1)] = v;
    }
    by_remaining[static_cast<std::size_t>(m - 1)] = std::move(cur);
  }
  WeightTable t(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h)
    t[static_cast<std::size_t>(h)] = by_remaining[static_cast<std::size_t>(horizon - h - 1)];
  return t;
}

int analytic_action(const AssignState& x, const WeightTable& thresholds) {
  const int m = static_cast<int>(x.workers.size());
  if (m <= 1) return 0;
  const int h = static_cast<int>(thresholds.size()) - m;  // current 0-based stage
  const auto& next_row = thresholds.at(static_cast<std::size_t>(h + 1));
  int rank = 0;
  for (double w : next_row)
    if (w < x.job) ++rank;
  return rank;
}

double weight_distance(const WeightTable& a, const WeightTable& b) {
  if (a.size() != b.size()) throw InputError("weight_distance: stage count mismatch");
  if (a.empty()) throw InputError("weight_distance: empty tables");
  double total = 0.0;
  for (std::size_t h = 0; h < a.size(); ++h) {
    if (a[h].size() != b[h].size() || a[h].empty())
      throw InputError("weight_distance: row shape mismatch");
    double row = 0.0;
    for (std::size_t j = 0; j < a[h].size(); ++j) {
      const double d = a[h][j] - b[h][j];
      row += d * d;
    }
    total += row / static_cast<double>(a[h].size());
  }
  return std::sqrt(total / static_cast<double>(a.size()));
}

double analytic_mean(int horizon) {
  const auto t = analytic_thresholds(horizon);
  double total = 0.0;
  for (int j = 0; j < horizon; ++j)
    total += t[0][static_cast<std::size_t>(j)] * static_cast<double>(j + 1) /
             static_cast<double>(horizon + 1);
  return total;
}

WeightTable worker_coefficients(const StageWeights& w) {
  const int H = w.horizon();
  if (H < 2) throw InputError("worker_coefficients: horizon must be >= 2");
  WeightTable t(static_cast<std::size_t>(H - 1));
  for (int h = 0; h + 1 < H; ++h) {
    const auto& col = w.stages[static_cast<std::size_t>(h)].weights.col(0);
    t[static_cast<std::size_t>(h)].assign(col.data(), col.data() + col.size() - 1);
  }
  return t;
}

WeightTable oracle_reference(const WeightTable& thresholds) {
  if (thresholds.size() < 2) throw InputError("oracle_reference: horizon must be >= 2");
  return WeightTable(thresholds.begin() + 1, thresholds.end());
}

}  // namespace riskq
