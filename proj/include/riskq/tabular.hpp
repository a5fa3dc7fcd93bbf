#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "riskq/engine.hpp"
#include "riskq/risk.hpp"

namespace riskq {

struct TransitionAtom {
  double prob = 0.0;
  double cost = 0.0;
  int next = 0;
};

/// Finite-horizon tabular MDP. Stages 0..H-2 carry joint cost-successor
/// distributions (deterministic costs are atoms sharing one cost per
/// action); stage H-1 carries the state-only terminal cost. All costs lie
/// in [0, 1].
struct TabularMDP {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;  // includes the terminal stage
  std::vector<std::vector<TransitionAtom>> atoms;  // [(h * X + x) * A + a]
  Eigen::VectorXd terminal_cost;
  bool random_costs = false;

  const std::vector<TransitionAtom>& at(int h, int x, int a) const {
    return atoms[static_cast<std::size_t>((h * num_states + x) * num_actions + a)];
  }
  std::vector<TransitionAtom>& at(int h, int x, int a) {
    return atoms[static_cast<std::size_t>((h * num_states + x) * num_actions + a)];
  }

  void validate() const;

  /// JSON document as documented in the README: either the compact form
  /// {horizon, num_states, num_actions, kernels[h][x][a][y], costs[h][x][a],
  /// terminal_costs[x]} or the explicit form with
  /// transitions[h][x][a] = [[prob, cost, next], ...].
  static TabularMDP parse(const std::string& json_text);
  static TabularMDP load(const std::string& path);
  std::string to_json_text() const;
};

struct ValueTable {
  std::vector<Eigen::VectorXd> V;           // per stage
  std::vector<Eigen::MatrixXd> Q;           // per stage, |X| x |A|
  std::vector<std::vector<int>> policy;     // greedy action per stage/state
};

/// Exact risk-averse dynamic programming: V_{H-1} equals the terminal
/// cost, Q_h(x,a) aggregates cost-plus-continuation atoms through the
/// exact transition risk, V_h is the per-state optimum.
ValueTable solve(const TabularMDP& mdp, const RiskConfig& cfg);

/// Same recursion with the actions pinned to a fixed Markov policy.
ValueTable policy_value(const TabularMDP& mdp, const std::vector<std::vector<int>>& policy,
                        const RiskConfig& cfg);

/// Independent oracle for solve(): evaluates every deterministic Markov
/// policy by direct recursive enumeration of batch outcomes and returns
/// the policy-wise optimum. Tiny instances only (|X|*|A| <= 12, H <= 3).
ValueTable brute_force_verify(const TabularMDP& mdp, const RiskConfig& cfg);

std::string value_table_to_json_text(const ValueTable& table);

/// Fixed 3-state / 2-action / horizon-3 benchmark with well-mixed kernels
/// and small action gaps; the default instance behind the "tabular" CLI
/// environment and the learning-consistency tests.
TabularMDP small_benchmark_mdp();

/// Engine adapter with one-hot features: stages 0..H-2 index (state,
/// action) pairs, the terminal stage indexes states and has one action.
class TabularEnv {
 public:
  using State = int;

  explicit TabularEnv(const TabularMDP& mdp) : mdp_(&mdp) { mdp.validate(); }

  int horizon() const { return mdp_->horizon; }
  int feature_dim(int h) const {
    return h < mdp_->horizon - 1 ? mdp_->num_states * mdp_->num_actions : mdp_->num_states;
  }
  int num_actions(const State&, int h) const {
    return h < mdp_->horizon - 1 ? mdp_->num_actions : 1;
  }
  void features(const State& x, int h, int a, Eigen::Ref<Eigen::VectorXd> out) const {
    out.setZero();
    out[h < mdp_->horizon - 1 ? x * mdp_->num_actions + a : x] = 1.0;
  }
  State initial_state(Rng& rng) const { return rng.uniform_int(mdp_->num_states); }
  void sample_batch(const State& x, int h, int a, int n, Rng& rng, Batch<State>& out) const {
    if (h == mdp_->horizon - 1) {
      out.rewards.setConstant(mdp_->terminal_cost[x]);
      return;
    }
    const auto& row = mdp_->at(h, x, a);
    for (int j = 0; j < n; ++j) {
      double u = rng.uniform01();
      const TransitionAtom* hit = &row.back();
      for (const auto& atom : row) {
        if (u < atom.prob) {
          hit = &atom;
          break;
        }
        u -= atom.prob;
      }
      out.rewards[j] = hit->cost;
      out.next.push_back(hit->next);
    }
  }
  bool deterministic_rewards() const { return !mdp_->random_costs; }
  const TabularMDP& mdp() const { return *mdp_; }

 private:
  const TabularMDP* mdp_;
};

}  // namespace riskq
