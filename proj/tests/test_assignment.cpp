#include "riskq/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "riskq/stats.hpp"
#include "riskq/tabular.hpp"

using namespace riskq;

namespace {

AssignState state_of(std::vector<double> workers, double job) {
  AssignState s;
  s.workers = std::move(workers);
  s.job = job;
  return s;
}

}  // namespace

TEST_CASE("transition removes the chosen rank and keeps order") {
  AssignmentEnv env(3, RewardModel::Deterministic);
  const auto s = state_of({0.2, 0.5, 0.9}, 0.7);
  const auto next = env.transition(s, 1, 0.4);
  CHECK(next.workers == std::vector<double>{0.2, 0.9});
  CHECK(next.job == doctest::Approx(0.4));
  CHECK(std::is_sorted(next.workers.begin(), next.workers.end()));

  const auto last = env.transition(state_of({0.6}, 0.2), 0, 0.9);
  CHECK(last.workers.empty());
  CHECK_THROWS_AS(env.transition(s, 3, 0.1), InputError);
}

TEST_CASE("reward models share the conditional mean") {
  Rng rng(1);
  CHECK(assignment_reward(0.5, 0.4, RewardModel::Deterministic, rng) == doctest::Approx(0.2));
  for (int i = 0; i < 20; ++i)
    CHECK(assignment_reward(0.3, 1.0, RewardModel::Bernoulli, rng) == doctest::Approx(0.3));
  const double c = 0.7, b = 0.35;
  const int m = 100000;
  double sum = 0.0;
  for (int i = 0; i < m; ++i) sum += assignment_reward(c, b, RewardModel::Bernoulli, rng);
  const double se = std::sqrt(c * c * b * (1 - b) / m);
  CHECK(std::abs(sum / m - c * b) <= 3 * se);
}

TEST_CASE("feature map follows the removal layout") {
  AssignmentEnv env(3, RewardModel::Deterministic);
  Eigen::VectorXd f3(3);
  env.features(state_of({0.2, 0.5, 0.9}, 0.4), 0, 1, f3);
  CHECK(f3[0] == doctest::Approx(0.2));
  CHECK(f3[1] == doctest::Approx(0.9));
  CHECK(f3[2] == doctest::Approx(0.4 * 0.5));
  CHECK(f3[0] <= f3[1]);

  Eigen::VectorXd f1(1);
  env.features(state_of({0.6}, 0.5), 2, 0, f1);
  CHECK(f1[0] == doctest::Approx(0.3));
}

TEST_CASE("analytic thresholds for uniform jobs") {
  const auto t1 = analytic_thresholds(1);
  CHECK(t1[0] == std::vector<double>{0.5});

  const auto t2 = analytic_thresholds(2);
  CHECK(t2[0][0] == doctest::Approx(0.375));
  CHECK(t2[0][1] == doctest::Approx(0.625));
  CHECK(t2[1][0] == doctest::Approx(0.5));

  const auto t8 = analytic_thresholds(8);
  for (const auto& row : t8) {
    for (double w : row) {
      CHECK(w > 0.0);
      CHECK(w < 1.0);
    }
    CHECK(std::is_sorted(row.begin(), row.end()));
  }
}

TEST_CASE("rank matching action") {
  const auto t = analytic_thresholds(2);
  CHECK(analytic_action(state_of({0.3, 0.8}, 0.7), t) == 1);
  CHECK(analytic_action(state_of({0.3, 0.8}, 0.2), t) == 0);
  CHECK(analytic_action(state_of({0.6}, 0.9), t) == 0);

  const auto t3 = analytic_thresholds(3);
  CHECK(analytic_action(state_of({0.1, 0.5, 0.9}, 0.05), t3) == 0);
  CHECK(analytic_action(state_of({0.1, 0.5, 0.9}, 0.99), t3) == 2);
}

TEST_CASE("weight distance") {
  const WeightTable a{{0.3, 0.6}, {0.5}};
  CHECK(weight_distance(a, a) == doctest::Approx(0.0));
  CHECK(weight_distance({{1.0}}, {{0.0}}) == doctest::Approx(1.0));
  const WeightTable b{{1.3, 1.6}, {1.5}};
  CHECK(weight_distance(a, b) == doctest::Approx(1.0));
  CHECK_THROWS_AS(weight_distance(a, {{0.1}, {0.2}}), InputError);
}

TEST_CASE("analytic mean matches the simulated rank-matching policy") {
  CHECK(analytic_mean(8) == doctest::Approx(2.4436796946805446).epsilon(1e-12));
  CHECK(analytic_mean(1) == doctest::Approx(0.25));  // E[C] * E[B]

  AssignmentEnv env(8, RewardModel::Deterministic);
  AnalyticPolicy policy(8);
  const auto returns = rollout_returns(env, policy, 20000, 77);
  const auto s = summarize(returns);
  CHECK(std::abs(s.mean - analytic_mean(8)) <= 3 * s.stderr_);
}

TEST_CASE("bernoulli and deterministic rewards give equal policy means") {
  AnalyticPolicy policy(8);
  AssignmentEnv det(8, RewardModel::Deterministic);
  AssignmentEnv bern(8, RewardModel::Bernoulli);
  const auto a = summarize(rollout_returns(det, policy, 100000, 5));
  const auto b = summarize(rollout_returns(bern, policy, 100000, 6));
  const double se = std::hypot(a.stderr_, b.stderr_);
  CHECK(std::abs(a.mean - b.mean) <= 3 * se);
}

// Discrete counterpart of the optimality of rank matching: with jobs on a
// five-point grid and fixed workers, the policy driven by the continuous
// thresholds attains the exact-DP optimum.
TEST_CASE("rank matching is optimal on the discretized problem") {
  const int H = 3;
  const std::vector<double> workers{0.2, 0.5, 0.8};
  const std::vector<double> jobs{0.1, 0.3, 0.5, 0.7, 0.9};

  // Combos of remaining workers, encoded as bitmasks of the base set.
  std::vector<int> combos;
  for (int mask = 1; mask < 8; ++mask) combos.push_back(mask);
  std::map<int, int> combo_id;
  for (std::size_t i = 0; i < combos.size(); ++i) combo_id[combos[i]] = static_cast<int>(i);

  const int X = static_cast<int>(combos.size() * jobs.size());
  const auto encode = [&](int mask, int job) { return combo_id.at(mask) * 5 + job; };
  const auto mask_bits = [&](int mask) {
    std::vector<int> bits;
    for (int i = 0; i < 3; ++i)
      if (mask & (1 << i)) bits.push_back(i);
    return bits;
  };

  TabularMDP mdp;
  mdp.num_states = X;
  mdp.num_actions = 3;
  mdp.horizon = H;
  mdp.terminal_cost = Eigen::VectorXd::Zero(X);
  mdp.atoms.resize(static_cast<std::size_t>((H - 1) * X * 3));
  for (int mask = 1; mask < 8; ++mask) {
    const auto bits = mask_bits(mask);
    for (int j = 0; j < 5; ++j) {
      const int x = encode(mask, j);
      if (bits.size() == 1) mdp.terminal_cost[x] = jobs[static_cast<std::size_t>(j)] *
                                                   workers[static_cast<std::size_t>(bits[0])];
      for (int h = 0; h + 1 < H; ++h)
        for (int a = 0; a < 3; ++a) {
          auto& row = mdp.at(h, x, a);
          if (static_cast<int>(bits.size()) != H - h) {
            row.push_back({1.0, 0.0, x});  // stage-inconsistent states are inert
            continue;
          }
          const int rank = std::min<int>(a, static_cast<int>(bits.size()) - 1);
          const double reward =
              jobs[static_cast<std::size_t>(j)] * workers[static_cast<std::size_t>(bits[rank])];
          const int next_mask = mask & ~(1 << bits[rank]);
          for (int jn = 0; jn < 5; ++jn)
            row.push_back({0.2, reward, encode(next_mask, jn)});
        }
    }
  }
  mdp.validate();

  const auto cfg = RiskConfig::mean(1, Orientation::Maximize);
  const auto optimal = solve(mdp, cfg);

  const auto thresholds = analytic_thresholds(H);
  std::vector<std::vector<int>> policy(static_cast<std::size_t>(H),
                                       std::vector<int>(static_cast<std::size_t>(X), 0));
  for (int mask = 1; mask < 8; ++mask) {
    const auto bits = mask_bits(mask);
    for (int j = 0; j < 5; ++j) {
      AssignState s;
      for (int b : bits) s.workers.push_back(workers[static_cast<std::size_t>(b)]);
      s.job = jobs[static_cast<std::size_t>(j)];
      const int a = analytic_action(s, thresholds);
      for (int h = 0; h + 1 < H; ++h)
        if (static_cast<int>(bits.size()) == H - h)
          policy[static_cast<std::size_t>(h)][static_cast<std::size_t>(encode(mask, j))] = a;
    }
  }
  const auto achieved = policy_value(mdp, policy, cfg);
  for (int j = 0; j < 5; ++j) {
    const int x0 = encode(7, j);
    CHECK(std::abs(achieved.V[0][x0] - optimal.V[0][x0]) <= 1e-9);
  }
}

TEST_CASE("learned-weight helpers strip the job-product coefficient") {
  StageWeights w;
  w.orientation = Orientation::Maximize;
  w.episodes = 1;
  for (int h = 0; h < 3; ++h) {
    StageWeights::Stage s;
    s.weights = Eigen::MatrixXd::Zero(3 - h, 1);
    for (int i = 0; i < 3 - h; ++i) s.weights(i, 0) = h + 0.1 * i;
    s.gram = Eigen::MatrixXd::Identity(3 - h, 3 - h);
    s.eta_grid = Eigen::MatrixXd::Zero(0, 1);
    s.ridge = 0.1;
    w.stages.push_back(std::move(s));
  }
  const auto coeffs = worker_coefficients(w);
  REQUIRE(coeffs.size() == 2);
  CHECK(coeffs[0] == std::vector<double>{0.0, 0.1});
  CHECK(coeffs[1] == std::vector<double>{1.0});

  const auto ref = oracle_reference(analytic_thresholds(3));
  REQUIRE(ref.size() == 2);
  CHECK(ref[0].size() == 2);
  CHECK(ref[1].size() == 1);
  CHECK(weight_distance(coeffs, ref) > 0.0);
}
