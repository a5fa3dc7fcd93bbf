#include "riskq/risk.hpp"

#include <cmath>

#include "doctest.h"
#include "riskq/rng.hpp"

using namespace riskq;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

FiniteDistribution dist(std::initializer_list<double> p, std::initializer_list<double> v) {
  return FiniteDistribution::make(vec(p), vec(v));
}

FiniteDistribution random_dist(Rng& rng, int max_support = 6) {
  const int n = 2 + rng.uniform_int(max_support - 1);
  Eigen::VectorXd p(n), v(n);
  for (int i = 0; i < n; ++i) {
    p[i] = 0.05 + rng.uniform01();
    v[i] = rng.uniform01();
  }
  p /= p.sum();
  return FiniteDistribution::make(p, v);
}

// Independent variational-formula oracle: dense eta scan over [min, max].
double avar_grid_oracle(const FiniteDistribution& d, double alpha, int points = 200001) {
  const double lo = d.value.minCoeff();
  const double hi = d.value.maxCoeff();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < points; ++i) {
    const double eta = lo + (hi - lo) * i / (points - 1);
    const double tail = (d.prob.array() * (d.value.array() - eta).max(0.0)).sum();
    best = std::min(best, eta + tail / alpha);
  }
  return best;
}

}  // namespace

TEST_CASE("aggregate matches hand-evaluated examples") {
  CHECK(aggregate(vec({1, 3}), RiskConfig::mean(2)) == doctest::Approx(2.0));
  CHECK(aggregate(vec({1, 3}), RiskConfig::worst_mix(0.5, 2, Orientation::Maximize)) ==
        doctest::Approx(1.5));
  CHECK(aggregate(vec({1, 3}), RiskConfig::worst_mix(0.5, 2, Orientation::Minimize)) ==
        doctest::Approx(2.5));
  CHECK(aggregate(vec({0, 2}), RiskConfig::semi_dev(1.0, 2, Orientation::Minimize)) ==
        doctest::Approx(1.5));

  // kappa = 0 degenerates to the mean for every batch kind.
  const auto v = vec({0.3, 0.9, 0.1});
  CHECK(aggregate(v, RiskConfig::worst_mix(0.0, 3)) == doctest::Approx(v.mean()));
  CHECK(aggregate(v, RiskConfig::semi_dev(0.0, 3, Orientation::Maximize)) ==
        doctest::Approx(v.mean()));
}

TEST_CASE("aggregate input validation") {
  CHECK_THROWS_AS(aggregate(vec({1, 2, 3}), RiskConfig::mean(2)), InputError);
  CHECK_THROWS_AS(aggregate(Eigen::VectorXd(), RiskConfig::mean(1)), InputError);
  CHECK_THROWS_AS(aggregate(vec({1.0}), RiskConfig::mean_avar(0.5, 0.5)), InputError);
}

TEST_CASE("aggregate_augmented examples") {
  const auto eta = vec({0.5});
  CHECK(aggregate_augmented(1.0, vec({0.7}), RiskConfig::mean_avar(0.0, 0.5)) ==
        doctest::Approx(1.0));
  CHECK(aggregate_augmented(1.0, eta, RiskConfig::mean_avar(1.0, 0.5)) == doctest::Approx(1.5));
  // value below eta: the positive part vanishes and the estimate is eta.
  CHECK(aggregate_augmented(0.2, eta, RiskConfig::mean_avar(1.0, 0.25)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(aggregate_augmented(1.0, vec({0.1, 0.2}), RiskConfig::mean_avar(1.0, 0.5)),
                  InputError);
}

TEST_CASE("aggregate_augmented maximize mirror") {
  Rng rng(11);
  auto cfg = RiskConfig::spectral({{0.3, 0.4}, {0.2, 0.7}});
  auto cfg_max = cfg.with_orientation(Orientation::Maximize);
  for (int i = 0; i < 200; ++i) {
    const double v = rng.uniform(-2, 2);
    const auto etas = vec({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    const double lhs = aggregate_augmented(v, etas, cfg_max);
    const double rhs = -aggregate_augmented(-v, -etas, cfg);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("avar_discrete closed form") {
  const auto d2 = dist({0.5, 0.5}, {0.0, 1.0});
  CHECK(avar_discrete(d2, 1.0) == doctest::Approx(d2.mean()));
  CHECK(avar_discrete(d2, 0.5) == doctest::Approx(1.0));
  const auto d3 = dist({1.0 / 3, 1.0 / 3, 1.0 / 3}, {0.0, 1.0, 2.0});
  CHECK(avar_discrete(d3, 1.0 / 3) == doctest::Approx(2.0));
  CHECK_THROWS_AS(avar_discrete(d2, 0.0), InputError);
  CHECK_THROWS_AS(avar_discrete(d2, 1.5), InputError);
}

TEST_CASE("avar_discrete equals the variational grid oracle") {
  Rng rng(42);
  for (int i = 0; i < 25; ++i) {
    const auto d = random_dist(rng);
    for (double alpha : {0.1, 0.25, 0.5, 1.0}) {
      const double closed = avar_discrete(d, alpha);
      const double grid = avar_grid_oracle(d, alpha);
      // The objective is at most 1/alpha-Lipschitz in eta.
      CHECK(std::abs(closed - grid) <= 1e-5 / alpha + 1e-12);
      CHECK(grid >= closed - 1e-12);
    }
  }
}

TEST_CASE("minibatch_risk_exact examples") {
  const auto d = dist({0.5, 0.5}, {0.0, 1.0});
  // Singleton batches aggregate to the value itself.
  CHECK(minibatch_risk_exact(d, RiskConfig::worst_mix(0.7, 1)) == doctest::Approx(d.mean()));
  // Mean base mapping collapses to the expectation for any batch size.
  for (int n : {1, 2, 3, 4})
    CHECK(minibatch_risk_exact(d, RiskConfig::mean(n)) == doctest::Approx(d.mean()));
  // E max of two fair draws over {0,1}.
  CHECK(minibatch_risk_exact(d, RiskConfig::worst_mix(1.0, 2)) == doctest::Approx(0.75));
}

TEST_CASE("minibatch_risk_exact guard and input checks") {
  Eigen::VectorXd p = Eigen::VectorXd::Constant(10, 0.1);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(10, 0, 1);
  const auto d = FiniteDistribution::make(p, v);
  CHECK_THROWS_AS(minibatch_risk_exact(d, RiskConfig::worst_mix(1.0, 8)), CapacityError);
  CHECK_THROWS_AS(minibatch_risk_exact(d, RiskConfig::mean_avar(0.5, 0.5)), InputError);
}

TEST_CASE("FiniteDistribution validation") {
  CHECK_THROWS_AS(dist({0.5, 0.6}, {0, 1}), InputError);
  CHECK_THROWS_AS(dist({-0.1, 1.1}, {0, 1}), InputError);
  const auto d = FiniteDistribution::make(vec({0.5 + 4e-13, 0.5}), vec({0, 1}));
  CHECK(d.prob.sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("coherence axioms hold on random batches") {
  Rng rng(7);
  std::vector<RiskConfig> cfgs;
  for (auto o : {Orientation::Minimize, Orientation::Maximize}) {
    cfgs.push_back(RiskConfig::mean(3, o));
    cfgs.push_back(RiskConfig::worst_mix(0.35, 3, o));
    cfgs.push_back(RiskConfig::semi_dev(0.8, 3, o));
  }
  for (const auto& cfg : cfgs) {
    CHECK(aggregate(Eigen::VectorXd::Zero(3), cfg) == doctest::Approx(0.0));
    for (int i = 0; i < 500; ++i) {
      Eigen::VectorXd v(3), w(3);
      for (int j = 0; j < 3; ++j) {
        v[j] = rng.uniform(-5, 5);
        w[j] = v[j] + rng.uniform01();  // componentwise dominating
      }
      const double av = aggregate(v, cfg);
      CHECK(aggregate(w, cfg) >= av - 1e-12);

      const double c = rng.uniform(-3, 3);
      CHECK(aggregate(v.array() + c, cfg) == doctest::Approx(av + c).epsilon(1e-12));

      const double t = rng.uniform01() * 4;
      CHECK(aggregate((t * v).eval(), cfg) == doctest::Approx(t * av).epsilon(1e-12));

      const double lam = rng.uniform01();
      const double mix = aggregate((lam * v + (1 - lam) * w).eval(), cfg);
      const double bound = lam * av + (1 - lam) * aggregate(w, cfg);
      if (cfg.orientation == Orientation::Minimize)
        CHECK(mix <= bound + 1e-9);
      else
        CHECK(mix >= bound - 1e-9);

      // Orientation mirror.
      const auto mirrored = cfg.with_orientation(
          cfg.orientation == Orientation::Minimize ? Orientation::Maximize
                                                   : Orientation::Minimize);
      CHECK(aggregate(v, cfg) == doctest::Approx(-aggregate((-v).eval(), mirrored)).epsilon(1e-12));
    }
  }
}

TEST_CASE("mini-batch risk dominates the expectation under WorstMix") {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    const auto d = random_dist(rng);
    const auto cfg = RiskConfig::worst_mix(0.6, 2);
    CHECK(minibatch_risk_exact(d, cfg) >= d.mean() - 1e-12);
  }
  const auto flat = dist({0.3, 0.7}, {0.4, 0.4});
  CHECK(minibatch_risk_exact(flat, RiskConfig::worst_mix(1.0, 3)) == doctest::Approx(0.4));
}

TEST_CASE("sampled batches estimate the exact mini-batch risk without bias") {
  Rng rng(123);
  const auto d = random_dist(rng);
  const auto cfg = RiskConfig::worst_mix(0.5, 2);
  const double exact = minibatch_risk_exact(d, cfg);
  const int m = 20000;
  double sum = 0.0, sum_sq = 0.0;
  Eigen::VectorXd batch(2);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < 2; ++j) {
      double u = rng.uniform01();
      Eigen::Index k = 0;
      while (k + 1 < d.size() && u >= d.prob[k]) u -= d.prob[k++];
      batch[j] = d.value[k];
    }
    const double psi = aggregate(batch, cfg);
    sum += psi;
    sum_sq += psi * psi;
  }
  const double mean = sum / m;
  const double se = std::sqrt((sum_sq / m - mean * mean) / m);
  CHECK(std::abs(mean - exact) <= 3 * se + 1e-9);
}

TEST_CASE("spectral closed form matches a direct mixture of AVaRs") {
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const auto d = random_dist(rng);
    const auto cfg = RiskConfig::spectral({{0.25, 0.3}, {0.15, 0.6}});
    const double direct = 0.6 * d.mean() + 0.25 * avar_discrete(d, 0.3) +
                          0.15 * avar_discrete(d, 0.6);
    CHECK(spectral_risk_exact(d, cfg) == doctest::Approx(direct).epsilon(1e-12));
    CHECK(transition_risk_exact(d, cfg) == doctest::Approx(direct).epsilon(1e-12));
  }
}
