#include "riskq/gram.hpp"

#include <cmath>

#include "doctest.h"
#include "riskq/rng.hpp"

using namespace riskq;

namespace {

Eigen::VectorXd random_vec(Rng& rng, int d, double scale = 1.0) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

}  // namespace

TEST_CASE("gram initialisation") {
  GramState<double> g(2, 1.0);
  CHECK(g.matrix().isApprox(Eigen::Matrix2d::Identity()));
  GramState<double> g1(1, 0.1);
  CHECK(g1.inverse()(0, 0) == doctest::Approx(10.0));
  GramState<double> g3(3, 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g3.matrix());
  CHECK(es.eigenvalues().minCoeff() == doctest::Approx(2.0));
  CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(2.0));
  CHECK_THROWS_AS(GramState<double>(2, 0.0), InputError);
  CHECK_THROWS_AS(GramState<double>(0, 1.0), InputError);
}

TEST_CASE("rank-1 updates") {
  GramState<double> g(2, 1.0);
  g.update(Eigen::Vector2d(1, 0));
  CHECK(g.matrix().isApprox(Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix()));
  CHECK(g.count() == 1);

  g.update(Eigen::Vector2d::Zero());
  CHECK(g.count() == 2);
  CHECK(g.matrix().isApprox(Eigen::Vector2d(2, 1).asDiagonal().toDenseMatrix()));
}

TEST_CASE("maintained inverse tracks the direct inverse") {
  Rng rng(3);
  GramState<double> g(8, 0.5);
  for (int i = 0; i < 1000; ++i) g.update(random_vec(rng, 8, 3.0));
  const Eigen::MatrixXd direct = g.matrix().inverse();
  CHECK((g.inverse() - direct).norm() <= 1e-8);
  CHECK((g.matrix() * g.inverse() - Eigen::MatrixXd::Identity(8, 8)).norm() <= 1e-8);
}

TEST_CASE("ridge_solve") {
  StageRegression reg(3, 1.0);
  CHECK(ridge_solve(reg).isZero());

  StageRegression scalar(1, 1.0);
  scalar.add(Eigen::VectorXd::Constant(1, 1.0), 2.0);
  CHECK(ridge_solve(scalar)(0) == doctest::Approx(1.0));

  // Agreement with a dense normal-equations solve.
  Rng rng(17);
  StageRegression r(5, 0.3);
  Eigen::MatrixXd gram = 0.3 * Eigen::MatrixXd::Identity(5, 5);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(5);
  for (int i = 0; i < 200; ++i) {
    const auto phi = random_vec(rng, 5);
    const double y = rng.uniform(-2, 2);
    r.add(phi, y);
    gram += phi * phi.transpose();
    b += phi * y;
  }
  const Eigen::VectorXd direct = gram.ldlt().solve(b);
  CHECK((ridge_solve(r) - direct).norm() <= 1e-10);
}

TEST_CASE("bonus values and monotonicity") {
  GramState<double> fresh(3, 1.0);
  const Eigen::Vector3d phi(0.3, -0.2, 0.9);
  CHECK(fresh.bonus(phi) == doctest::Approx(phi.norm()));

  GramState<double> g(1, 1.0);
  g.update(Eigen::VectorXd::Constant(1, 1.0));
  CHECK(g.bonus(Eigen::VectorXd::Constant(1, 1.0)) == doctest::Approx(1.0 / std::sqrt(2.0)));

  // Never exceeds |phi|/sqrt(lambda); never increases along an update path.
  Rng rng(8);
  GramState<double> h(4, 0.25);
  const auto probe = random_vec(rng, 4);
  double prev = h.bonus(probe);
  CHECK(prev <= probe.norm() / std::sqrt(0.25) + 1e-12);
  for (int i = 0; i < 300; ++i) {
    h.update(random_vec(rng, 4, 2.0));
    const double cur = h.bonus(probe);
    CHECK(cur <= prev + 1e-12);
    CHECK(cur <= probe.norm() / std::sqrt(0.25) + 1e-12);
    prev = cur;
  }
}

TEST_CASE("elliptic potential bound for unit-norm features") {
  Rng rng(21);
  for (double lambda : {0.5, 1.0, 2.0}) {
    GramState<double> g(6, lambda);
    const int K = 3000;
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXd phi = random_vec(rng, 6);
      phi.normalize();
      const double b = g.bonus(phi);
      sum += b * b;
      g.update(phi);
    }
    CHECK(sum <= 2.0 * 6 * std::log(1.0 + K / lambda));
  }
}

TEST_CASE("long update sequences stay consistent through refactoring") {
  Rng rng(55);
  GramState<double> g(16, 1e-3);
  for (int i = 0; i < 25000; ++i) g.update(random_vec(rng, 16, 2.0));
  CHECK((g.matrix() * g.inverse() - Eigen::MatrixXd::Identity(16, 16)).norm() <= 1e-8);
}
