#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "sklab/overdamped.hpp"
#include "sklab/rate.hpp"
#include "support.hpp"

using namespace sklab;
using testing::model_from;
using testing::scalar_yaml;

namespace {

Path linear_path(double from, double to, int n) {
  Path p(make_grid(0.0, 1.0, n), 1);
  for (int k = 0; k <= n; ++k) p(k, 0) = from + (to - from) * k / n;
  return p;
}

RateModel two_state() { return RateModel(testing::preset("two-state-averaging")); }

const std::vector<double> kOrigin{0.0};

}  // namespace

TEST_CASE("h_functional examples") {
  Eigen::MatrixXd Q(2, 2);
  Q << -1, 1, 2, -2;
  std::vector<double> g{0.0, 0.0};
  CHECK(std::abs(h_functional(Q, g)) <= 1e-10);
  g = {0.7, 0.7};
  CHECK(h_functional(Q, g) == doctest::Approx(0.7).epsilon(1e-10));
  g = {1.0, 0.0};
  CHECK(h_functional(Q, g) == doctest::Approx(std::sqrt(3.0) - 1.0).epsilon(1e-12));

  Eigen::MatrixXd Q3(3, 3);
  Q3 << -2, 1, 1, 0.5, -1, 0.5, 3, 0, -3;
  g = {0.3, -1.0, 2.0};
  Eigen::MatrixXd M = Q3;
  for (int i = 0; i < 3; ++i) M(i, i) += g[i];
  CHECK(h_functional(Q3, g) == doctest::Approx(Eigen::EigenSolver<Eigen::MatrixXd>(M).eigenvalues().real().maxCoeff()).epsilon(1e-10));
}

TEST_CASE("h_functional by power iteration above 64 states") {
  const int n = 80;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int i = 0; i < n; ++i) {
    const int a = (i + 1) % n, b = (i + n - 1) % n;
    Q(i, a) = u(gen);
    Q(i, b) = u(gen);
    Q(i, i) = -(Q(i, a) + Q(i, b));
  }
  std::vector<double> g(n, 1.25);
  CHECK(h_functional(Q, g) == doctest::Approx(1.25).epsilon(1e-9));
  std::uniform_real_distribution<double> ug(-1.0, 1.0);
  Eigen::MatrixXd M = Q;
  for (int i = 0; i < n; ++i) {
    g[i] = ug(gen);
    M(i, i) += g[i];
  }
  const double ref = Eigen::EigenSolver<Eigen::MatrixXd>(M).eigenvalues().real().maxCoeff();
  CHECK(h_functional(Q, g) == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("h_at examples") {
  const RateModel one(model_from(scalar_yaml(0.0, 2.0, 1.0)));
  const std::vector<double> zero{0.0}, unit{1.0};
  CHECK(h_at(one, 0.0, kOrigin, zero) == 0.0);
  CHECK(h_at(one, 0.0, kOrigin, unit) == doctest::Approx(0.125).epsilon(1e-14));
  const auto two = two_state();
  const double h = 1e-4;
  const std::vector<double> up{h}, down{-h};
  CHECK(std::abs((h_at(two, 0.0, kOrigin, up) - h_at(two, 0.0, kOrigin, down)) / (2 * h) - 1.0) <= 1e-4);
}

TEST_CASE("lagrangian examples") {
  const auto two = two_state();
  const std::vector<double> one{1.0}, zero{0.0};
  CHECK(std::abs(lagrangian(two, 0.0, kOrigin, one)) <= 1e-6);
  CHECK(lagrangian(RateModel(model_from(scalar_yaml(0.0, 2.0, 1.0))), 0.0, kOrigin, one) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(std::abs(lagrangian(RateModel(model_from(scalar_yaml(0.0, 1.0, 1.0))), 0.0, kOrigin, zero)) <= 1e-12);
}

TEST_CASE("lagrangian reports a box that is too small") {
  const RateModel r(model_from(scalar_yaml(0.0, 1.0, 1.0)), 0.5);
  const std::vector<double> gamma{3.0};
  CHECK_THROWS_AS(lagrangian(r, 0.0, kOrigin, gamma), Error);
  try {
    lagrangian(r, 0.0, kOrigin, gamma);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundaryHit);
  }
  // action doubles the box once, then gives up
  CHECK(action(r, linear_path(0.0, 0.8, 4)) == doctest::Approx(0.32).epsilon(1e-6));
  CHECK(std::isinf(action(r, linear_path(0.0, 3.0, 4))));
}

TEST_CASE("action examples") {
  const auto two = two_state();
  const auto phi = solve_averaged_ode(two.model(), make_grid(0.0, 1.0, 20));
  CHECK(std::abs(action(two, phi)) <= 1e-4);
  const RateModel one(model_from(scalar_yaml(0.0, 1.0, 1.0)));
  CHECK(action(one, linear_path(0.0, 1.0, 10)) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(action(one, linear_path(0.0, 2.0, 10)) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("gaussian_action examples and agreement") {
  CHECK(gaussian_action(2.0, 1.0, 1.0, linear_path(0.0, 0.5, 8)) == doctest::Approx(0.0));
  CHECK(gaussian_action(1.0, 1.0, 0.0, linear_path(0.0, 1.0, 8)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(gaussian_action(1.0, 1.0, 0.0, Path(make_grid(0.0, 1.0, 4), 2)), Error);

  const RateModel r(model_from(scalar_yaml(0.5, 1.5, 0.8)));
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Path p(make_grid(0.0, 1.0, 8), 1);
    for (int k = 1; k <= 8; ++k) p(k, 0) = p(k - 1, 0) + u(gen) / 8;
    REQUIRE(std::abs(gaussian_action(1.5, 0.8, 0.5, p) - action(r, p)) <= 1e-6);
  }
}

TEST_CASE("least action paths") {
  const RateModel one(model_from(scalar_yaml(0.0, 1.0, 1.0)));
  const std::vector<double> a{0.0}, b{1.0};
  const auto straight = minimize_action(one, a, b, 16);
  CHECK(straight.value == doctest::Approx(0.5).epsilon(2e-4));
  CHECK(sup_distance(straight.path, linear_path(0.0, 1.0, 16)) <= 1e-3);

  const auto still = minimize_action(one, a, a, 8);
  CHECK(std::abs(still.value) <= 1e-12);
  CHECK(sup_distance(still.path, linear_path(0.0, 0.0, 8)) <= 1e-9);

  const auto two = two_state();
  const auto phi = solve_averaged_ode(two.model(), make_grid(0.0, 1.0, 8));
  const std::vector<double> s{phi(0, 0)}, e{phi(8, 0)};
  CHECK(minimize_action(two, s, e, 8).value <= 1e-3);

  CHECK_THROWS_AS(minimize_action(one, a, b, 1), Error);
}

TEST_CASE("minimize_action never ascends") {
  const auto two = two_state();
  const std::vector<double> a{0.0}, b{-1.0};
  const auto res = minimize_action(two, a, b, 6);
  CHECK(res.value <= action(two, linear_path(0.0, -1.0, 6)) + 1e-9);
}

TEST_CASE("jump cost examples") {
  const auto m = testing::preset("jump-equiv");
  const auto phi = linear_path(0.0, 0.0, 4);
  auto c = neutral_controls(2, 1, 4, 3);
  auto cost = jump_cost_evaluate(c, m, phi);
  CHECK(cost.value == 0.0);

  c.pi.col(0).setOnes();
  c.pi.col(1).setZero();
  c.v[0][1].setConstant(2.0);
  cost = jump_cost_evaluate(c, m, phi);
  CHECK(cost.v_term == doctest::Approx(3.0 * (2.0 * std::log(2.0) - 1.0)).epsilon(1e-12));
  CHECK(cost.u_term == 0.0);

  c = neutral_controls(2, 1, 4, 3);
  c.u[0].setConstant(1.0);
  cost = jump_cost_evaluate(c, m, phi);
  CHECK(cost.u_term == doctest::Approx(0.25).epsilon(1e-12));

  c.v[1][0](2, 1) = -0.1;
  CHECK_THROWS_AS(jump_cost_evaluate(c, m, phi), Error);

  CHECK(ell(1.0) == 0.0);
  CHECK(ell(0.0) == 1.0);
  CHECK(ell(2.0) == doctest::Approx(0.38629436111989).epsilon(1e-12));
}

TEST_CASE("jump cost residuals vanish at the stationary configuration") {
  // pi = (2/3, 1/3), v = 1: the flows c_0 r_01 pi_0 and c_1 r_10 pi_1 balance,
  // and phi' = b_bar reproduces the drift with u = 0.
  const auto m = testing::preset("jump-equiv");
  auto c = neutral_controls(2, 1, 5, 4);
  c.pi.col(0).setConstant(2.0 / 3.0);
  c.pi.col(1).setConstant(1.0 / 3.0);
  const auto cost = jump_cost_evaluate(c, m, linear_path(0.0, 1.0, 5));
  CHECK(cost.value == 0.0);
  CHECK(cost.stationarity_residual <= 1e-12);
  CHECK(cost.drift_residual <= 1e-12);
  // uniform pi breaks both
  const auto off = jump_cost_evaluate(neutral_controls(2, 1, 5, 4), m, linear_path(0.0, 1.0, 5));
  CHECK(off.stationarity_residual == doctest::Approx(0.5));
  CHECK(off.drift_residual == doctest::Approx(1.0));
}

TEST_CASE("H vanishes at beta = 0 on the probe lattice") {
  const auto two = two_state();
  const std::vector<double> zero{0.0};
  for (double t : {0.0, 0.5, 1.0})
    for (double x : {-2.0, 0.0, 2.0}) {
      const std::vector<double> xv{x};
      CHECK(std::abs(h_at(two, t, xv, zero)) <= 1e-10);
    }
}

TEST_CASE("H is convex, L is its conjugate and nonnegative") {
  const auto two = two_state();
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> ub(-4.0, 4.0), ug(-2.5, 4.5);
  for (int k = 0; k < 100; ++k) {
    const std::vector<double> b1{ub(gen)}, b2{ub(gen)}, mid{0.5 * (b1[0] + b2[0])};
    REQUIRE(h_at(two, 0.0, kOrigin, mid) <= 0.5 * (h_at(two, 0.0, kOrigin, b1) + h_at(two, 0.0, kOrigin, b2)) + 1e-9);
  }
  for (int k = 0; k < 30; ++k) {
    const std::vector<double> gamma{ug(gen)};
    const double L = lagrangian(two, 0.0, kOrigin, gamma);
    REQUIRE(L >= -1e-10);
    for (int j = 0; j < 10; ++j) {
      const std::vector<double> beta{ub(gen)};
      REQUIRE(L >= gamma[0] * beta[0] - h_at(two, 0.0, kOrigin, beta) - 1e-8);
    }
  }
}

TEST_CASE("eigenvalue matches the exponential-moment limit") {
  Eigen::MatrixXd Q(3, 3);
  Q << -1, 0.5, 0.5, 2, -3, 1, 1, 1, -2;
  const std::vector<double> g{0.4, -0.6, 1.1};
  const double H = h_functional(Q, g);
  for (double v : h_functional_oracle(Q, g, 0.01, 1.0)) CHECK(std::abs(v - H) <= 0.05);
  const auto two = two_state();
  Eigen::MatrixXd Q2 = two.generator();
  const std::vector<double> g2{3.0, -3.0};
  for (double v : h_functional_oracle(Q2, g2, 0.01, 1.0)) CHECK(std::abs(v - h_functional(Q2, g2)) <= 0.05);
}

TEST_CASE("rate model rejects unsupported environments") {
  CHECK_THROWS_AS(RateModel(testing::preset("fast-ou")), Error);
  CHECK_THROWS_AS(RateModel(testing::preset("jump-equiv")), Error);
  CHECK_THROWS_AS(RateModel(testing::preset("two-state-averaging"), 0.0), Error);
}
