#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "sklab/diagnostics.hpp"
#include "sklab/lab.hpp"
#include "sklab/overdamped.hpp"
#include "support.hpp"

using namespace sklab;
using testing::model_from;
using testing::scalar_yaml;

namespace {

Experiment experiment(std::int64_t n, std::int64_t steps, std::uint64_t seed, int threads = 1) {
  Experiment ex;
  ex.grid = make_grid(0.0, 1.0, steps);
  ex.n_replicas = n;
  ex.master_seed = seed;
  ex.threads = threads;
  return ex;
}

}  // namespace

TEST_CASE("Schilder exit probability matches the reflection principle") {
  const auto m = testing::preset("constant-schilder");
  const auto est = estimate_event_probability(m, 0.25, sup_projection_exceeds({1.0}, std::vector<double>{0.0}, 1.0, EventTarget::Overdamped),
                                              experiment(20000, 2000, 1));
  const double exact = 2.0 * normal_sf(2.0);
  CHECK(std::abs(est.p_hat - exact) <= 3.0 * est.half_width());
  CHECK(est.n_replicas == 20000);
  CHECK(est.replica_end == 20000);
}

TEST_CASE("deterministic model never leaves the tube") {
  const auto m = model_from(scalar_yaml(0.5, 1.0, 0.0));
  const auto phi = solve_averaged_ode(m, make_grid(0.0, 1.0, 200));
  const auto est = estimate_event_probability(m, 0.1, sup_norm_exceeds(sup_norm(phi) + 1.0, EventTarget::SecondOrder), experiment(200, 200, 2));
  CHECK(est.n_hits == 0);
  CHECK(est.censored());
}

TEST_CASE("endpoint sign of a driftless path is a fair coin") {
  const auto m = testing::preset("constant-schilder");
  const auto est = estimate_event_probability(m, 0.3, endpoint_in_halfspace({1.0}, 0.0, EventTarget::Overdamped), experiment(4000, 50, 3));
  CHECK(est.ci_low <= 0.5);
  CHECK(est.ci_high >= 0.5);
}

TEST_CASE("ladder rows and censoring") {
  const auto m = testing::preset("constant-schilder");
  const auto ladder = rate_ladder(m, sup_norm_exceeds(1.0, EventTarget::Overdamped), std::vector<double>{0.25, 0.1, 0.02}, experiment(2000, 500, 4));
  REQUIRE(ladder.rows.size() == 3);
  for (const auto& row : ladder.rows) {
    CHECK(row.censored == (row.estimate.n_hits == 0));
    if (row.censored) {
      CHECK(std::isnan(row.eps_log_p));
    } else {
      CHECK(row.eps_log_p == doctest::Approx(row.eps * std::log(row.estimate.p_hat)));
      CHECK(row.eps_log_ci_low <= row.eps_log_p);
      CHECK(row.eps_log_ci_high >= row.eps_log_p);
    }
  }
  // p is about 1e-12 at eps = 0.02
  CHECK(ladder.rows[2].censored);
  CHECK_THROWS_AS(rate_ladder(m, sup_norm_exceeds(1.0, EventTarget::Overdamped), std::vector<double>{0.1, 0.25}, experiment(10, 10, 4)), Error);
  CHECK_THROWS_AS(rate_ladder(m, sup_norm_exceeds(1.0, EventTarget::Overdamped), std::vector<double>{0.1, 0.1}, experiment(10, 10, 4)), Error);
}

TEST_CASE("per-rung ladder uses each rung's grid and replica count") {
  const auto m = testing::preset("constant-schilder");
  const std::vector<LadderRung> rungs{{0.25, 300, 128}, {0.1, 500, 64}};
  const auto ladder = rate_ladder(m, sup_projection_exceeds({1.0}, std::vector<double>{0.0}, 0.5, EventTarget::SecondOrder), rungs, experiment(1, 1, 5));
  CHECK(ladder.rows[0].n_steps == 128);
  CHECK(ladder.rows[1].estimate.n_replicas == 500);
}

TEST_CASE("non-rare event has eps log p near zero") {
  const auto m = testing::preset("constant-schilder");
  const auto ladder = rate_ladder(m, sup_norm_exceeds(0.1, EventTarget::Overdamped), std::vector<double>{0.25}, experiment(1000, 500, 6));
  CHECK(ladder.rows[0].estimate.p_hat >= 0.95);
  CHECK(ladder.rows[0].eps_log_p >= -0.02);
}

TEST_CASE("studies are reproducible across thread counts") {
  const auto m = testing::preset("two-state-averaging");
  const auto ev = sup_norm_exceeds(0.8, EventTarget::SecondOrder);
  const auto a = estimate_event_probability(m, 0.2, ev, experiment(300, 200, 7, 1));
  const auto b = estimate_event_probability(m, 0.2, ev, experiment(300, 200, 7, 4));
  CHECK(a.n_hits == b.n_hits);
  const auto s1 = sk_convergence_study(m, {0.3, 0.15}, experiment(50, 200, 8, 1));
  const auto s2 = sk_convergence_study(m, {0.3, 0.15}, experiment(50, 200, 8, 3));
  for (std::size_t i = 0; i < s1.rows.size(); ++i) {
    CHECK(s1.rows[i].median == s2.rows[i].median);
    CHECK(s1.rows[i].upper_quartile == s2.rows[i].upper_quartile);
  }
  CHECK(*s1.slope == *s2.slope);
}

TEST_CASE("replica failures propagate") {
  std::vector<int> seen(10, 0);
  CHECK_THROWS_AS(run_replicas(10, 3, [&](std::int64_t k) {
                    if (k == 4) throw Error(ErrorCode::BlowUp, "boom");
                    seen[static_cast<std::size_t>(k)] = 1;
                  }),
                  Error);
}

TEST_CASE("deterministic SK study has slope 2") {
  const auto m = model_from(scalar_yaml(0.0, 1.0, 0.0, 1.0));
  const auto s = sk_convergence_study(m, {0.4, 0.2, 0.1}, experiment(3, 400, 9));
  for (const auto& row : s.rows) CHECK(row.median == doctest::Approx(row.eps * row.eps * -std::expm1(-1.0 / (row.eps * row.eps))).epsilon(1e-6));
  REQUIRE(s.slope.has_value());
  CHECK(*s.slope == doctest::Approx(2.0).epsilon(1e-3));
  CHECK_FALSE(sk_convergence_study(m, {0.2}, experiment(3, 100, 9)).slope.has_value());
}

TEST_CASE("H_eps study edge cases") {
  const auto quiet = model_from(scalar_yaml(0.0, 1.0, 0.0));
  const auto s = h_eps_scaling_study(quiet, {0.4, 0.2}, experiment(20, 200, 10));
  for (const auto& row : s.rows) CHECK(row.median == 0.0);
  CHECK_FALSE(s.slope.has_value());

  const auto one = h_eps_scaling_study(testing::preset("constant-schilder"), {0.2}, experiment(400, 500, 11));
  const auto two = h_eps_scaling_study(model_from(scalar_yaml(0.0, 1.0, 2.0)), {0.2}, experiment(400, 500, 11));
  CHECK(two.rows[0].median / one.rows[0].median == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("tightness diagnostics") {
  const auto m = testing::preset("constant-schilder");
  const std::vector<double> eps_list{0.4, 0.2, 0.1}, L_list{0.5, 1.0, 1.5};
  const auto table = tightness_diagnostics(m, eps_list, L_list, {0.002, 0.1}, 1.0, experiment(4000, 500, 12));
  REQUIRE(table.norm_rows.size() == 9);
  for (std::size_t e = 0; e < 3; ++e) {
    for (std::size_t j = 1; j < 3; ++j) {
      const auto& lo = table.norm_rows[e * 3 + j - 1];
      const auto& hi = table.norm_rows[e * 3 + j];
      CHECK(hi.estimate.n_hits <= lo.estimate.n_hits);
    }
  }
  // above the bulk the rate drops as eps shrinks
  const auto& r04 = table.norm_rows[0 * 3 + 1];
  const auto& r01 = table.norm_rows[2 * 3 + 1];
  CHECK(r04.estimate.p_hat > r01.estimate.p_hat);
  REQUIRE(table.window_rows.size() == 6);
  for (const auto& w : table.window_rows) {
    CHECK(w.best_start_hits <= w.union_estimate.n_hits);
    if (w.delta == 0.002) {
      CHECK(w.union_censored);
      CHECK(w.sup_window_censored);
    }
  }
  CHECK_THROWS_AS(tightness_diagnostics(m, eps_list, L_list, {0.1}, 0.0, experiment(10, 10, 12)), Error);
}

TEST_CASE("occupation fractions approach the stationary law") {
  const auto f = occupation_fractions(testing::preset("two-state-averaging"), 0.01, experiment(50, 1000, 13));
  CHECK(f[0] == doctest::Approx(2.0 / 3.0).epsilon(0.03));
  CHECK(f[1] == doctest::Approx(1.0 / 3.0).epsilon(0.06));
}

TEST_CASE("representation residual is small at fine resolution") {
  CHECK(representation_study(testing::preset("varying-friction"), 0.2, experiment(5, 400, 14)) <= 10.0 / 400);
}

TEST_CASE("two-sided exit probability matches the series formula") {
  // P(sup |W| >= b) = 1 - (4/pi) sum_k (-1)^k / (2k+1) exp(-(2k+1)^2 pi^2 / (8 b^2))
  const double eps = 0.25, b = 1.0 / std::sqrt(eps);
  double stay = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double o = 2 * k + 1;
    stay += (k % 2 == 0 ? 1.0 : -1.0) / o * std::exp(-o * o * M_PI * M_PI / (8 * b * b));
  }
  const double exact = 1.0 - 4.0 / M_PI * stay;
  const auto m = testing::preset("constant-schilder");
  const auto grid = make_grid(0.0, 1.0, 2000);
  const auto est = estimate_event_probability(m, eps, sup_dist_from_point_exceeds(grid, std::vector<double>{0.0}, 1.0, EventTarget::Overdamped),
                                              experiment(20000, 2000, 15));
  CHECK(exact == doctest::Approx(0.0909).epsilon(0.01));
  CHECK(std::abs(est.p_hat - exact) <= 3.0 * est.half_width());
}
