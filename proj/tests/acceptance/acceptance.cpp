// Acceptance runner. One PASS/FAIL line per criterion; details above it.
//   sklab_acceptance [--criterion N] [--out DIR]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sklab/cli.hpp"
#include "sklab/diagnostics.hpp"
#include "sklab/lab.hpp"
#include "sklab/output.hpp"
#include "sklab/overdamped.hpp"
#include "sklab/rate.hpp"
#include "support.hpp"

using namespace sklab;
namespace fs = std::filesystem;

namespace {

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

class Criterion {
 public:
  Criterion(int id, std::string title, double budget_s)
      : id_(id), title_(std::move(title)), budget_(budget_s), start_(std::chrono::steady_clock::now()) {
    std::cout << "criterion " << id_ << ": " << title_ << '\n';
  }

  void check(const std::string& what, bool ok, const std::string& detail) {
    std::cout << "  [" << (ok ? "ok" : "FAIL") << "] " << what << ": " << detail << '\n';
    ok_ = ok_ && ok;
  }

  void note(const std::string& line) { std::cout << "  " << line << '\n'; }

  bool finish() {
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    check("runtime", elapsed <= budget_, num(elapsed, 3) + " s (limit " + num(budget_) + " s)");
    std::cout << "criterion " << id_ << " " << (ok_ ? "PASS" : "FAIL") << "  " << title_ << '\n' << std::flush;
    return ok_;
  }

 private:
  int id_;
  std::string title_;
  double budget_;
  std::chrono::steady_clock::time_point start_;
  bool ok_ = true;
};

Experiment experiment(std::int64_t replicas, std::int64_t steps, std::uint64_t seed) {
  Experiment ex;
  ex.grid = make_grid(0.0, 1.0, steps);
  ex.n_replicas = replicas;
  ex.master_seed = seed;
  return ex;
}

/// One-sided first passage of sqrt(eps) W above level a on [0, 1].
double reflection_probability(double eps, double a) { return 2.0 * normal_sf(a / std::sqrt(eps)); }

PathEvent schilder_event(EventTarget target) {
  return sup_projection_exceeds({1.0}, std::vector<double>{0.0}, 1.0, target);
}

bool ci_contains(const LadderRow& r, double v) { return !r.censored && r.eps_log_ci_low <= v && v <= r.eps_log_ci_high; }

bool ci_overlap(const LadderRow& a, const LadderRow& b) {
  return !a.censored && !b.censored && a.eps_log_ci_low <= b.eps_log_ci_high && b.eps_log_ci_low <= a.eps_log_ci_high;
}

std::string row_text(const LadderRow& r) {
  if (r.censored) return "censored (0 hits of " + std::to_string(r.estimate.n_replicas) + ")";
  return "eps log p = " + num(r.eps_log_p) + " [" + num(r.eps_log_ci_low) + ", " + num(r.eps_log_ci_high) + "], " +
         std::to_string(r.estimate.n_hits) + " hits of " + std::to_string(r.estimate.n_replicas);
}

bool strictly_decreasing(const DistanceStudy& s) {
  for (std::size_t i = 1; i < s.rows.size(); ++i)
    if (!(s.rows[i].median < s.rows[i - 1].median)) return false;
  return true;
}

std::string medians(const DistanceStudy& s) {
  std::string out;
  for (const auto& r : s.rows) out += (out.empty() ? "" : ", ") + num(r.eps) + ": " + num(r.median);
  return out;
}

bool criterion_1(const fs::path& out) {
  Criterion c(1, "Schilder oracle", 60);
  const auto m = testing::preset("constant-schilder");
  const auto ladder = rate_ladder(m, schilder_event(EventTarget::Overdamped), std::vector<LadderRung>{{0.25, 100000, 4096}},
                                  experiment(1, 1, 101));
  write_ladder_csv(out / "schilder.csv", ladder);
  const auto& e = ladder.rows[0].estimate;
  const double exact = reflection_probability(0.25, 1.0);
  c.check("p_hat within 3 Wilson half-widths of 2*Phibar(2)", std::abs(e.p_hat - exact) <= 3.0 * e.half_width(),
          "p_hat " + num(e.p_hat) + ", exact " + num(exact) + ", half-width " + num(e.half_width()) + ", 4096 steps");
  return c.finish();
}

bool criterion_2(const fs::path& out) {
  Criterion c(2, "LDP trend on the eps ladder", 600);
  const auto m = testing::preset("constant-schilder");
  // Monitoring-bias of the node sup shrinks like sqrt(dt); steps are set per rung
  // so the bias stays below the rung's CI half-width.
  const std::vector<LadderRung> rungs{{0.25, 100000, 8192}, {0.1, 400000, 2048}, {0.05, 4000000, 512}};
  const auto q = rate_ladder(m, schilder_event(EventTarget::Overdamped), rungs, experiment(1, 1, 202));
  write_ladder_csv(out / "ladder_overdamped.csv", q);
  double previous = -INFINITY;
  bool monotone = true;
  for (const auto& r : q.rows) {
    const double exact = r.eps * std::log(reflection_probability(r.eps, 1.0));
    c.check("overdamped eps=" + num(r.eps) + " CI contains exact " + num(exact, 4), ci_contains(r, exact), row_text(r));
    monotone = monotone && !r.censored && r.eps_log_p > previous && r.eps_log_p < -0.5;
    previous = r.eps_log_p;
  }
  c.check("overdamped ladder increasing toward -0.5", monotone, "rows in order of decreasing eps");

  const std::vector<LadderRung> shared(rungs.begin(), rungs.begin() + 2);
  const auto x = rate_ladder(m, schilder_event(EventTarget::SecondOrder), shared, experiment(1, 1, 202));
  write_ladder_csv(out / "ladder_second_order.csv", x);
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    c.check("second order vs overdamped CI overlap at eps=" + num(x.rows[i].eps), ci_overlap(x.rows[i], q.rows[i]),
            "X: " + row_text(x.rows[i]));
  }
  return c.finish();
}

bool criterion_3() {
  Criterion c(3, "H-functional exactness", 1);
  Eigen::MatrixXd Q(2, 2);
  Q << -1, 1, 2, -2;
  const std::vector<double> g{1.0, 0.0};
  const double H = h_functional(Q, g);
  c.check("h_functional = sqrt(3) - 1 within 1e-8", std::abs(H - (std::sqrt(3.0) - 1.0)) <= 1e-8, num(H, 12));
  for (const double v : h_functional_oracle(Q, g, 0.01, 1.0)) {
    c.check("matrix-exponential oracle within 0.05 at eps=0.01", std::abs(v - H) <= 0.05, num(v, 8));
  }
  return c.finish();
}

bool criterion_4() {
  Criterion c(4, "Legendre and action suite", 10);
  const RateModel two(testing::preset("two-state-averaging"));
  const std::vector<double> origin{0.0}, one{1.0};
  const double L_bar = lagrangian(two, 0.0, origin, one);
  c.check("L(b_bar / lambda_0) <= 1e-6", L_bar <= 1e-6, num(L_bar));

  const RateModel quad(testing::model_from(testing::scalar_yaml(0.0, 2.0, 1.0)));
  double worst = 0.0;
  for (double gamma : {-1.0, 0.25, 1.0, 1.5}) {
    const std::vector<double> gv{gamma};
    worst = std::max(worst, std::abs(lagrangian(quad, 0.0, origin, gv) - 2.0 * gamma * gamma));
  }
  c.check("L(gamma) = 2 gamma^2 at lambda_0=2 within 1e-6", worst <= 1e-6, "max error " + num(worst));

  const RateModel unit(testing::model_from(testing::scalar_yaml(0.0, 1.0, 1.0)));
  Path phi(make_grid(0.0, 1.0, 16), 1);
  for (int k = 0; k <= 16; ++k) phi(k, 0) = k / 16.0;
  const double I = action(unit, phi);
  c.check("action of t -> t = 0.5 within 1e-6", std::abs(I - 0.5) <= 1e-6, num(I, 10));

  std::mt19937_64 gen(404);
  std::uniform_real_distribution<double> ub(-4.0, 4.0), ux(-2.0, 2.0), ut(0.0, 1.0), ug(-2.5, 4.5);
  int convex_fail = 0, duality_fail = 0;
  for (int k = 0; k < 100; ++k) {
    const double t = ut(gen);
    const std::vector<double> x{ux(gen)}, b1{ub(gen)}, b2{ub(gen)}, mid{0.5 * (b1[0] + b2[0])};
    if (h_at(two, t, x, mid) > 0.5 * (h_at(two, t, x, b1) + h_at(two, t, x, b2)) + 1e-9) ++convex_fail;
    const std::vector<double> gamma{ug(gen)}, beta{ub(gen)};
    if (lagrangian(two, t, x, gamma) < gamma[0] * beta[0] - h_at(two, t, x, beta) - 1e-8) ++duality_fail;
  }
  c.check("convexity of H on 100 random pairs", convex_fail == 0, std::to_string(convex_fail) + " violations");
  c.check("weak duality on 100 random probes", duality_fail == 0, std::to_string(duality_fail) + " violations");
  return c.finish();
}

bool criterion_5() {
  Criterion c(5, "least action", 30);
  const RateModel unit(testing::model_from(testing::scalar_yaml(0.0, 1.0, 1.0)));
  const std::vector<double> a{0.0}, b{1.0};
  const auto res = minimize_action(unit, a, b, 16);
  Path line(res.path.grid, 1);
  for (int k = 0; k <= 16; ++k) line(k, 0) = k / 16.0;
  const double dist = sup_distance(res.path, line);
  c.check("sup-distance to the straight line <= 1e-3", dist <= 1e-3, num(dist));
  c.check("value 0.5 +- 1e-4", std::abs(res.value - 0.5) <= 1e-4,
          num(res.value, 10) + " after " + std::to_string(res.iterations) + " iterations");
  return c.finish();
}

bool criterion_6(const fs::path& out) {
  Criterion c(6, "SK convergence", 300);
  const auto m = testing::preset("constant-schilder");
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  const auto study = sk_convergence_study(m, eps, experiment(200, 1000, 606));
  write_distance_csv(out / "sk_convergence.csv", study);
  c.check("median distance strictly decreasing", strictly_decreasing(study), medians(study));
  c.check("fitted slope >= 0.4", study.slope && *study.slope >= 0.4,
          study.slope ? num(*study.slope) : std::string("undefined"));

  const auto quiet = testing::model_from(testing::scalar_yaml(0.0, 1.0, 0.0, 1.0));
  const auto det = sk_convergence_study(quiet, eps, experiment(2, 1000, 606));
  double worst = 0.0;
  for (const auto& r : det.rows) worst = std::max(worst, std::abs(r.median / (r.eps * r.eps) - 1.0));
  c.check("deterministic case equals eps^2/lambda within 5%", worst <= 0.05, "max relative error " + num(worst));
  return c.finish();
}

bool criterion_7() {
  Criterion c(7, "momentum stationarity", 120);
  const auto m = testing::preset("constant-schilder");
  const double eps = 0.2;
  const auto grid = make_grid(0.0, 1.0, 4);
  const std::int64_t n = 100000;
  std::vector<double> p(static_cast<std::size_t>(n));
  run_replicas(n, 1, [&](std::int64_t k) {
    const auto b = simulate_second_order(m, eps, grid, spawn_stream(707, static_cast<std::uint64_t>(k)), SchemeConfig{});
    p[static_cast<std::size_t>(k)] = b.p(4, 0);
  });
  const double var = sample_variance(p);
  c.check("Var p(1) within 5% of 2.5", std::abs(var / 2.5 - 1.0) <= 0.05, num(var));
  return c.finish();
}

bool criterion_8() {
  Criterion c(8, "averaging", 300);
  const auto m = testing::preset("two-state-averaging");
  const std::vector<double> x0{0.0};
  const double bbar = averaged_drift(m, 0.0, x0)[0];
  c.check("b_bar = 1", std::abs(bbar - 1.0) <= 1e-12, num(bbar, 17));
  const auto frac = occupation_fractions(m, 0.005, experiment(200, 4000, 808));
  c.check("occupation of state 0 = 2/3 +- 0.01 at eps=0.005", std::abs(frac[0] - 2.0 / 3.0) <= 0.01, num(frac[0]));
  const auto study = averaging_study(m, {0.2, 0.1, 0.05}, experiment(200, 1000, 809));
  c.check("median sup|X - phi*| strictly decreasing", strictly_decreasing(study), medians(study));
  return c.finish();
}

bool criterion_9(const fs::path& out) {
  Criterion c(9, "H_eps scaling", 300);
  const auto m = testing::preset("constant-schilder");
  const auto study = h_eps_scaling_study(m, {0.4, 0.2, 0.1, 0.05}, experiment(200, 1000, 909));
  write_distance_csv(out / "h_scaling.csv", study);
  c.note("medians " + medians(study));
  c.check("slope in [0.3, 0.7]", study.slope && *study.slope >= 0.3 && *study.slope <= 0.7,
          study.slope ? num(*study.slope) : std::string("undefined"));
  return c.finish();
}

bool criterion_10() {
  Criterion c(10, "jump/Markov equivalence", 120);
  const auto jump = testing::preset("jump-equiv");
  const auto markov = testing::preset("jump-equiv-markov");
  const double eps = 0.05;
  const auto grid = make_grid(0.0, 1.0, 1000);
  const std::int64_t n = 10000;
  struct Sample {
    std::vector<double> x;
    std::vector<int> label;
  };
  auto draw = [&](const ValidatedModel& model, std::uint64_t seed) {
    Sample s{std::vector<double>(n), std::vector<int>(n)};
    run_replicas(n, 1, [&](std::int64_t k) {
      const auto b = simulate_second_order(model, eps, grid, spawn_stream(seed, static_cast<std::uint64_t>(k)), SchemeConfig{});
      s.x[static_cast<std::size_t>(k)] = b.X(grid.n_steps(), 0);
      s.label[static_cast<std::size_t>(k)] = b.env.labels.back();
    });
    return s;
  };
  // independent seeds: the two-sample test needs independent samples
  const Sample a = draw(jump, 1010), b = draw(markov, 1011);
  std::vector<double> pooled = a.x;
  pooled.insert(pooled.end(), b.x.begin(), b.x.end());
  const int bins = 10;
  std::vector<double> edges;
  for (int i = 1; i < bins; ++i) edges.push_back(quantile(pooled, static_cast<double>(i) / bins));
  auto cells = [&](const Sample& s) {
    std::vector<std::int64_t> count(2 * bins, 0);
    for (std::int64_t k = 0; k < n; ++k) {
      const auto bin = std::upper_bound(edges.begin(), edges.end(), s.x[static_cast<std::size_t>(k)]) - edges.begin();
      ++count[static_cast<std::size_t>(s.label[static_cast<std::size_t>(k)] * bins + bin)];
    }
    return count;
  };
  const auto ca = cells(a), cb = cells(b);
  const double pvalue = chi_square_two_sample(ca, cb);
  c.check("chi-square on (label, X(1) decile) cells p > 0.01", pvalue > 0.01, "p = " + num(pvalue));
  return c.finish();
}

bool criterion_11() {
  Criterion c(11, "representation identity", 60);
  const auto m = testing::preset("varying-friction");
  auto ex = experiment(20, 200, 1111);
  ex.scheme = SchemeConfig{Scheme::Exponential, 1.0, true};
  const double coarse = representation_study(m, 0.2, ex);
  ex.grid = ex.grid.refined();
  const double fine = representation_study(m, 0.2, ex);
  const double dt = 1.0 / 200;
  c.check("residual <= 10 dt at dt=0.005", coarse <= 10.0 * dt, num(coarse));
  c.check("residual <= 10 dt at dt=0.0025", fine <= 10.0 * dt / 2, num(fine));
  const double ratio = fine / coarse;
  c.check("halving dt halves the residual (ratio in [0.35, 0.65])", ratio >= 0.35 && ratio <= 0.65, num(ratio));
  return c.finish();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool criterion_12(const fs::path& out) {
  Criterion c(12, "determinism", 600);
  auto run = [&](const std::vector<std::string>& args, const fs::path& dir, const std::string& threads) {
    std::vector<std::string> argv{"sklab"};
    argv.insert(argv.end(), args.begin(), args.end());
    argv.insert(argv.end(), {"--threads", threads, "--out", dir.string()});
    std::ostringstream sink_out, sink_err;
    const int code = run_cli(argv, sink_out, sink_err);
    if (code != 0) c.note("sklab exited " + std::to_string(code) + ": " + sink_err.str());
    return code == 0;
  };
  const std::vector<std::string> c1{"rate-ladder", "--preset", "constant-schilder", "--eps", "0.25",
                                    "--replicas", "100000", "--steps", "4096", "--event", "sup-proj",
                                    "--level", "1", "--target", "q", "--seed", "101"};
  const std::vector<std::string> c6{"sk-compare", "--preset", "constant-schilder", "--eps", "0.4,0.2,0.1,0.05",
                                    "--replicas", "200", "--steps", "1000", "--seed", "606"};
  struct Case {
    const char* name;
    const std::vector<std::string>* args;
    const char* csv;
  };
  for (const Case& k : {Case{"criterion 1", &c1, "rate_ladder.csv"}, Case{"criterion 6", &c6, "sk_compare.csv"}}) {
    const fs::path base = out / (std::string(k.csv) + ".runs");
    bool ok = run(*k.args, base / "a_threads1", "1") && run(*k.args, base / "b_threads1", "1") &&
              run(*k.args, base / "c_threads4", "4");
    std::string detail = "runs failed";
    if (ok) {
      const std::string a = slurp(base / "a_threads1" / k.csv);
      ok = !a.empty() && a == slurp(base / "b_threads1" / k.csv) && a == slurp(base / "c_threads4" / k.csv);
      detail = std::to_string(a.size()) + " bytes, sha256 " + sha256_hex(a).substr(0, 16);
    }
    c.check(std::string(k.name) + " CSV byte-identical across reruns and --threads 4", ok, detail);
  }
  return c.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sklab acceptance criteria"};
  int only = 0;
  std::string out_dir = "acceptance_out";
  app.add_option("--criterion", only, "Run a single criterion (1-12); default all")->check(CLI::Range(0, 12));
  app.add_option("--out", out_dir, "Directory for the CSV artifacts");
  CLI11_PARSE(app, argc, argv);

  const fs::path out(out_dir);
  fs::create_directories(out);
  const std::vector<std::function<bool()>> criteria{
      [&] { return criterion_1(out); }, [&] { return criterion_2(out); }, [] { return criterion_3(); },
      [] { return criterion_4(); },     [] { return criterion_5(); },     [&] { return criterion_6(out); },
      [] { return criterion_7(); },     [] { return criterion_8(); },     [&] { return criterion_9(out); },
      [] { return criterion_10(); },    [] { return criterion_11(); },    [&] { return criterion_12(out); },
  };
  int failed = 0;
  for (int i = 1; i <= 12; ++i) {
    if (only != 0 && only != i) continue;
    try {
      if (!criteria[static_cast<std::size_t>(i - 1)]()) ++failed;
    } catch (const std::exception& e) {
      std::cout << "criterion " << i << " FAIL  error: " << e.what() << '\n';
      ++failed;
    }
  }
  return failed == 0 ? 0 : 1;
}
