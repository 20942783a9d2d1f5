#include "sklab/lab.hpp"

#include <cmath>
#include <limits>

#include "sklab/diagnostics.hpp"
#include "sklab/overdamped.hpp"

namespace sklab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double eps_log(double eps, double p) { return p > 0.0 ? eps * std::log(p) : kNaN; }

void check_decreasing(const std::vector<double>& eps_list) {
  if (eps_list.empty()) throw Error(ErrorCode::BadLadder, "eps list is empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw Error(ErrorCode::BadLadder, "eps values must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw Error(ErrorCode::BadLadder, "eps list must be strictly decreasing");
    }
  }
}

LadderRow ladder_row(double eps, std::int64_t n_steps, const MCEstimate& est) {
  LadderRow row;
  row.eps = eps;
  row.n_steps = n_steps;
  row.estimate = est;
  row.censored = est.censored();
  row.eps_log_p = row.censored ? kNaN : eps_log(eps, est.p_hat);
  row.eps_log_ci_low = eps_log(eps, est.ci_low);
  row.eps_log_ci_high = eps_log(eps, est.ci_high);
  return row;
}

template <class Distance>
DistanceStudy distance_study(const std::vector<double>& eps_list, const Experiment& ex, Distance&& distance) {
  DistanceStudy study;
  for (double eps : eps_list) {
    std::vector<double> values(static_cast<std::size_t>(ex.n_replicas));
    run_replicas(ex.n_replicas, ex.threads, [&](std::int64_t k) {
      values[static_cast<std::size_t>(k)] = distance(eps, spawn_stream(ex.master_seed, static_cast<std::uint64_t>(k)));
    });
    DistanceRow row;
    row.eps = eps;
    row.n_replicas = ex.n_replicas;
    row.median = median(values);
    row.upper_quartile = quantile(values, 0.75);
    study.rows.push_back(row);
  }
  if (study.rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : study.rows) {
      xs.push_back(r.eps);
      ys.push_back(r.median);
    }
    study.slope = loglog_slope(xs, ys);
  }
  return study;
}

}  // namespace

Path simulate_target(const ValidatedModel& model, double eps, EventTarget target, const TimeGrid& grid,
                     const NoiseStream& stream, const SchemeConfig& scheme) {
  if (target == EventTarget::Overdamped) return simulate_overdamped(model, eps, grid, stream).q;
  SchemeConfig plain = scheme;
  plain.record_diagnostics = false;
  return simulate_second_order(model, eps, grid, stream, plain).X;
}

MCEstimate estimate_event_probability(const ValidatedModel& model, double eps, const PathEvent& event,
                                      const Experiment& ex) {
  if (ex.n_replicas < 1) throw Error(ErrorCode::BadLadder, "need at least one replica");
  std::vector<char> hits(static_cast<std::size_t>(ex.n_replicas), 0);
  run_replicas(ex.n_replicas, ex.threads, [&](std::int64_t k) {
    const Path path = simulate_target(model, eps, event.applies_to, ex.grid,
                                      spawn_stream(ex.master_seed, static_cast<std::uint64_t>(k)), ex.scheme);
    hits[static_cast<std::size_t>(k)] = event.hit(path) ? 1 : 0;
  });
  std::int64_t total = 0;
  for (char h : hits) total += h;
  return make_estimate(total, ex.n_replicas, ex.master_seed, 0);
}

RateLadder rate_ladder(const ValidatedModel& model, const PathEvent& event, const std::vector<double>& eps_list,
                       const Experiment& ex) {
  check_decreasing(eps_list);
  RateLadder ladder;
  for (double eps : eps_list) {
    ladder.rows.push_back(ladder_row(eps, ex.grid.n_steps(), estimate_event_probability(model, eps, event, ex)));
  }
  return ladder;
}

RateLadder rate_ladder(const ValidatedModel& model, const PathEvent& event, const std::vector<LadderRung>& rungs,
                       const Experiment& ex) {
  std::vector<double> eps_list;
  for (const auto& r : rungs) eps_list.push_back(r.eps);
  check_decreasing(eps_list);
  RateLadder ladder;
  for (const auto& r : rungs) {
    Experiment rung = ex;
    rung.grid = make_grid(ex.grid.t0(), ex.grid.t_end(), r.n_steps);
    rung.n_replicas = r.n_replicas;
    ladder.rows.push_back(ladder_row(r.eps, r.n_steps, estimate_event_probability(model, r.eps, event, rung)));
  }
  return ladder;
}

DistanceStudy sk_convergence_study(const ValidatedModel& model, const std::vector<double>& eps_list,
                                   const Experiment& ex) {
  SchemeConfig plain = ex.scheme;
  plain.record_diagnostics = false;
  return distance_study(eps_list, ex, [&](double eps, const NoiseStream& stream) {
    const auto bundle = simulate_second_order(model, eps, ex.grid, stream, plain);
    const auto q = simulate_overdamped(model, bundle, stream);
    return sk_distance(bundle, q.q);
  });
}

DistanceStudy averaging_study(const ValidatedModel& model, const std::vector<double>& eps_list, const Experiment& ex) {
  const Path phi = solve_averaged_ode(model, ex.grid);
  SchemeConfig plain = ex.scheme;
  plain.record_diagnostics = false;
  return distance_study(eps_list, ex, [&](double eps, const NoiseStream& stream) {
    return sup_distance(simulate_second_order(model, eps, ex.grid, stream, plain).X, phi);
  });
}

DistanceStudy h_eps_scaling_study(const ValidatedModel& model, const std::vector<double>& eps_list,
                                  const Experiment& ex) {
  SchemeConfig plain = ex.scheme;
  plain.record_diagnostics = false;
  return distance_study(eps_list, ex, [&](double eps, const NoiseStream& stream) {
    auto bundle = simulate_second_order(model, eps, ex.grid, stream, plain);
    bundle.diagnostics.emplace();
    bundle.diagnostics->A_eps = compute_A_eps(model, bundle);
    return sup_norm(compute_H_eps(model, bundle));
  });
}

std::vector<double> occupation_fractions(const ValidatedModel& model, double eps, const Experiment& ex) {
  if (!is_discrete(model.environment())) {
    throw Error(ErrorCode::UnsupportedEnvironment, "occupation fractions need a discrete environment");
  }
  const int n = n_states(model.environment());
  const std::int64_t steps = ex.grid.n_steps();
  std::vector<std::vector<double>> per(static_cast<std::size_t>(ex.n_replicas));
  run_replicas(ex.n_replicas, ex.threads, [&](std::int64_t k) {
    const auto traj = simulate_overdamped(model, eps, ex.grid, spawn_stream(ex.master_seed, static_cast<std::uint64_t>(k)));
    std::vector<double> frac(n, 0.0);
    for (std::int64_t j = 0; j < steps; ++j) frac[traj.env.labels[static_cast<std::size_t>(j)]] += 1.0;
    for (auto& f : frac) f /= static_cast<double>(steps);
    per[static_cast<std::size_t>(k)] = std::move(frac);
  });
  std::vector<double> mean(n, 0.0);
  for (const auto& f : per) {
    for (int i = 0; i < n; ++i) mean[i] += f[i];
  }
  for (auto& m : mean) m /= static_cast<double>(ex.n_replicas);
  return mean;
}

TightnessTable tightness_diagnostics(const ValidatedModel& model, const std::vector<double>& eps_list,
                                     const std::vector<double>& L_list, const std::vector<double>& delta_list,
                                     double ell, const Experiment& ex) {
  check_decreasing(eps_list);
  if (!(ell > 0.0)) throw Error(ErrorCode::BadEvent, "ell must be > 0");
  const TimeGrid& grid = ex.grid;
  const std::int64_t n_nodes = grid.n_nodes();
  std::vector<std::int64_t> window_nodes;
  for (double delta : delta_list) {
    if (!(delta > 0.0)) throw Error(ErrorCode::BadEvent, "window length must be > 0");
    window_nodes.push_back(std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(delta / grid.dt() + 1e-9))));
  }
  SchemeConfig plain = ex.scheme;
  plain.record_diagnostics = false;

  TightnessTable table;
  for (double eps : eps_list) {
    struct Replica {
      double sup_norm = 0.0;
      std::vector<std::vector<char>> start_hits;  // per delta, per window start
    };
    std::vector<Replica> reps(static_cast<std::size_t>(ex.n_replicas));
    run_replicas(ex.n_replicas, ex.threads, [&](std::int64_t k) {
      const auto X = simulate_second_order(model, eps, grid, spawn_stream(ex.master_seed, static_cast<std::uint64_t>(k)), plain).X;
      Replica r;
      r.sup_norm = sup_norm(X);
      const int d = X.dim;
      for (const std::int64_t w : window_nodes) {
        std::vector<char> flags(static_cast<std::size_t>(n_nodes - 1), 0);
        for (std::int64_t s = 0; s + 1 < n_nodes; ++s) {
          const std::int64_t end = std::min(n_nodes - 1, s + w);
          for (std::int64_t t = s + 1; t <= end; ++t) {
            double dist = 0.0;
            for (int i = 0; i < d; ++i) dist += (X(t, i) - X(s, i)) * (X(t, i) - X(s, i));
            if (dist > ell * ell) {
              flags[static_cast<std::size_t>(s)] = 1;
              break;
            }
          }
        }
        r.start_hits.push_back(std::move(flags));
      }
      reps[static_cast<std::size_t>(k)] = std::move(r);
    });

    for (double L : L_list) {
      std::int64_t hits = 0;
      for (const auto& r : reps) hits += r.sup_norm > L ? 1 : 0;
      NormTailRow row;
      row.eps = eps;
      row.L = L;
      row.estimate = make_estimate(hits, ex.n_replicas, ex.master_seed);
      row.censored = row.estimate.censored();
      row.eps_log_p = eps_log(eps, row.estimate.p_hat);
      table.norm_rows.push_back(row);
    }
    for (std::size_t j = 0; j < delta_list.size(); ++j) {
      std::int64_t union_hits = 0;
      std::vector<std::int64_t> per_start(static_cast<std::size_t>(n_nodes - 1), 0);
      for (const auto& r : reps) {
        bool any = false;
        const auto& flags = r.start_hits[j];
        for (std::size_t s = 0; s < flags.size(); ++s) {
          per_start[s] += flags[s];
          any = any || flags[s] != 0;
        }
        union_hits += any ? 1 : 0;
      }
      WindowRow row;
      row.eps = eps;
      row.delta = delta_list[j];
      row.union_estimate = make_estimate(union_hits, ex.n_replicas, ex.master_seed);
      row.union_censored = row.union_estimate.censored();
      row.union_eps_log_p = eps_log(eps, row.union_estimate.p_hat);
      for (auto h : per_start) row.best_start_hits = std::max(row.best_start_hits, h);
      row.sup_window_p = static_cast<double>(row.best_start_hits) / static_cast<double>(ex.n_replicas);
      row.sup_window_censored = row.best_start_hits == 0;
      row.sup_window_eps_log_p = eps_log(eps, row.sup_window_p);
      table.window_rows.push_back(row);
    }
  }
  return table;
}

double representation_study(const ValidatedModel& model, double eps, const Experiment& ex) {
  SchemeConfig cfg = ex.scheme;
  cfg.record_diagnostics = true;
  std::vector<double> worst(static_cast<std::size_t>(ex.n_replicas), 0.0);
  run_replicas(ex.n_replicas, ex.threads, [&](std::int64_t k) {
    const auto bundle = simulate_second_order(model, eps, ex.grid, spawn_stream(ex.master_seed, static_cast<std::uint64_t>(k)), cfg);
    worst[static_cast<std::size_t>(k)] = sup_norm(representation_residual(model, bundle));
  });
  double out = 0.0;
  for (double w : worst) out = std::max(out, w);
  return out;
}

}  // namespace sklab
