#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "sklab/events.hpp"
#include "sklab/integrator.hpp"
#include "sklab/stats.hpp"

namespace sklab {

/// Calls f(k) for k in [0, n) on up to `threads` workers pulling indices from
/// a shared counter. f must write its result to a slot owned by k; callers
/// reduce the slots in index order afterwards. The first exception thrown by
/// any replica stops the pool and is rethrown here.
template <class F>
void run_replicas(std::int64_t n, int threads, F&& f) {
  if (n <= 0) return;
  const int workers = static_cast<int>(std::min<std::int64_t>(std::max(threads, 1), n));
  if (workers == 1) {
    for (std::int64_t k = 0; k < n; ++k) f(k);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (!stop.load(std::memory_order_relaxed)) {
      const std::int64_t k = next.fetch_add(1, std::memory_order_relaxed);
      if (k >= n) break;
      try {
        f(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        stop = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

/// Shared settings of one Monte Carlo experiment.
struct Experiment {
  TimeGrid grid = make_grid(0.0, 1.0, 1000);
  SchemeConfig scheme;
  std::uint64_t master_seed = 0;
  std::int64_t n_replicas = 1000;
  int threads = 1;
};

/// Node path of replica k for the event's target system.
Path simulate_target(const ValidatedModel& model, double eps, EventTarget target, const TimeGrid& grid,
                     const NoiseStream& stream, const SchemeConfig& scheme);

MCEstimate estimate_event_probability(const ValidatedModel& model, double eps, const PathEvent& event,
                                      const Experiment& ex);

struct LadderRung {
  double eps;
  std::int64_t n_replicas;
  std::int64_t n_steps;
};

struct LadderRow {
  double eps = 0.0;
  std::int64_t n_steps = 0;
  MCEstimate estimate;
  double eps_log_p = 0.0;  // NaN when censored
  double eps_log_ci_low = 0.0;
  double eps_log_ci_high = 0.0;
  bool censored = false;
};

struct RateLadder {
  std::vector<LadderRow> rows;
};

/// One estimate per eps, all with the experiment's grid and replica count.
/// Throws Error(BadLadder) unless eps_list is strictly decreasing.
RateLadder rate_ladder(const ValidatedModel& model, const PathEvent& event, const std::vector<double>& eps_list,
                       const Experiment& ex);

/// Same with per-rung replica counts and grids on [0, 1].
RateLadder rate_ladder(const ValidatedModel& model, const PathEvent& event, const std::vector<LadderRung>& rungs,
                       const Experiment& ex);

/// Quantiles of a per-replica distance at each eps, with the log-log slope of
/// the medians (nullopt with one eps or any zero median).
struct DistanceRow {
  double eps = 0.0;
  std::int64_t n_replicas = 0;
  double median = 0.0;
  double upper_quartile = 0.0;
};

struct DistanceStudy {
  std::vector<DistanceRow> rows;
  std::optional<double> slope;
};

/// sup |X - q| with q driven by the same noise as X.
DistanceStudy sk_convergence_study(const ValidatedModel& model, const std::vector<double>& eps_list,
                                   const Experiment& ex);

/// sup |X - phi*| against the averaged ODE solution.
DistanceStudy averaging_study(const ValidatedModel& model, const std::vector<double>& eps_list, const Experiment& ex);

/// sup |H_eps| from diagnostics-enabled runs.
DistanceStudy h_eps_scaling_study(const ValidatedModel& model, const std::vector<double>& eps_list,
                                  const Experiment& ex);

/// Mean fraction of grid nodes the discrete environment spends in each state.
std::vector<double> occupation_fractions(const ValidatedModel& model, double eps, const Experiment& ex);

struct NormTailRow {
  double eps = 0.0;
  double L = 0.0;
  MCEstimate estimate;
  double eps_log_p = 0.0;
  bool censored = false;
};

/// Windowed modulus of continuity on grid nodes. The union column estimates
/// P(some window starting at a node has |X_t - X_s| > ell); the sup column
/// takes the largest single-window probability over window starts.
struct WindowRow {
  double eps = 0.0;
  double delta = 0.0;
  MCEstimate union_estimate;
  double union_eps_log_p = 0.0;
  bool union_censored = false;
  std::int64_t best_start_hits = 0;
  double sup_window_p = 0.0;
  double sup_window_eps_log_p = 0.0;
  bool sup_window_censored = false;
};

struct TightnessTable {
  std::vector<NormTailRow> norm_rows;
  std::vector<WindowRow> window_rows;
};

TightnessTable tightness_diagnostics(const ValidatedModel& model, const std::vector<double>& eps_list,
                                     const std::vector<double>& L_list, const std::vector<double>& delta_list,
                                     double ell, const Experiment& ex);

/// Largest |representation residual| over nodes and trajectories.
double representation_study(const ValidatedModel& model, double eps, const Experiment& ex);

}  // namespace sklab
