#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sklab {

/// Uniform time grid on [t0, t_end]. Node k sits at t0 + k*dt, computed
/// multiplicatively so there is no accumulated drift.
class TimeGrid {
 public:
  TimeGrid() = default;

  double t0() const noexcept { return t0_; }
  double t_end() const noexcept { return t_end_; }
  std::int64_t n_steps() const noexcept { return n_steps_; }
  std::int64_t n_nodes() const noexcept { return n_steps_ + 1; }
  double dt() const noexcept { return dt_; }
  double node(std::int64_t k) const noexcept { return t0_ + static_cast<double>(k) * dt_; }

  /// Grid with half the step size over the same interval.
  TimeGrid refined() const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.t0_ == b.t0_ && a.t_end_ == b.t_end_ && a.n_steps_ == b.n_steps_;
  }

 private:
  friend TimeGrid make_grid(double t0, double t_end, std::int64_t n_steps);
  double t0_ = 0.0;
  double t_end_ = 1.0;
  std::int64_t n_steps_ = 1;
  double dt_ = 1.0;
};

/// Throws Error(BadInterval) unless t_end > t0 and n_steps >= 1.
TimeGrid make_grid(double t0, double t_end, std::int64_t n_steps);

/// Vector-valued path stored at grid nodes, row-major (node, component).
struct Path {
  TimeGrid grid;
  int dim = 0;
  std::vector<double> values;

  Path() = default;
  Path(TimeGrid g, int d) : grid(g), dim(d), values(static_cast<std::size_t>(g.n_nodes()) * d, 0.0) {}

  std::int64_t n_nodes() const noexcept { return dim == 0 ? 0 : static_cast<std::int64_t>(values.size()) / dim; }
  std::span<double> at(std::int64_t k) { return {values.data() + k * dim, static_cast<std::size_t>(dim)}; }
  std::span<const double> at(std::int64_t k) const {
    return {values.data() + k * dim, static_cast<std::size_t>(dim)};
  }
  double& operator()(std::int64_t k, int i) { return values[k * dim + i]; }
  double operator()(std::int64_t k, int i) const { return values[k * dim + i]; }
};

}  // namespace sklab
