#include "sklab/grid.hpp"

#include <cmath>
#include <string>

#include "sklab/errors.hpp"

namespace sklab {

TimeGrid make_grid(double t0, double t_end, std::int64_t n_steps) {
  if (!(std::isfinite(t0) && std::isfinite(t_end)) || !(t_end > t0)) {
    throw Error(ErrorCode::BadInterval, "need t_end > t0, got [" + std::to_string(t0) + ", " +
                                            std::to_string(t_end) + "]");
  }
  if (n_steps < 1) {
    throw Error(ErrorCode::BadInterval, "n_steps must be >= 1, got " + std::to_string(n_steps));
  }
  TimeGrid g;
  g.t0_ = t0;
  g.t_end_ = t_end;
  g.n_steps_ = n_steps;
  g.dt_ = (t_end - t0) / static_cast<double>(n_steps);
  return g;
}

TimeGrid TimeGrid::refined() const { return make_grid(t0_, t_end_, 2 * n_steps_); }

}  // namespace sklab
