#pragma once

#include <span>
#include <string>
#include <vector>

#include "sklab/grid.hpp"

namespace sklab {

enum class EventKind {
  SupNormExceeds,        // sup_t |X_t| >= a
  SupDistFromPath,       // sup_t |X_t - phi_ref(t)| >= a
  EndpointInHalfspace,   // <c, X_1> >= a
  SupProjectionExceeds,  // sup_t <c, X_t - x0> >= a
};

enum class EventTarget { SecondOrder, Overdamped };

/// Path set whose probability a study estimates. Predicates are evaluated on
/// grid nodes only.
struct PathEvent {
  EventKind kind = EventKind::SupNormExceeds;
  EventTarget applies_to = EventTarget::Overdamped;
  double a = 1.0;
  std::vector<double> c;
  Path reference;

  bool hit(const Path& path) const;
  std::string describe() const;
};

/// Factories check a > 0 (halfspaces accept any a) and throw Error(BadEvent).
PathEvent sup_norm_exceeds(double a, EventTarget target);
PathEvent sup_dist_from_path_exceeds(Path reference, double a, EventTarget target);
/// Constant reference path at x0 on the given grid.
PathEvent sup_dist_from_point_exceeds(const TimeGrid& grid, std::span<const double> x0, double a, EventTarget target);
PathEvent endpoint_in_halfspace(std::vector<double> c, double a, EventTarget target);
PathEvent sup_projection_exceeds(std::vector<double> c, std::span<const double> x0, double a, EventTarget target);

EventTarget parse_event_target(const std::string& name);

}  // namespace sklab
