#include "sklab/events.hpp"

#include <cmath>
#include <sstream>

#include "sklab/errors.hpp"

namespace sklab {

namespace {

void require_positive(double a) {
  if (!(a > 0.0)) throw Error(ErrorCode::BadEvent, "event level a must be > 0");
}

double dot(std::span<const double> c, std::span<const double> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * x[i];
  return s;
}

}  // namespace

bool PathEvent::hit(const Path& path) const {
  const std::int64_t n = path.n_nodes();
  const int d = path.dim;
  if ((kind == EventKind::EndpointInHalfspace || kind == EventKind::SupProjectionExceeds) &&
      static_cast<int>(c.size()) != d) {
    throw Error(ErrorCode::DimensionMismatch, "event direction does not match the path dimension");
  }
  switch (kind) {
    case EventKind::SupNormExceeds:
      for (std::int64_t k = 0; k < n; ++k) {
        const auto x = path.at(k);
        if (dot(x, x) >= a * a) return true;
      }
      return false;
    case EventKind::SupDistFromPath:
      if (!(reference.grid == path.grid) || reference.dim != d) {
        throw Error(ErrorCode::GridMismatch, "reference path is not on the experiment grid");
      }
      for (std::int64_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += (path(k, i) - reference(k, i)) * (path(k, i) - reference(k, i));
        if (s >= a * a) return true;
      }
      return false;
    case EventKind::EndpointInHalfspace:
      return dot(c, path.at(n - 1)) >= a;
    case EventKind::SupProjectionExceeds: {
      const double base = dot(c, reference.at(0));
      for (std::int64_t k = 0; k < n; ++k) {
        if (dot(c, path.at(k)) - base >= a) return true;
      }
      return false;
    }
  }
  return false;
}

std::string PathEvent::describe() const {
  std::ostringstream os;
  switch (kind) {
    case EventKind::SupNormExceeds: os << "sup_norm_exceeds(" << a << ")"; break;
    case EventKind::SupDistFromPath: os << "sup_dist_from_path_exceeds(" << a << ")"; break;
    case EventKind::EndpointInHalfspace: os << "endpoint_in_halfspace(" << a << ")"; break;
    case EventKind::SupProjectionExceeds: os << "sup_projection_exceeds(" << a << ")"; break;
  }
  os << (applies_to == EventTarget::SecondOrder ? " on X" : " on q");
  return os.str();
}

PathEvent sup_norm_exceeds(double a, EventTarget target) {
  require_positive(a);
  PathEvent e;
  e.kind = EventKind::SupNormExceeds;
  e.applies_to = target;
  e.a = a;
  return e;
}

PathEvent sup_dist_from_path_exceeds(Path reference, double a, EventTarget target) {
  require_positive(a);
  PathEvent e;
  e.kind = EventKind::SupDistFromPath;
  e.applies_to = target;
  e.a = a;
  e.reference = std::move(reference);
  return e;
}

PathEvent sup_dist_from_point_exceeds(const TimeGrid& grid, std::span<const double> x0, double a, EventTarget target) {
  Path ref(grid, static_cast<int>(x0.size()));
  for (std::int64_t k = 0; k < ref.n_nodes(); ++k) std::copy(x0.begin(), x0.end(), ref.at(k).begin());
  return sup_dist_from_path_exceeds(std::move(ref), a, target);
}

PathEvent endpoint_in_halfspace(std::vector<double> c, double a, EventTarget target) {
  if (c.empty()) throw Error(ErrorCode::BadEvent, "halfspace normal is empty");
  PathEvent e;
  e.kind = EventKind::EndpointInHalfspace;
  e.applies_to = target;
  e.a = a;
  e.c = std::move(c);
  return e;
}

PathEvent sup_projection_exceeds(std::vector<double> c, std::span<const double> x0, double a, EventTarget target) {
  require_positive(a);
  if (c.size() != x0.size() || c.empty()) throw Error(ErrorCode::BadEvent, "direction and x0 dimensions differ");
  PathEvent e;
  e.kind = EventKind::SupProjectionExceeds;
  e.applies_to = target;
  e.a = a;
  e.c = std::move(c);
  // only node 0 of the reference is read
  e.reference = Path(make_grid(0.0, 1.0, 1), static_cast<int>(x0.size()));
  std::copy(x0.begin(), x0.end(), e.reference.at(0).begin());
  return e;
}

EventTarget parse_event_target(const std::string& name) {
  if (name == "second_order" || name == "second-order" || name == "X") return EventTarget::SecondOrder;
  if (name == "overdamped" || name == "q") return EventTarget::Overdamped;
  throw Error(ErrorCode::BadEvent, "unknown event target '" + name + "'");
}

}  // namespace sklab
