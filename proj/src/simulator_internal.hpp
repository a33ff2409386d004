#pragma once

#include "cavcoord/simulator.hpp"

namespace cavcoord::detail {

/// Arrival indices in spawn order: by time, then route, then speed.
std::vector<std::size_t> spawn_order(const std::vector<Arrival>& arrivals);

std::vector<VehicleRecord> make_vehicles(const CorridorSpec& corridor, const std::map<RouteId, Route>& routes,
                                         const std::vector<Arrival>& arrivals);

/// Fills vehicle paths, zone visits and the observed schedule.
void run_baseline(const CorridorSpec& corridor, const SimulationOptions& options, ScenarioResult& result);

/// Lane segments of a route: control zone, conflict zone (both keyed by
/// zone and approach) and non-empty links, in route coordinates.
struct Segment {
  std::string key;
  double start;
  double end;
  std::size_t leg;
  enum class Kind { Control, Conflict, Link } kind;
};

std::vector<Segment> route_segments(const RouteGeometry& geometry);

}  // namespace cavcoord::detail
