#pragma once

#include "cavcoord/corridor.hpp"

#include <string>

namespace fixtures {

/// One zone "Z1" with approaches A1, A2 (conflicting) and A3 (free),
/// each `length` metres of control zone, every approach leaving on "out".
inline cavcoord::CorridorSpec single_zone(double length = 200.0) {
  using namespace cavcoord;
  CorridorSpec c;
  ConflictZoneSpec z;
  z.id = "Z1";
  z.zone_length = 10;
  z.approaches = {{"A1", length}, {"A2", length}, {"A3", length}};
  z.add_conflict("A1", "A2");
  c.zones.push_back(z);
  c.links.push_back({"out", 0.0, std::nullopt, std::nullopt});
  return c;
}

inline cavcoord::Route single_route(const std::string& approach) {
  return {approach, {{"Z1", approach, "out"}}};
}

/// Arterial with `zones` intersections. The main road enters each zone on
/// approach "main" and links straight into the next zone; every zone also has
/// a crossing side street ("side") that leaves the corridor after the zone.
inline cavcoord::CorridorSpec arterial(int zones, double control_length, double zone_length, double link_length) {
  using namespace cavcoord;
  CorridorSpec c;
  for (int k = 1; k <= zones; ++k) {
    ConflictZoneSpec z;
    z.id = "Z" + std::to_string(k);
    z.zone_length = zone_length;
    z.approaches = {{"main", control_length}, {"side", control_length}};
    z.add_conflict("main", "side");
    c.zones.push_back(z);
    LinkSpec main{"M" + std::to_string(k), link_length, std::nullopt, std::nullopt};
    if (k < zones) {
      main.to_zone = "Z" + std::to_string(k + 1);
      main.to_approach = "main";
    }
    c.links.push_back(main);
    c.links.push_back({"S" + std::to_string(k), 0.0, std::nullopt, std::nullopt});
  }
  return c;
}

inline cavcoord::Route arterial_main(int zones) {
  cavcoord::Route r{"main", {}};
  for (int k = 1; k <= zones; ++k) r.legs.push_back({"Z" + std::to_string(k), "main", "M" + std::to_string(k)});
  return r;
}

inline cavcoord::Route arterial_side(int zone) {
  const std::string k = std::to_string(zone);
  return {"side" + k, {{"Z" + k, "side", "S" + k}}};
}

}  // namespace fixtures

#include "cavcoord/config.hpp"

#include <map>

namespace fixtures {

inline std::map<cavcoord::RouteId, cavcoord::Route> arterial_routes(int zones) {
  std::map<cavcoord::RouteId, cavcoord::Route> routes;
  routes["main"] = arterial_main(zones);
  for (int k = 1; k <= zones; ++k) {
    auto r = arterial_side(k);
    routes[r.id] = r;
  }
  return routes;
}

/// Poisson spawns on every route with speeds in [8, 14] m/s.
inline cavcoord::GeneratorSpec poisson(std::uint64_t seed, double mean_headway, double horizon,
                                       const std::map<cavcoord::RouteId, cavcoord::Route>& routes) {
  cavcoord::GeneratorSpec g;
  g.seed = seed;
  g.horizon = horizon;
  for (const auto& [id, r] : routes) g.streams.push_back({id, mean_headway, 8.0, 14.0});
  return g;
}

}  // namespace fixtures

namespace fixtures {

/// Small valid scenario: one zone, two crossing approaches, three vehicles.
inline const char* kSingleZoneYaml = R"(params: {rho: 1.2, delta: 5, v_min: 2, v_max: 15, u_min: -3, u_max: 2}
zones:
  - id: X
    length: 10
    approaches:
      - {id: north, control_zone_length: 100}
      - {id: east, control_zone_length: 100}
    conflict_pairs: [[north, east]]
links:
  - {id: out_n, length: 20}
  - {id: out_e, length: 20}
routes:
  ns:
    legs: [{zone: X, approach: north, exit_link: out_n}]
  ew:
    legs: [{zone: X, approach: east, exit_link: out_e}]
arrivals:
  - {t: 0, v: 10, route: ns}
  - {t: 0, v: 10, route: ew}
  - {t: 2, v: 12, route: ns}
)";

}  // namespace fixtures
