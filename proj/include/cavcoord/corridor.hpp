#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace cavcoord {

using ZoneId = std::string;
using ApproachId = std::string;
using LinkId = std::string;
using RouteId = std::string;

/// Corridor-wide limits and safety parameters (SI units).
struct GlobalParams {
  double rho = 1.2;      ///< lateral / same-lane time headway [s]
  double delta = 5.0;    ///< minimum rear-end gap [m]
  double v_min = 2.0;    ///< [m/s]
  double v_max = 15.0;   ///< [m/s]
  double u_min = -3.0;   ///< [m/s^2]
  double u_max = 2.0;    ///< [m/s^2]
  /// Longest admissible control-zone travel time; required when v_min == 0.
  std::optional<double> horizon_cap;

  /// Human-readable violations of the parameter invariants, each prefixed
  /// with its field path under `prefix`.
  std::vector<std::string> validate(const std::string& prefix = "params") const;
};

struct ApproachSpec {
  ApproachId id;
  double control_zone_length = 0.0;  ///< control-zone entry to conflict-zone entry [m]
};

struct ConflictZoneSpec {
  ZoneId id;
  std::vector<ApproachSpec> approaches;
  /// Unordered pairs of approaches whose paths cross inside the zone,
  /// stored with the lexicographically smaller id first.
  std::set<std::pair<ApproachId, ApproachId>> conflict_pairs;
  double zone_length = 0.0;  ///< [m]

  const ApproachSpec* find_approach(const ApproachId& approach) const;
  const ApproachSpec& approach(const ApproachId& approach) const;
  bool conflicts(const ApproachId& x, const ApproachId& y) const;
  void add_conflict(const ApproachId& x, const ApproachId& y);
};

/// Road segment leaving a conflict zone. `to_zone` / `to_approach` are empty
/// when the link leaves the corridor.
struct LinkSpec {
  LinkId id;
  double length = 0.0;
  std::optional<ZoneId> to_zone;
  std::optional<ApproachId> to_approach;
};

struct RouteLeg {
  ZoneId zone;
  ApproachId approach;
  LinkId exit_link;
};

struct Route {
  RouteId id;
  std::vector<RouteLeg> legs;

  const RouteLeg* leg_for(const ZoneId& zone) const;
};

struct CorridorSpec {
  std::vector<ConflictZoneSpec> zones;  ///< in corridor order
  std::vector<LinkSpec> links;
  GlobalParams params;

  const ConflictZoneSpec* find_zone(const ZoneId& zone) const;
  const ConflictZoneSpec& zone(const ZoneId& zone) const;
  int zone_index(const ZoneId& zone) const;  ///< -1 if unknown
  const LinkSpec* find_link(const LinkId& link) const;
  const LinkSpec& link(const LinkId& link) const;

  /// Structural problems (duplicate ids, dangling references, bad lengths).
  std::vector<std::string> validate() const;
  /// Problems with a route against this corridor, prefixed with `prefix`.
  std::vector<std::string> validate_route(const Route& route, const std::string& prefix) const;
};

enum class RelationClass { SameLane, LateralConflict, NoConflict };

const char* to_string(RelationClass relation);

/// Which of the rear-end / lateral / independent subsets vehicle j belongs to
/// with respect to vehicle i at `zone`. Throws DomainError if either route
/// does not traverse the zone.
RelationClass classify_relation(const ConflictZoneSpec& zone, const Route& route_i, const Route& route_j);

/// Same classification from the two entry approaches directly.
RelationClass classify_approaches(const ConflictZoneSpec& zone, const ApproachId& approach_i,
                                  const ApproachId& approach_j);

struct TimeBounds {
  double t_min;
  double t_max;
};

/// Earliest and latest conflict-zone entry for a vehicle entering the control
/// zone at t0: the control-zone length covered at v_max and at v_min.
/// Acceleration transients are ignored. With v_min == 0 the configured
/// horizon cap replaces the (infinite) latest time.
TimeBounds feasible_time_bounds(const ApproachSpec& approach, double t0, const GlobalParams& params);

/// Route-coordinate landmarks of one leg (metres from the corridor entry).
struct LegGeometry {
  ZoneId zone;
  ApproachId approach;
  LinkId exit_link;
  double control_entry;   ///< s at control-zone entry
  double conflict_entry;  ///< s at conflict-zone entry
  double conflict_exit;   ///< s at conflict-zone exit
  double link_end;        ///< s at the end of the exit link
};

struct RouteGeometry {
  std::vector<LegGeometry> legs;
  double length = 0.0;  ///< corridor entry to corridor exit along the route
};

RouteGeometry route_geometry(const CorridorSpec& corridor, const Route& route);

}  // namespace cavcoord
