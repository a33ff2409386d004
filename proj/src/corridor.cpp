#include "cavcoord/corridor.hpp"

#include "cavcoord/errors.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace cavcoord {

namespace {

std::pair<ApproachId, ApproachId> ordered_pair(const ApproachId& x, const ApproachId& y) {
  return x < y ? std::make_pair(x, y) : std::make_pair(y, x);
}

}  // namespace

std::vector<std::string> GlobalParams::validate(const std::string& prefix) const {
  std::vector<std::string> issues;
  auto bad = [&](const std::string& field, const std::string& msg) {
    issues.push_back(prefix + "." + field + ": " + msg);
  };
  if (!std::isfinite(rho) || rho <= 0) bad("rho", "must be > 0");
  if (!std::isfinite(delta) || delta <= 0) bad("delta", "must be > 0");
  if (!std::isfinite(v_min) || v_min < 0) bad("v_min", "must be >= 0");
  if (!std::isfinite(v_max) || v_max <= v_min) bad("v_max", "must be > v_min");
  if (!std::isfinite(u_min) || u_min >= 0) bad("u_min", "must be < 0");
  if (!std::isfinite(u_max) || u_max <= 0) bad("u_max", "must be > 0");
  if (horizon_cap && (!std::isfinite(*horizon_cap) || *horizon_cap <= 0))
    bad("horizon_cap", "must be > 0");
  if (v_min == 0 && !horizon_cap) bad("v_min", "v_min = 0 requires params.horizon_cap");
  return issues;
}

const ApproachSpec* ConflictZoneSpec::find_approach(const ApproachId& approach_id) const {
  for (const auto& a : approaches)
    if (a.id == approach_id) return &a;
  return nullptr;
}

const ApproachSpec& ConflictZoneSpec::approach(const ApproachId& approach_id) const {
  if (const auto* a = find_approach(approach_id)) return *a;
  throw DomainError("zone '" + id + "' has no approach '" + approach_id + "'");
}

bool ConflictZoneSpec::conflicts(const ApproachId& x, const ApproachId& y) const {
  return conflict_pairs.count(ordered_pair(x, y)) > 0;
}

void ConflictZoneSpec::add_conflict(const ApproachId& x, const ApproachId& y) {
  conflict_pairs.insert(ordered_pair(x, y));
}

const RouteLeg* Route::leg_for(const ZoneId& zone) const {
  for (const auto& leg : legs)
    if (leg.zone == zone) return &leg;
  return nullptr;
}

const ConflictZoneSpec* CorridorSpec::find_zone(const ZoneId& zone_id) const {
  for (const auto& z : zones)
    if (z.id == zone_id) return &z;
  return nullptr;
}

const ConflictZoneSpec& CorridorSpec::zone(const ZoneId& zone_id) const {
  if (const auto* z = find_zone(zone_id)) return *z;
  throw DomainError("unknown zone '" + zone_id + "'");
}

int CorridorSpec::zone_index(const ZoneId& zone_id) const {
  for (std::size_t i = 0; i < zones.size(); ++i)
    if (zones[i].id == zone_id) return static_cast<int>(i);
  return -1;
}

const LinkSpec* CorridorSpec::find_link(const LinkId& link_id) const {
  for (const auto& l : links)
    if (l.id == link_id) return &l;
  return nullptr;
}

const LinkSpec& CorridorSpec::link(const LinkId& link_id) const {
  if (const auto* l = find_link(link_id)) return *l;
  throw DomainError("unknown link '" + link_id + "'");
}

std::vector<std::string> CorridorSpec::validate() const {
  std::vector<std::string> issues = params.validate("params");
  if (zones.empty()) issues.push_back("zones: at least one conflict zone is required");

  std::unordered_set<std::string> zone_ids;
  for (std::size_t zi = 0; zi < zones.size(); ++zi) {
    const auto& z = zones[zi];
    const std::string path = "zones[" + std::to_string(zi) + "]";
    if (z.id.empty()) issues.push_back(path + ".id: must not be empty");
    if (!zone_ids.insert(z.id).second) issues.push_back(path + ".id: duplicate zone id '" + z.id + "'");
    if (!std::isfinite(z.zone_length) || z.zone_length <= 0) issues.push_back(path + ".length: must be > 0");
    if (z.approaches.empty()) issues.push_back(path + ".approaches: at least one approach is required");
    std::unordered_set<std::string> approach_ids;
    for (std::size_t ai = 0; ai < z.approaches.size(); ++ai) {
      const auto& a = z.approaches[ai];
      const std::string apath = path + ".approaches[" + std::to_string(ai) + "]";
      if (!approach_ids.insert(a.id).second) issues.push_back(apath + ".id: duplicate approach id '" + a.id + "'");
      if (!std::isfinite(a.control_zone_length) || a.control_zone_length <= 0)
        issues.push_back(apath + ".control_zone_length: must be > 0");
    }
    for (const auto& [x, y] : z.conflict_pairs) {
      if (x == y) issues.push_back(path + ".conflict_pairs: approach '" + x + "' cannot conflict with itself");
      if (!approach_ids.count(x) || !approach_ids.count(y))
        issues.push_back(path + ".conflict_pairs: pair (" + x + ", " + y + ") references an unknown approach");
    }
  }

  std::unordered_set<std::string> link_ids;
  for (std::size_t li = 0; li < links.size(); ++li) {
    const auto& l = links[li];
    const std::string path = "links[" + std::to_string(li) + "]";
    if (!link_ids.insert(l.id).second) issues.push_back(path + ".id: duplicate link id '" + l.id + "'");
    if (!std::isfinite(l.length) || l.length < 0) issues.push_back(path + ".length: must be >= 0");
    if (l.to_zone.has_value() != l.to_approach.has_value()) {
      issues.push_back(path + ".to: zone and approach must be given together");
    } else if (l.to_zone) {
      const auto* z = find_zone(*l.to_zone);
      if (!z)
        issues.push_back(path + ".to.zone: unknown zone '" + *l.to_zone + "'");
      else if (!z->find_approach(*l.to_approach))
        issues.push_back(path + ".to.approach: zone '" + *l.to_zone + "' has no approach '" + *l.to_approach + "'");
    }
  }
  return issues;
}

std::vector<std::string> CorridorSpec::validate_route(const Route& route, const std::string& prefix) const {
  std::vector<std::string> issues;
  if (route.legs.empty()) issues.push_back(prefix + ".legs: a route needs at least one leg");
  int previous_index = -1;
  for (std::size_t i = 0; i < route.legs.size(); ++i) {
    const auto& leg = route.legs[i];
    const std::string path = prefix + ".legs[" + std::to_string(i) + "]";
    const int index = zone_index(leg.zone);
    if (index < 0) {
      issues.push_back(path + ".zone: unknown zone '" + leg.zone + "'");
      continue;
    }
    if (index <= previous_index) issues.push_back(path + ".zone: legs must follow corridor order");
    previous_index = index;
    if (!zones[index].find_approach(leg.approach))
      issues.push_back(path + ".approach: zone '" + leg.zone + "' has no approach '" + leg.approach + "'");
    const auto* link = find_link(leg.exit_link);
    if (!link) {
      issues.push_back(path + ".exit_link: unknown link '" + leg.exit_link + "'");
      continue;
    }
    const bool last = i + 1 == route.legs.size();
    if (last && link->to_zone) {
      issues.push_back(path + ".exit_link: last leg must leave the corridor but link '" + link->id +
                       "' leads to zone '" + *link->to_zone + "'");
    } else if (!last) {
      const auto& next = route.legs[i + 1];
      if (!link->to_zone || *link->to_zone != next.zone || *link->to_approach != next.approach)
        issues.push_back(path + ".exit_link: link '" + link->id + "' does not lead to approach '" + next.approach +
                         "' of zone '" + next.zone + "'");
    }
  }
  return issues;
}

const char* to_string(RelationClass relation) {
  switch (relation) {
    case RelationClass::SameLane:
      return "same_lane";
    case RelationClass::LateralConflict:
      return "lateral_conflict";
    case RelationClass::NoConflict:
      return "no_conflict";
  }
  return "unknown";
}

RelationClass classify_approaches(const ConflictZoneSpec& zone, const ApproachId& approach_i,
                                  const ApproachId& approach_j) {
  if (!zone.find_approach(approach_i) || !zone.find_approach(approach_j))
    throw DomainError("approach not part of zone '" + zone.id + "'");
  if (approach_i == approach_j) return RelationClass::SameLane;
  if (zone.conflicts(approach_i, approach_j)) return RelationClass::LateralConflict;
  return RelationClass::NoConflict;
}

RelationClass classify_relation(const ConflictZoneSpec& zone, const Route& route_i, const Route& route_j) {
  const auto* leg_i = route_i.leg_for(zone.id);
  const auto* leg_j = route_j.leg_for(zone.id);
  if (!leg_i) throw DomainError("route '" + route_i.id + "' does not traverse zone '" + zone.id + "'");
  if (!leg_j) throw DomainError("route '" + route_j.id + "' does not traverse zone '" + zone.id + "'");
  return classify_approaches(zone, leg_i->approach, leg_j->approach);
}

TimeBounds feasible_time_bounds(const ApproachSpec& approach, double t0, const GlobalParams& params) {
  if (!std::isfinite(t0)) throw DomainError("feasible_time_bounds: t0 must be finite");
  const double length = approach.control_zone_length;
  const double t_min = t0 + length / params.v_max;
  double t_max;
  if (params.v_min > 0) {
    t_max = t0 + length / params.v_min;
  } else if (params.horizon_cap) {
    t_max = t0 + *params.horizon_cap;
  } else {
    throw ConfigError("params.v_min: v_min = 0 gives an unbounded latest entry time; set params.horizon_cap");
  }
  return {t_min, std::max(t_min, t_max)};
}

RouteGeometry route_geometry(const CorridorSpec& corridor, const Route& route) {
  RouteGeometry geometry;
  double s = 0.0;
  for (const auto& leg : route.legs) {
    const auto& zone = corridor.zone(leg.zone);
    const auto& approach = zone.approach(leg.approach);
    LegGeometry g{leg.zone, leg.approach, leg.exit_link, s, 0, 0, 0};
    g.conflict_entry = s + approach.control_zone_length;
    g.conflict_exit = g.conflict_entry + zone.zone_length;
    g.link_end = g.conflict_exit + corridor.link(leg.exit_link).length;
    s = g.link_end;
    geometry.legs.push_back(g);
  }
  geometry.length = s;
  return geometry;
}

}  // namespace cavcoord
