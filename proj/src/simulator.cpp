#include "cavcoord/simulator.hpp"

#include "cavcoord/errors.hpp"
#include "simulator_internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <sstream>
#include <tuple>

namespace cavcoord {

const char* to_string(Mode mode) { return mode == Mode::Optimal ? "optimal" : "baseline"; }

Mode parse_mode(const std::string& text) {
  if (text == "optimal") return Mode::Optimal;
  if (text == "baseline") return Mode::Baseline;
  throw DomainError("unknown mode '" + text + "' (expected optimal or baseline)");
}

Stated sample_path(const SampledPath& path, double t) {
  if (path.t.empty()) throw DomainError("sample_path: empty path");
  if (t <= path.t.front()) return {path.s.front(), path.v.front(), path.u.front()};
  if (t >= path.t.back()) return {path.s.back(), path.v.back(), path.u.back()};
  const auto it = std::upper_bound(path.t.begin(), path.t.end(), t);
  const std::size_t k = static_cast<std::size_t>(std::distance(path.t.begin(), it)) - 1;
  const double tau = t - path.t[k];
  const double u = path.u[k];
  return {path.s[k] + path.v[k] * tau + 0.5 * u * tau * tau, path.v[k] + u * tau, u};
}

Stated vehicle_state(const VehicleRecord& vehicle, double t) {
  if (const auto* traj = std::get_if<PiecewiseTrajectory>(&vehicle.path)) {
    return evaluate(*traj, std::clamp(t, traj->t_start(), traj->t_end()));
  }
  return sample_path(std::get<SampledPath>(vehicle.path), t);
}

std::vector<std::string> validate_arrivals(const CorridorSpec& corridor, const std::map<RouteId, Route>& routes,
                                           const std::vector<Arrival>& arrivals) {
  std::vector<std::string> issues;
  const GlobalParams& p = corridor.params;
  // Last spawn per first-leg approach, for the initial gap check.
  std::map<std::pair<ZoneId, ApproachId>, std::pair<std::size_t, const Arrival*>> last;
  for (std::size_t i : detail::spawn_order(arrivals)) {
    const Arrival& a = arrivals[i];
    const std::string path = "arrivals[" + std::to_string(i) + "]";
    if (!std::isfinite(a.t)) issues.push_back(path + ".t: must be finite");
    if (!(a.v > 0) || a.v < p.v_min || a.v > p.v_max) {
      std::ostringstream msg;
      msg << path << ".v: speed " << a.v << " outside [" << p.v_min << ", " << p.v_max << "] or not positive";
      issues.push_back(msg.str());
    }
    const auto route = routes.find(a.route);
    if (route == routes.end() || route->second.legs.empty()) {
      issues.push_back(path + ".route: unknown route '" + a.route + "'");
      continue;
    }
    const RouteLeg& first = route->second.legs.front();
    const auto key = std::make_pair(first.zone, first.approach);
    if (auto prev = last.find(key); prev != last.end()) {
      const Arrival& k = *prev->second.second;
      const double gap = k.v * (a.t - k.t);
      if (gap < p.delta - 1e-9) {
        std::ostringstream msg;
        msg << path << ": spawns " << gap << " m behind arrivals[" << prev->second.first << "] on approach '"
            << first.approach << "' of zone '" << first.zone << "' (minimum " << p.delta << " m)";
        issues.push_back(msg.str());
      }
    }
    last[key] = {i, &a};
  }
  return issues;
}

namespace detail {

std::vector<std::size_t> spawn_order(const std::vector<Arrival>& arrivals) {
  std::vector<std::size_t> order(arrivals.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return std::tie(arrivals[x].t, arrivals[x].route, arrivals[x].v) <
           std::tie(arrivals[y].t, arrivals[y].route, arrivals[y].v);
  });
  return order;
}

std::vector<VehicleRecord> make_vehicles(const CorridorSpec& corridor, const std::map<RouteId, Route>& routes,
                                         const std::vector<Arrival>& arrivals) {
  std::vector<VehicleRecord> vehicles;
  for (std::size_t i : spawn_order(arrivals)) {
    VehicleRecord v;
    v.id = static_cast<int>(vehicles.size()) + 1;
    v.arrival_index = i;
    v.route = arrivals[i].route;
    v.spawn_time = arrivals[i].t;
    v.spawn_speed = arrivals[i].v;
    v.geometry = route_geometry(corridor, routes.at(v.route));
    vehicles.push_back(std::move(v));
  }
  return vehicles;
}

}  // namespace detail

namespace {

enum class EventKind { ConflictZoneExit = 0, ConflictZoneEntry = 1, ControlZoneEntry = 2 };

struct Event {
  double t;
  EventKind kind;
  int vehicle;
  std::size_t leg;

  bool operator>(const Event& o) const { return std::tie(t, kind, vehicle) > std::tie(o.t, o.kind, o.vehicle); }
};

class OptimalRun {
 public:
  OptimalRun(const CorridorSpec& corridor, std::vector<VehicleRecord>& vehicles, const SimulationOptions& options,
             ScenarioResult& result)
      : corridor_(corridor), vehicles_(vehicles), options_(options), result_(result), ledger_(corridor) {}

  void run() {
    for (const auto& v : vehicles_) events_.push({v.spawn_time, EventKind::ControlZoneEntry, v.id, 0});
    double clock = -std::numeric_limits<double>::infinity();
    while (!events_.empty()) {
      const Event e = events_.top();
      events_.pop();
      if (e.t < clock - 1e-9) throw std::logic_error("event times went backwards");
      clock = std::max(clock, e.t);
      switch (e.kind) {
        case EventKind::ControlZoneEntry:
          enter_control_zone(e);
          break;
        case EventKind::ConflictZoneEntry:
          break;
        case EventKind::ConflictZoneExit:
          ledger_.leave_conflict_zone(vehicles_[e.vehicle - 1].geometry.legs[e.leg].zone, e.vehicle);
          break;
      }
    }
    result_.schedule = ledger_.snapshot_all();
  }

 private:
  VehicleRecord& vehicle(int id) { return vehicles_[static_cast<std::size_t>(id - 1)]; }

  static const LegGeometry& leg_at(const VehicleRecord& v, const ZoneId& zone) {
    for (const auto& g : v.geometry.legs)
      if (g.zone == zone) return g;
    throw std::logic_error("vehicle " + std::to_string(v.id) + " does not cross zone '" + zone + "'");
  }

  // First time after `t_from` at which the trajectory (continued at its
  // terminal speed) reaches route position s.
  static double reach_time(const PiecewiseTrajectory& traj, double t_from, double s) {
    double lo = t_from;
    if (evaluate(traj, lo).p >= s) return lo;
    double hi = traj.t_end();
    const Stated end = evaluate(traj, hi);
    if (end.p < s) {
      if (!(end.v > 0)) return std::numeric_limits<double>::infinity();
      return hi + (s - end.p) / end.v;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
      const double mid = 0.5 * (lo + hi);
      (evaluate(traj, mid).p < s ? lo : hi) = mid;
    }
    return hi;
  }

  void enter_control_zone(const Event& e) {
    VehicleRecord& veh = vehicle(e.vehicle);
    const LegGeometry& leg = veh.geometry.legs[e.leg];
    const ConflictZoneSpec& zone = corridor_.zone(leg.zone);
    const double length = zone.approach(leg.approach).control_zone_length;
    const GlobalParams& params = corridor_.params;
    auto& route_traj = std::get<PiecewiseTrajectory>(veh.path);
    const double v_now = e.leg == 0 ? veh.spawn_speed : evaluate(route_traj, e.t).v;

    ledger_.enter_control_zone(leg.zone, veh.id);
    // The same-lane leader must be delta into the conflict zone before this
    // vehicle may enter it.
    double not_before = -std::numeric_limits<double>::infinity();
    if (const auto prev = ledger_.last_on_approach(leg.zone, leg.approach)) {
      const VehicleRecord& lead = vehicle(prev->vehicle_id);
      const LegGeometry& lead_leg = leg_at(lead, leg.zone);
      not_before = reach_time(std::get<PiecewiseTrajectory>(lead.path), prev->t_assigned,
                              lead_leg.conflict_entry + params.delta);
    }
    LedgerEntry entry;
    try {
      entry = ledger_.schedule_entry(veh.id, leg.zone, leg.approach, e.t, veh.spawn_speed, not_before);
    } catch (const InfeasibleScheduleError& err) {
      throw ScenarioAbort(veh.id, leg.zone, err.what());
    }

    BvpProblem problem;
    problem.t0 = e.t;
    problem.tf = entry.t_assigned;
    problem.v0 = v_now;
    problem.p0 = 0.0;
    problem.pf = length;
    if (entry.same_lane_predecessor) {
      const VehicleRecord& lead = vehicle(*entry.same_lane_predecessor);
      const auto& lead_traj = std::get<PiecewiseTrajectory>(lead.path);
      problem.leader = lead_traj.shifted(-leg_at(lead, leg.zone).control_entry);
      problem.delta = params.delta;
      const double gap = evaluate(problem.leader->extended_to(e.t), e.t).p;
      if (gap < params.delta - 1e-6) {
        std::ostringstream msg;
        msg << "vehicle " << veh.id << " enters the control zone of '" << leg.zone << "' only " << gap
            << " m behind vehicle " << lead.id << " (safe distance " << params.delta << " m)";
        throw ScenarioAbort(veh.id, leg.zone, msg.str());
      }
    }

    ConstrainedSolution solution;
    bool speed_capped = false;
    try {
      if (problem.leader) {
        solution = solve_constrained_detailed(problem, options_.solver);
        // The conflict zone (and the exit link, if the leader takes it too)
        // is crossed open loop at the terminal speed. Cap that speed so the
        // crossing keeps the safe distance, and, when both continue to the
        // same next control zone, so that this vehicle could still brake to
        // a stop at |u_min| behind the leader doing the same at the end of
        // its committed path.
        const VehicleRecord& lead = vehicle(*entry.same_lane_predecessor);
        const LegGeometry& lead_leg = leg_at(lead, leg.zone);
        double shared = zone.zone_length;
        std::optional<double> brake;
        if (lead_leg.exit_link == leg.exit_link) {
          shared += leg.link_end - leg.conflict_exit;
          if (e.leg + 1 < veh.geometry.legs.size()) brake = -params.u_min;
        }
        const double v_end = evaluate(solution.trajectory, problem.tf).v;
        const double v_safe =
            max_safe_cruise_speed(*problem.leader, params.delta, problem.tf, problem.pf, shared, v_end, brake);
        if (v_safe < v_end) {
          problem.vf = v_safe;
          solution = solve_constrained_detailed(problem, options_.solver);
          speed_capped = true;
        }
      } else {
        solution.trajectory = PiecewiseTrajectory({solve_unconstrained(problem)});
      }
    } catch (const SolverError& err) {
      throw ScenarioAbort(veh.id, leg.zone,
                          "vehicle " + std::to_string(veh.id) + " at zone '" + leg.zone + "': " + err.what());
    }

    for (const auto& b : check_bounds(solution.trajectory, params)) {
      std::ostringstream msg;
      msg << "vehicle " << veh.id << " zone " << leg.zone << ": " << to_string(b.kind) << " on [" << b.t_start
          << ", " << b.t_end << "] s, extreme " << b.extreme;
      result_.warnings.push_back(msg.str());
    }

    const double tf = problem.tf;
    const double v_zone = evaluate(solution.trajectory, tf).v;
    if (!(v_zone > 1e-9)) {
      std::ostringstream msg;
      msg << "vehicle " << veh.id << " would reach the conflict zone of '" << leg.zone << "' at speed " << v_zone;
      throw ScenarioAbort(veh.id, leg.zone, msg.str());
    }

    // Commit: control-zone arcs, then constant speed through the conflict
    // zone and along the exit link.
    const PiecewiseTrajectory placed = solution.trajectory.shifted(leg.control_entry);
    for (const auto& arc : placed.arcs()) route_traj.append(arc);
    const double t_exit = tf + zone.zone_length / v_zone;
    route_traj.append(cruise_arc(tf, t_exit, leg.conflict_entry, v_zone));
    double t_link_end = t_exit;
    const double link_length = leg.link_end - leg.conflict_exit;
    if (link_length > 0) {
      t_link_end = t_exit + link_length / v_zone;
      route_traj.append(cruise_arc(t_exit, t_link_end, leg.conflict_exit, v_zone));
    }

    ZoneVisit visit;
    visit.zone = leg.zone;
    visit.approach = leg.approach;
    visit.t_control_entry = e.t;
    visit.t_conflict_entry = tf;
    visit.t_conflict_exit = t_exit;
    visit.speed_in_zone = v_zone;
    visit.leader = entry.same_lane_predecessor;
    visit.contacts = solution.contacts.size();
    visit.speed_capped = speed_capped;
    visit.zone_effort = effort(solution.trajectory);
    veh.zones.push_back(visit);

    CommitRecord commit{veh.id, leg.zone, e.t, {}};
    if (entry.same_lane_predecessor) commit.depends_on.push_back(*entry.same_lane_predecessor);
    for (int d : entry.lateral_dependencies) commit.depends_on.push_back(d);
    for (int d : commit.depends_on)
      if (!committed_.count({d, leg.zone}))
        throw std::logic_error("vehicle " + std::to_string(veh.id) + " planned before its dependency " +
                               std::to_string(d));
    committed_.insert({veh.id, leg.zone});
    result_.commits.push_back(std::move(commit));

    events_.push({tf, EventKind::ConflictZoneEntry, veh.id, e.leg});
    events_.push({t_exit, EventKind::ConflictZoneExit, veh.id, e.leg});
    if (e.leg + 1 < veh.geometry.legs.size()) {
      events_.push({t_link_end, EventKind::ControlZoneEntry, veh.id, e.leg + 1});
    } else {
      veh.exit_time = t_link_end;
    }
  }

  const CorridorSpec& corridor_;
  std::vector<VehicleRecord>& vehicles_;
  const SimulationOptions& options_;
  ScenarioResult& result_;
  ScheduleLedger ledger_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::set<std::pair<int, ZoneId>> committed_;
};

}  // namespace

ScenarioResult run_scenario(const CorridorSpec& corridor, const std::map<RouteId, Route>& routes,
                            const std::vector<Arrival>& arrivals, Mode mode, const SimulationOptions& options) {
  std::vector<std::string> issues = corridor.validate();
  for (const auto& [id, route] : routes) {
    auto more = corridor.validate_route(route, "routes." + id);
    issues.insert(issues.end(), more.begin(), more.end());
  }
  if (issues.empty()) {
    auto more = validate_arrivals(corridor, routes, arrivals);
    issues.insert(issues.end(), more.begin(), more.end());
  }
  if (!issues.empty()) throw ConfigError(issues);

  ScenarioResult result;
  result.mode = mode;
  result.params = corridor.params;
  result.vehicles = detail::make_vehicles(corridor, routes, arrivals);
  if (mode == Mode::Optimal) {
    for (auto& v : result.vehicles) v.path = PiecewiseTrajectory({}, v.id);
    OptimalRun(corridor, result.vehicles, options, result).run();
  } else {
    detail::run_baseline(corridor, options, result);
  }
  compute_metrics(result, corridor, options);
  return result;
}

}  // namespace cavcoord
