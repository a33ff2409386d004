#include "cavcoord/errors.hpp"
#include "cavcoord/polynomial.hpp"
#include "simulator_internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

namespace cavcoord {

double idm_acceleration(const BaselineParams& p, double jam_distance, double v, double v0, std::optional<double> gap,
                        double dv) {
  double a = p.max_acceleration * (1.0 - std::pow(std::max(v, 0.0) / v0, p.exponent));
  if (gap) {
    if (*gap <= 1e-6) return -std::numeric_limits<double>::infinity();
    const double dynamic = v * p.time_headway + v * dv / (2.0 * std::sqrt(p.max_acceleration * p.comfortable_decel));
    const double desired = jam_distance + std::max(0.0, dynamic);
    a -= p.max_acceleration * (desired / *gap) * (desired / *gap);
  }
  return a;
}

double idm_equilibrium_gap(const BaselineParams& p, double jam_distance, double v, double v0) {
  return (jam_distance + v * p.time_headway) / std::sqrt(1.0 - std::pow(v / v0, p.exponent));
}

double baseline_control(const BaselineParams& p, const GlobalParams& limits, const BaselineVehicle& vehicle,
                        double dt) {
  double u = idm_acceleration(p, vehicle.jam_distance, vehicle.v, vehicle.v_desired, vehicle.gap,
                              vehicle.v - vehicle.leader_speed);
  u = std::clamp(u, limits.u_min, limits.u_max);
  if (vehicle.v + u * dt < 0) u = -vehicle.v / dt;
  return u;
}

void baseline_step(BaselineVehicle& vehicle, double u, double dt) {
  vehicle.s += vehicle.v * dt + 0.5 * u * dt * dt;
  vehicle.v = std::max(0.0, vehicle.v + u * dt);
}

namespace detail {

std::vector<Segment> route_segments(const RouteGeometry& geometry) {
  std::vector<Segment> out;
  for (std::size_t j = 0; j < geometry.legs.size(); ++j) {
    const LegGeometry& g = geometry.legs[j];
    out.push_back({"control:" + g.zone + ":" + g.approach, g.control_entry, g.conflict_entry, j,
                   Segment::Kind::Control});
    out.push_back({"conflict:" + g.zone + ":" + g.approach, g.conflict_entry, g.conflict_exit, j,
                   Segment::Kind::Conflict});
    if (g.link_end > g.conflict_exit)
      out.push_back({"link:" + g.exit_link, g.conflict_exit, g.link_end, j, Segment::Kind::Link});
  }
  return out;
}

namespace {

// Shortest time to cover d from speed v accelerating at a up to v_max.
double min_time_to(double d, double v, double a, double v_max) {
  if (d <= 0) return 0.0;
  if (v >= v_max) return d / v;
  const double t_acc = (v_max - v) / a;
  const double d_acc = v * t_acc + 0.5 * a * t_acc * t_acc;
  if (d <= d_acc) return (-v + std::sqrt(v * v + 2 * a * d)) / a;
  return t_acc + (d - d_acc) / v_max;
}

struct Agent {
  VehicleRecord* rec = nullptr;
  std::vector<detail::Segment> segments;
  std::vector<int> keys;  ///< interned segment keys
  std::size_t seg = 0;
  double s = 0.0;
  double v = 0.0;
  bool active = false;
  bool done = false;
  bool held = false;  ///< waiting off the corridor for room at its entry
  std::vector<char> requested;
  std::vector<char> granted;
  SampledPath path;
};

struct Request {
  double t;
  int vehicle;
  std::size_t leg;
  ApproachId approach;
};

struct ZoneTraffic {
  std::vector<Request> pending;  ///< first come, first served
  std::vector<std::pair<ApproachId, int>> granted_waiting;
  std::vector<std::pair<ApproachId, double>> entries;
};

class BaselineRun {
 public:
  BaselineRun(const CorridorSpec& corridor, const SimulationOptions& options, ScenarioResult& result)
      : corridor_(corridor), p_(options.baseline), limits_(corridor.params), result_(result) {
    for (auto& rec : result.vehicles) {
      Agent a;
      a.rec = &rec;
      a.segments = route_segments(rec.geometry);
      for (const auto& s : a.segments) a.keys.push_back(intern(s.key));
      a.requested.assign(rec.geometry.legs.size(), 0);
      a.granted.assign(rec.geometry.legs.size(), 0);
      agents_.push_back(std::move(a));
    }
    for (const auto& z : corridor.zones) zones_[z.id];
  }

  void run() {
    if (agents_.empty()) return;
    const double dt = p_.dt;
    double last_spawn = 0;
    for (const auto& a : agents_) last_spawn = std::max(last_spawn, a.rec->spawn_time);
    const double first_spawn = agents_.front().rec->spawn_time;
    long long k = static_cast<long long>(std::ceil(first_spawn / dt - 1e-9));
    std::size_t remaining = agents_.size();
    while (remaining > 0) {
      const double t = static_cast<double>(k) * dt;
      if (t > last_spawn + 3600.0) {
        for (const auto& a : agents_)
          if (!a.done) throw ScenarioAbort(a.rec->id, a.rec->geometry.legs[a.segments[a.seg].leg].zone,
                                           "baseline: vehicle " + std::to_string(a.rec->id) + " is stuck");
      }
      spawn(t);
      request(t);
      grant(t);
      std::vector<double> controls(agents_.size(), 0.0);
      build_occupancy();
      for (std::size_t i = 0; i < agents_.size(); ++i)
        if (agents_[i].active && !agents_[i].done) controls[i] = control(agents_[i]);
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        Agent& a = agents_[i];
        if (!a.active || a.done) continue;
        a.path.t.push_back(t);
        a.path.s.push_back(a.s);
        a.path.v.push_back(a.v);
        a.path.u.push_back(controls[i]);
        advance(a, t, controls[i], dt);
        if (a.done) --remaining;
      }
      ++k;
    }
  }

 private:
  int intern(const std::string& key) {
    auto [it, inserted] = key_ids_.emplace(key, static_cast<int>(key_ids_.size()));
    return it->second;
  }

  // Spawns due vehicles. A vehicle whose entry is still occupied by the
  // queue waits off the corridor, in id order per entry.
  void spawn(double t) {
    std::vector<int> blocked;
    for (auto& a : agents_) {
      if (a.active || a.rec->spawn_time > t + 1e-12) continue;
      const int key = a.keys.front();
      if (std::find(blocked.begin(), blocked.end(), key) != blocked.end()) {
        a.held = true;
        continue;
      }
      const double nominal = a.rec->spawn_time;
      const bool late = a.held;
      const double s0 = late ? 0.0 : a.rec->spawn_speed * (t - nominal);
      const auto speed = entry_speed(a, key, s0);
      if (!speed) {
        blocked.push_back(key);
        a.held = true;
        continue;
      }
      a.active = true;
      a.v = *speed;
      a.s = s0;
      if (late) {
        a.rec->entry_delay = t - nominal;
        a.rec->spawn_time = t;
        std::ostringstream msg;
        msg << "baseline: vehicle " << a.rec->id << " held " << a.rec->entry_delay
            << " s at the corridor entry behind the queue";
        result_.warnings.push_back(msg.str());
      }
      const LegGeometry& g = a.rec->geometry.legs.front();
      ZoneVisit visit;
      visit.zone = g.zone;
      visit.approach = g.approach;
      visit.t_control_entry = a.rec->spawn_time;
      a.rec->zones.push_back(visit);
      if (!late && t > nominal) {
        // Cruise from the spawn instant to the first grid point.
        a.path.t.push_back(nominal);
        a.path.s.push_back(0.0);
        a.path.v.push_back(a.v);
        a.path.u.push_back(0.0);
      }
    }
  }

  // Speed at which the vehicle can enter at s0 behind the last vehicle on its
  // first segment: its spawn speed with a full IDM gap, the leader's speed
  // when the gap still covers the jam distance and one step of travel,
  // otherwise none.
  std::optional<double> entry_speed(const Agent& a, int key, double s0) const {
    double gap = std::numeric_limits<double>::infinity();
    double lead_v = 0.0;
    for (const auto& b : agents_) {
      if (!b.active || b.done || b.keys[b.seg] != key) continue;
      const double d = b.s - b.segments[b.seg].start - s0;
      if (d < gap) {
        gap = d;
        lead_v = b.v;
      }
    }
    const double v = a.rec->spawn_speed;
    if (!std::isfinite(gap)) return v;
    const double jam = limits_.delta + p_.jam_margin;
    const double closing = v * (v - lead_v) / (2.0 * std::sqrt(p_.max_acceleration * p_.comfortable_decel));
    if (gap >= jam + v * p_.time_headway + std::max(0.0, closing)) return v;
    const double slow = std::min(v, lead_v);
    if (gap >= jam + slow * p_.dt) return slow;
    return std::nullopt;
  }

  void request(double t) {
    for (auto& a : agents_) {
      if (!a.active || a.done) continue;
      const auto& seg = a.segments[a.seg];
      if (seg.kind != Segment::Kind::Control || a.requested[seg.leg]) continue;
      if (seg.end - a.s > p_.request_distance) continue;
      a.requested[seg.leg] = 1;
      const LegGeometry& g = a.rec->geometry.legs[seg.leg];
      zones_[g.zone].pending.push_back({t, a.rec->id, seg.leg, g.approach});
    }
  }

  void grant(double t) {
    for (const auto& zone : corridor_.zones) {
      ZoneTraffic& traffic = zones_[zone.id];
      std::vector<Request> still;
      for (const Request& r : traffic.pending) {
        bool blocked = false;
        for (const Request& earlier : still)
          if (zone.conflicts(earlier.approach, r.approach)) blocked = true;
        for (const auto& [approach, id] : traffic.granted_waiting)
          if (zone.conflicts(approach, r.approach)) blocked = true;
        double last = -std::numeric_limits<double>::infinity();
        for (const auto& [approach, time] : traffic.entries)
          if (zone.conflicts(approach, r.approach)) last = std::max(last, time);
        Agent& a = agents_[static_cast<std::size_t>(r.vehicle - 1)];
        const double distance = a.rec->geometry.legs[r.leg].conflict_entry - a.s;
        const double eta = t + min_time_to(distance, a.v, limits_.u_max, limits_.v_max);
        if (!blocked && eta >= last + limits_.rho - 1e-9) {
          a.granted[r.leg] = 1;
          traffic.granted_waiting.emplace_back(r.approach, r.vehicle);
        } else {
          still.push_back(r);
        }
      }
      traffic.pending = std::move(still);
    }
  }

  // Per segment key: (local position, speed, vehicle id) of vehicles on it.
  void build_occupancy() {
    occupancy_.assign(key_ids_.size(), {});
    for (const auto& a : agents_) {
      if (!a.active || a.done) continue;
      occupancy_[a.keys[a.seg]].push_back({a.s - a.segments[a.seg].start, a.v, a.rec->id});
    }
  }

  double control(const Agent& a) {
    BaselineVehicle bv;
    bv.s = a.s;
    bv.v = a.v;
    bv.v_desired = a.rec->spawn_speed;
    bv.jam_distance = limits_.delta + p_.jam_margin;
    // Nearest vehicle ahead on this lane, looking into later segments of the route.
    double best = std::numeric_limits<double>::infinity();
    double best_speed = 0.0;
    for (std::size_t m = a.seg; m < a.segments.size(); ++m) {
      const double offset = a.segments[m].start;
      if (offset - a.s > p_.lookahead) break;
      for (const auto& [local, speed, id] : occupancy_[a.keys[m]]) {
        if (id == a.rec->id) continue;
        const double gap = local + offset - a.s;
        if (gap < 0 || (gap == 0 && id > a.rec->id)) continue;
        if (gap < best) {
          best = gap;
          best_speed = speed;
        }
      }
      if (std::isfinite(best)) break;
    }
    if (std::isfinite(best) && best <= p_.lookahead) {
      bv.gap = best;
      bv.leader_speed = best_speed;
    }
    double u = baseline_control(p_, limits_, bv, p_.dt);
    const auto& seg = a.segments[a.seg];
    if (seg.kind == Segment::Kind::Control && !a.granted[seg.leg]) {
      BaselineVehicle stop = bv;
      stop.gap = seg.end - a.s;
      stop.leader_speed = 0.0;
      stop.jam_distance = p_.stop_margin;
      u = std::min(u, baseline_control(p_, limits_, stop, p_.dt));
    }
    return u;
  }

  void advance(Agent& a, double t, double u, double dt) {
    const double s0 = a.s;
    const double v0 = a.v;
    BaselineVehicle bv;
    bv.s = a.s;
    bv.v = a.v;
    baseline_step(bv, u, dt);
    a.s = bv.s;
    a.v = bv.v;
    auto crossing = [&](double boundary) {
      auto f = [&](double tau) { return s0 + v0 * tau + 0.5 * u * tau * tau - boundary; };
      return t + bisect(f, 0.0, dt, f(0.0));
    };
    auto& legs = a.rec->geometry.legs;
    auto& visits = a.rec->zones;
    for (std::size_t j = 0; j < legs.size(); ++j) {
      const LegGeometry& g = legs[j];
      if (j > 0 && s0 < g.control_entry && a.s >= g.control_entry) {
        ZoneVisit visit;
        visit.zone = g.zone;
        visit.approach = g.approach;
        visit.t_control_entry = crossing(g.control_entry);
        visits.push_back(visit);
      }
      if (s0 < g.conflict_entry && a.s >= g.conflict_entry) {
        const double tc = crossing(g.conflict_entry);
        visits[j].t_conflict_entry = tc;
        visits[j].speed_in_zone = v0 + u * (tc - t);
        ZoneTraffic& traffic = zones_[g.zone];
        traffic.entries.emplace_back(g.approach, tc);
        auto& waiting = traffic.granted_waiting;
        waiting.erase(std::remove_if(waiting.begin(), waiting.end(),
                                     [&](const auto& w) { return w.second == a.rec->id; }),
                      waiting.end());
        if (!a.granted[j]) {
          std::ostringstream msg;
          msg << "baseline: vehicle " << a.rec->id << " entered zone " << g.zone << " without permission at " << tc
              << " s";
          result_.warnings.push_back(msg.str());
          // Drop its pending request so it cannot be granted afterwards.
          auto& pending = traffic.pending;
          pending.erase(std::remove_if(pending.begin(), pending.end(),
                                       [&](const Request& r) { return r.vehicle == a.rec->id; }),
                        pending.end());
          a.granted[j] = 1;
        }
      }
      if (s0 < g.conflict_exit && a.s >= g.conflict_exit) visits[j].t_conflict_exit = crossing(g.conflict_exit);
    }
    const double length = a.rec->geometry.length;
    if (a.s >= length) {
      const double te = crossing(length);
      a.rec->exit_time = te;
      a.path.t.push_back(te);
      a.path.s.push_back(length);
      a.path.v.push_back(v0 + u * (te - t));
      a.path.u.push_back(u);
      a.done = true;
      a.rec->path = std::move(a.path);
      return;
    }
    while (a.seg + 1 < a.segments.size() && a.s >= a.segments[a.seg].end) ++a.seg;
  }

  struct Occupant {
    double local;
    double speed;
    int id;
  };

  const CorridorSpec& corridor_;
  const BaselineParams& p_;
  const GlobalParams& limits_;
  ScenarioResult& result_;
  std::vector<Agent> agents_;
  std::unordered_map<std::string, int> key_ids_;
  std::vector<std::vector<Occupant>> occupancy_;
  std::map<ZoneId, ZoneTraffic> zones_;
};

}  // namespace

void run_baseline(const CorridorSpec& corridor, const SimulationOptions& options, ScenarioResult& result) {
  if (!(options.baseline.dt > 0)) throw DomainError("baseline: dt must be positive");
  BaselineRun(corridor, options, result).run();
}

}  // namespace detail

}  // namespace cavcoord
