#include "simulator_internal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace cavcoord {

int stop_and_go_index(const std::vector<double>& speeds) {
  int count = 0;
  bool slow = false;
  for (double v : speeds) {
    const bool now = v < 0.5;
    if (now && !slow) ++count;
    slow = now;
  }
  return count;
}

double trapezoid_effort(const std::vector<double>& controls, double dt) {
  if (controls.size() < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < controls.size(); ++k)
    sum += 0.5 * (controls[k] * controls[k] + controls[k + 1] * controls[k + 1]);
  return 0.5 * sum * dt;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Uniform samples over [t0, t1], both ends included.
std::vector<double> sample_times(double t0, double t1, double dt) {
  std::vector<double> out;
  const auto n = static_cast<long long>(std::ceil((t1 - t0) / dt - 1e-9));
  for (long long k = 0; k < n; ++k) out.push_back(t0 + static_cast<double>(k) * dt);
  out.push_back(t1);
  return out;
}

struct Occupancy {
  int vehicle;
  std::size_t segment;  ///< index in that vehicle's segment list
  double enter;
  double leave;
};

// Time at which the vehicle reaches route coordinate s (first crossing).
double crossing_time(const VehicleRecord& v, double s) {
  double lo = v.spawn_time;
  double hi = v.exit_time;
  if (vehicle_state(v, lo).p >= s) return lo;
  for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    (vehicle_state(v, mid).p < s ? lo : hi) = mid;
  }
  return hi;
}

// Minimum of p_k + offset - p_i - delta over [lo, hi].
double pair_margin(const VehicleRecord& follower, const VehicleRecord& leader, double offset, double delta,
                   double lo, double hi, double dt) {
  const auto* ft = std::get_if<PiecewiseTrajectory>(&follower.path);
  const auto* lt = std::get_if<PiecewiseTrajectory>(&leader.path);
  if (ft && lt) return min_rear_end_margin(*ft, lt->shifted(offset), delta, {lo, hi}).margin;
  double worst = kInf;
  for (double t : sample_times(lo, hi, dt))
    worst = std::min(worst, vehicle_state(leader, t).p + offset - vehicle_state(follower, t).p - delta);
  return worst;
}

}  // namespace

void compute_metrics(ScenarioResult& result, const CorridorSpec& corridor, const SimulationOptions& options) {
  const double dt = options.metric_dt;
  const double delta = corridor.params.delta;
  auto& vehicles = result.vehicles;
  result.metrics.clear();

  std::vector<std::vector<detail::Segment>> segments;
  for (const auto& v : vehicles) segments.push_back(detail::route_segments(v.geometry));

  for (const auto& v : vehicles) {
    VehicleMetrics m;
    m.id = v.id;
    m.route = v.route;
    m.travel_time = v.exit_time - v.spawn_time + v.entry_delay;
    std::vector<double> speeds;
    std::vector<double> controls;
    for (double t : sample_times(v.spawn_time, v.exit_time, dt)) {
      const Stated s = vehicle_state(v, t);
      speeds.push_back(s.v);
      controls.push_back(s.u);
    }
    m.stop_and_go = stop_and_go_index(speeds);
    if (const auto* traj = std::get_if<PiecewiseTrajectory>(&v.path)) {
      m.effort = effort(*traj);
    } else {
      // Integration samples are not uniform at spawn and exit; integrate the
      // trapezoid rule on the actual sample times.
      const auto& path = std::get<SampledPath>(v.path);
      double sum = 0.0;
      for (std::size_t k = 0; k + 1 < path.t.size(); ++k) {
        const double h = path.t[k + 1] - path.t[k];
        sum += 0.5 * h * (path.u[k] * path.u[k] + path.u[k + 1] * path.u[k + 1]);
      }
      m.effort = 0.5 * sum;
    }
    m.min_rear_end_margin = kInf;
    result.metrics.push_back(std::move(m));
  }

  // Same-lane following: consecutive vehicles on every lane segment, checked
  // while the leader stays on lane segments the follower also travels.
  std::map<std::string, std::vector<Occupancy>> lanes;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    for (std::size_t m = 0; m < segments[i].size(); ++m) {
      const auto& seg = segments[i][m];
      lanes[seg.key].push_back(
          {vehicles[i].id, m, crossing_time(vehicles[i], seg.start), crossing_time(vehicles[i], seg.end)});
    }
  }
  for (auto& [key, list] : lanes) {
    std::sort(list.begin(), list.end(),
              [](const Occupancy& a, const Occupancy& b) { return std::tie(a.enter, a.vehicle) < std::tie(b.enter, b.vehicle); });
    for (std::size_t n = 1; n < list.size(); ++n) {
      const Occupancy& lead = list[n - 1];
      const Occupancy& follow = list[n];
      const auto& ls = segments[static_cast<std::size_t>(lead.vehicle - 1)];
      const auto& fs = segments[static_cast<std::size_t>(follow.vehicle - 1)];
      // Leader time on the run of segments shared from here on.
      std::size_t a = lead.segment;
      std::size_t b = follow.segment;
      while (a + 1 < ls.size() && b + 1 < fs.size() && ls[a + 1].key == fs[b + 1].key) {
        ++a;
        ++b;
      }
      const VehicleRecord& lv = vehicles[static_cast<std::size_t>(lead.vehicle - 1)];
      const VehicleRecord& fv = vehicles[static_cast<std::size_t>(follow.vehicle - 1)];
      const double lo = follow.enter;
      const double hi = std::min(follow.leave, crossing_time(lv, ls[a].end));
      if (!(hi > lo)) continue;
      const double offset = fs[follow.segment].start - ls[lead.segment].start;
      const double margin = pair_margin(fv, lv, offset, delta, lo, hi, dt);
      auto& fm = result.metrics[static_cast<std::size_t>(follow.vehicle - 1)];
      fm.min_rear_end_margin = std::min(fm.min_rear_end_margin, margin);
    }
  }

  // Lateral headway between conflict-zone entries.
  for (const auto& zone : corridor.zones) {
    std::vector<std::pair<const VehicleRecord*, const ZoneVisit*>> visits;
    for (const auto& v : vehicles)
      for (const auto& z : v.zones)
        if (z.zone == zone.id) visits.emplace_back(&v, &z);
    for (const auto& [vi, zi] : visits) {
      double best = kInf;
      for (const auto& [vj, zj] : visits)
        if (vi != vj && zone.conflicts(zi->approach, zj->approach))
          best = std::min(best, std::abs(zi->t_conflict_entry - zj->t_conflict_entry));
      result.metrics[static_cast<std::size_t>(vi->id - 1)].min_lateral_headway[zone.id] = best;
    }
  }

  AggregateMetrics& agg = result.aggregate;
  agg = AggregateMetrics{};
  agg.vehicles = result.metrics.size();
  agg.min_rear_end_margin = kInf;
  agg.min_lateral_headway = kInf;
  for (const auto& m : result.metrics) {
    agg.mean_travel_time += m.travel_time;
    agg.total_effort += m.effort;
    agg.total_stop_and_go += m.stop_and_go;
    agg.min_rear_end_margin = std::min(agg.min_rear_end_margin, m.min_rear_end_margin);
    for (const auto& [zone, h] : m.min_lateral_headway) agg.min_lateral_headway = std::min(agg.min_lateral_headway, h);
  }
  if (agg.vehicles > 0) {
    const double n = static_cast<double>(agg.vehicles);
    agg.mean_travel_time /= n;
    agg.mean_effort = agg.total_effort / n;
    agg.mean_stop_and_go = agg.total_stop_and_go / n;
  }
}

}  // namespace cavcoord
