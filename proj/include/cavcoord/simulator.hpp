#pragma once

#include "cavcoord/corridor.hpp"
#include "cavcoord/scheduler.hpp"
#include "cavcoord/trajectory.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cavcoord {

enum class Mode { Optimal, Baseline };

const char* to_string(Mode mode);
Mode parse_mode(const std::string& text);  ///< throws DomainError

struct Arrival {
  double t = 0.0;  ///< spawn time at the first control-zone entry [s]
  double v = 0.0;  ///< spawn speed [m/s]
  RouteId route;
};

/// Car-following baseline (Intelligent Driver Model) with first-come
/// first-served permission to enter each conflict zone.
struct BaselineParams {
  double dt = 0.05;                ///< integration step [s]
  double max_acceleration = 1.5;   ///< IDM a [m/s^2]
  double comfortable_decel = 2.0;  ///< IDM b [m/s^2]
  double time_headway = 1.2;       ///< IDM T [s]
  double exponent = 4.0;
  double jam_margin = 1.0;         ///< jam distance is delta + jam_margin [m]
  double request_distance = 60.0;  ///< front vehicles ask for the zone within this range [m]
  double stop_margin = 1.0;        ///< ungranted vehicles stop this far before the zone [m]
  double lookahead = 250.0;        ///< leader search range [m]
};

struct SimulationOptions {
  SolverOptions solver;
  BaselineParams baseline;
  double metric_dt = 0.05;  ///< sampling step for effort / stop-and-go / margins [s]
};

/// Densely integrated baseline path: u is constant on [t[k], t[k+1]).
struct SampledPath {
  std::vector<double> t;
  std::vector<double> s;
  std::vector<double> v;
  std::vector<double> u;
};

/// Kinematic state along the route coordinate s.
Stated sample_path(const SampledPath& path, double t);

struct ZoneVisit {
  ZoneId zone;
  ApproachId approach;
  double t_control_entry = 0.0;
  double t_conflict_entry = 0.0;
  double t_conflict_exit = 0.0;
  double speed_in_zone = 0.0;        ///< terminal speed used across the conflict zone (optimal mode)
  std::optional<int> leader;         ///< same-lane predecessor used as the rear-end constraint
  std::size_t contacts = 0;          ///< constrained arcs / touches in the zone trajectory
  bool speed_capped = false;         ///< terminal speed pinned to keep the crossing behind the leader safe
  double zone_effort = 0.0;          ///< control-zone part of the effort (optimal mode)
};

struct VehicleRecord {
  int id = 0;
  std::size_t arrival_index = 0;
  RouteId route;
  double spawn_time = 0.0;
  double spawn_speed = 0.0;
  /// Baseline only: time the vehicle was held at the corridor entry because
  /// the queue reached back to it. spawn_time is then the release time.
  double entry_delay = 0.0;
  double exit_time = 0.0;
  RouteGeometry geometry;
  std::vector<ZoneVisit> zones;  ///< route order
  /// Optimal mode: committed trajectory in route coordinates. Baseline mode:
  /// integrated samples.
  std::variant<PiecewiseTrajectory, SampledPath> path;
};

/// (s, v, u) of a vehicle at time t, clamped to its lifetime.
Stated vehicle_state(const VehicleRecord& vehicle, double t);

struct CommitRecord {
  int vehicle_id = 0;
  ZoneId zone;
  double t_commit = 0.0;
  std::vector<int> depends_on;  ///< same-lane leader and conflicting vehicles already scheduled
};

struct VehicleMetrics {
  int id = 0;
  RouteId route;
  double travel_time = 0.0;
  double effort = 0.0;
  int stop_and_go = 0;
  /// Smallest p_k - p_i - delta against any vehicle ahead on the same lane
  /// (infinite when the vehicle never follows anyone).
  double min_rear_end_margin = 0.0;
  std::map<ZoneId, double> min_lateral_headway;  ///< infinite when no conflicting vehicle
};

struct AggregateMetrics {
  std::size_t vehicles = 0;
  double mean_travel_time = 0.0;
  double mean_effort = 0.0;
  double total_effort = 0.0;
  double mean_stop_and_go = 0.0;
  int total_stop_and_go = 0;
  double min_rear_end_margin = 0.0;
  double min_lateral_headway = 0.0;
};

struct ScenarioResult {
  Mode mode = Mode::Optimal;
  GlobalParams params;
  std::vector<VehicleRecord> vehicles;  ///< by id
  std::vector<ZoneLedgerSnapshot> schedule;
  std::vector<CommitRecord> commits;
  std::vector<std::string> warnings;
  std::vector<VehicleMetrics> metrics;
  AggregateMetrics aggregate;
};

/// Runs a scenario. Vehicle ids are 1 + the index of the arrival in
/// (t, route, v) order. Throws ConfigError when the arrivals violate the spawn
/// assumptions and ScenarioAbort when scheduling or trajectory planning fails.
ScenarioResult run_scenario(const CorridorSpec& corridor, const std::map<RouteId, Route>& routes,
                            const std::vector<Arrival>& arrivals, Mode mode, const SimulationOptions& options = {});

/// Checks arrivals against the corridor: known routes, speeds within bounds,
/// and same-approach spawns at least delta apart at their spawn speeds.
std::vector<std::string> validate_arrivals(const CorridorSpec& corridor, const std::map<RouteId, Route>& routes,
                                           const std::vector<Arrival>& arrivals);

// Baseline building blocks.

/// IDM acceleration for speed v, desired speed v0, gap s to the leader and
/// closing speed dv = v - v_leader. A missing leader is an infinite gap.
double idm_acceleration(const BaselineParams& p, double jam_distance, double v, double v0,
                        std::optional<double> gap, double dv);

/// Gap at which a follower in steady state at speed v has zero acceleration
/// behind a leader at the same speed, with v strictly below v0.
double idm_equilibrium_gap(const BaselineParams& p, double jam_distance, double v, double v0);

struct BaselineVehicle {
  double s = 0.0;
  double v = 0.0;
  double v_desired = 0.0;
  std::optional<double> gap;  ///< to the leader or the stop line, after subtracting nothing
  double leader_speed = 0.0;
  double jam_distance = 0.0;
};

/// Control chosen for one step of dt, clamped to [u_min, u_max] and so that
/// the speed does not turn negative within the step.
double baseline_control(const BaselineParams& p, const GlobalParams& limits, const BaselineVehicle& vehicle,
                        double dt);

/// Advances (s, v) by dt under constant control u.
void baseline_step(BaselineVehicle& vehicle, double u, double dt);

/// Metrics from complete vehicle records.
void compute_metrics(ScenarioResult& result, const CorridorSpec& corridor, const SimulationOptions& options = {});

/// Time-sampled stop-and-go index: maximal runs with v below 0.5 m/s.
int stop_and_go_index(const std::vector<double>& speeds);

/// Trapezoidal 1/2 integral of u^2 over uniformly spaced samples.
double trapezoid_effort(const std::vector<double>& controls, double dt);

}  // namespace cavcoord
