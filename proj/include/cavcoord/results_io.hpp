#pragma once

#include "cavcoord/simulator.hpp"

#include <map>
#include <string>
#include <vector>

namespace cavcoord {

/// One row of trajectories.csv.
struct TrajectorySample {
  int vehicle_id = 0;
  double t = 0.0;
  double s = 0.0;
  double v = 0.0;
  double u = 0.0;
  std::string zone_phase;
};

/// Where along its route a vehicle is: "control:<zone>", "conflict:<zone>"
/// or "link:<link>".
std::string zone_phase(const RouteGeometry& geometry, double s);

/// Samples on the global grid k * dt inside each vehicle's lifetime, plus
/// the spawn and exit instants. Vehicles in id order.
std::vector<TrajectorySample> sample_trajectories(const ScenarioResult& result, double dt);

std::string trajectories_csv(const ScenarioResult& result, double dt);
std::string metrics_json(const ScenarioResult& result);
std::string schedule_json(const ScenarioResult& result);

/// Writes trajectories.csv, metrics.json and schedule.json into `dir`
/// (created if missing). Throws std::runtime_error naming the path on I/O
/// failure.
void write_results(const ScenarioResult& result, const std::string& dir, double sample_dt);

/// Parses trajectories.csv text back into rows (comment lines skipped).
std::vector<TrajectorySample> read_trajectories_csv(const std::string& text);

/// Percent change from baseline to optimal for the headline metrics.
struct Comparison {
  double travel_time_baseline = 0.0;
  double travel_time_optimal = 0.0;
  double effort_baseline = 0.0;
  double effort_optimal = 0.0;
  double stop_and_go_baseline = 0.0;
  double stop_and_go_optimal = 0.0;
};

Comparison compare_results(const ScenarioResult& optimal, const ScenarioResult& baseline);
std::string comparison_json(const Comparison& c);
std::string comparison_report(const Comparison& c);

/// Reads a whole file; throws std::runtime_error naming the path on failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace cavcoord
