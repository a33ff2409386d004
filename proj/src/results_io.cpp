#include "cavcoord/results_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cavcoord {

namespace {

using Json = nlohmann::ordered_json;

constexpr const char* kUnitsComment =
    "# units: SI (t [s], s_along_route [m], v [m/s], u [m/s^2]); s is measured from the vehicle's corridor entry";

std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  std::string out(buf);
  if (out == "-0.000000") out = "0.000000";
  return out;
}

// Infinite margins / headways (nothing to compare against) become null.
Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json units() {
  return Json{{"time", "s"},         {"distance", "m"},        {"speed", "m/s"},
              {"control", "m/s^2"},  {"effort", "m^2/s^3"},   {"headway", "s"}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string zone_phase(const RouteGeometry& geometry, double s) {
  for (const auto& leg : geometry.legs) {
    if (s < leg.conflict_entry) return "control:" + leg.zone;
    if (s < leg.conflict_exit) return "conflict:" + leg.zone;
    if (s < leg.link_end) return "link:" + leg.exit_link;
  }
  return geometry.legs.empty() ? std::string{} : "link:" + geometry.legs.back().exit_link;
}

std::vector<TrajectorySample> sample_trajectories(const ScenarioResult& result, double dt) {
  std::vector<TrajectorySample> rows;
  for (const auto& v : result.vehicles) {
    std::vector<double> times{v.spawn_time};
    for (auto k = static_cast<long long>(std::floor(v.spawn_time / dt)) + 1;; ++k) {
      const double t = static_cast<double>(k) * dt;
      if (t >= v.exit_time) break;
      if (t > v.spawn_time) times.push_back(t);
    }
    if (v.exit_time > v.spawn_time) times.push_back(v.exit_time);
    for (double t : times) {
      const Stated st = vehicle_state(v, t);
      rows.push_back({v.id, t, st.p, st.v, st.u, zone_phase(v.geometry, st.p)});
    }
  }
  return rows;
}

std::string trajectories_csv(const ScenarioResult& result, double dt) {
  std::ostringstream out;
  out << kUnitsComment << '\n';
  out << "vehicle_id,t,s_along_route,v,u,zone_phase\n";
  for (const auto& r : sample_trajectories(result, dt))
    out << r.vehicle_id << ',' << fixed6(r.t) << ',' << fixed6(r.s) << ',' << fixed6(r.v) << ',' << fixed6(r.u) << ','
        << r.zone_phase << '\n';
  return out.str();
}

std::string metrics_json(const ScenarioResult& result) {
  const AggregateMetrics& a = result.aggregate;
  Json j;
  j["units"] = units();
  j["mode"] = to_string(result.mode);
  j["aggregate"] = Json{{"vehicles", a.vehicles},
                        {"mean_travel_time", a.mean_travel_time},
                        {"mean_effort", a.mean_effort},
                        {"total_effort", a.total_effort},
                        {"mean_stop_and_go", a.mean_stop_and_go},
                        {"total_stop_and_go", a.total_stop_and_go},
                        {"min_rear_end_margin", finite_or_null(a.min_rear_end_margin)},
                        {"min_lateral_headway", finite_or_null(a.min_lateral_headway)}};
  Json vehicles = Json::array();
  for (const auto& m : result.metrics) {
    Json lateral = Json::object();
    for (const auto& [zone, h] : m.min_lateral_headway) lateral[zone] = finite_or_null(h);
    const VehicleRecord& v = result.vehicles[static_cast<std::size_t>(m.id - 1)];
    vehicles.push_back(Json{{"id", m.id},
                            {"route", m.route},
                            {"spawn_time", v.spawn_time},
                            {"entry_delay", v.entry_delay},
                            {"exit_time", v.exit_time},
                            {"travel_time", m.travel_time},
                            {"effort", m.effort},
                            {"stop_and_go", m.stop_and_go},
                            {"min_rear_end_margin", finite_or_null(m.min_rear_end_margin)},
                            {"min_lateral_headway", lateral}});
  }
  j["vehicles"] = vehicles;
  j["warnings"] = result.warnings;
  return dump(j);
}

std::string schedule_json(const ScenarioResult& result) {
  Json j;
  j["units"] = units();
  j["mode"] = to_string(result.mode);
  Json zones = Json::array();
  if (result.mode == Mode::Optimal) {
    for (const auto& snap : result.schedule) {
      Json entries = Json::array();
      for (const auto& e : snap.entries) {
        Json deps = Json::array();
        for (int d : e.lateral_dependencies) deps.push_back(d);
        entries.push_back(Json{{"vehicle_id", e.vehicle_id},
                               {"approach", e.approach},
                               {"t_control_entry", e.t_control_entry},
                               {"t_min", e.t_min},
                               {"t_max", e.t_max},
                               {"t_candidate", e.t_candidate},
                               {"t_assigned", e.t_assigned},
                               {"case", to_string(e.which)},
                               {"same_lane_predecessor",
                                e.same_lane_predecessor ? Json(*e.same_lane_predecessor) : Json(nullptr)},
                               {"lateral_dependencies", deps}});
      }
      zones.push_back(Json{{"zone", snap.zone}, {"entries", entries}});
    }
  } else {
    // No ledger in the baseline: record the realised conflict-zone entries
    // per zone in entry order.
    std::map<ZoneId, std::vector<std::pair<double, Json>>> by_zone;
    for (const auto& v : result.vehicles)
      for (const auto& z : v.zones)
        by_zone[z.zone].push_back({z.t_conflict_entry, Json{{"vehicle_id", v.id},
                                                            {"approach", z.approach},
                                                            {"t_control_entry", z.t_control_entry},
                                                            {"t_conflict_entry", z.t_conflict_entry},
                                                            {"t_conflict_exit", z.t_conflict_exit}}});
    for (auto& [zone, list] : by_zone) {
      std::stable_sort(list.begin(), list.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      Json entries = Json::array();
      for (auto& [t, e] : list) entries.push_back(std::move(e));
      zones.push_back(Json{{"zone", zone}, {"entries", entries}});
    }
  }
  j["zones"] = zones;
  return dump(j);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error(path + ": write failed");
}

void write_results(const ScenarioResult& result, const std::string& dir, double sample_dt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error(dir + ": cannot create directory: " + ec.message());
  const std::filesystem::path base(dir);
  write_file((base / "trajectories.csv").string(), trajectories_csv(result, sample_dt));
  write_file((base / "metrics.json").string(), metrics_json(result));
  write_file((base / "schedule.json").string(), schedule_json(result));
}

std::vector<TrajectorySample> read_trajectories_csv(const std::string& text) {
  std::vector<TrajectorySample> rows;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::istringstream fields(line);
    std::string cell[6];
    for (auto& c : cell) std::getline(fields, c, ',');
    rows.push_back({std::stoi(cell[0]), std::stod(cell[1]), std::stod(cell[2]), std::stod(cell[3]),
                    std::stod(cell[4]), cell[5]});
  }
  return rows;
}

Comparison compare_results(const ScenarioResult& optimal, const ScenarioResult& baseline) {
  return {baseline.aggregate.mean_travel_time, optimal.aggregate.mean_travel_time,
          baseline.aggregate.mean_effort,      optimal.aggregate.mean_effort,
          baseline.aggregate.mean_stop_and_go, optimal.aggregate.mean_stop_and_go};
}

namespace {

Json change(double base, double opt) {
  return base != 0 ? Json(100.0 * (opt - base) / base) : Json(nullptr);
}

}  // namespace

std::string comparison_json(const Comparison& c) {
  Json j;
  j["units"] = units();
  j["mean_travel_time"] = Json{{"baseline", c.travel_time_baseline},
                               {"optimal", c.travel_time_optimal},
                               {"change_percent", change(c.travel_time_baseline, c.travel_time_optimal)}};
  j["mean_effort"] = Json{{"baseline", c.effort_baseline},
                          {"optimal", c.effort_optimal},
                          {"change_percent", change(c.effort_baseline, c.effort_optimal)}};
  j["mean_stop_and_go"] = Json{{"baseline", c.stop_and_go_baseline},
                               {"optimal", c.stop_and_go_optimal},
                               {"change_percent", change(c.stop_and_go_baseline, c.stop_and_go_optimal)}};
  return dump(j);
}

std::string comparison_report(const Comparison& c) {
  std::ostringstream out;
  auto line = [&](const char* name, const char* unit, double base, double opt) {
    char buf[160];
    if (base != 0)
      std::snprintf(buf, sizeof buf, "%-18s baseline %12.4f  optimal %12.4f  %+8.2f %%  [%s]\n", name, base, opt,
                    100.0 * (opt - base) / base, unit);
    else
      std::snprintf(buf, sizeof buf, "%-18s baseline %12.4f  optimal %12.4f       n/a    [%s]\n", name, base, opt,
                    unit);
    out << buf;
  };
  line("mean travel time", "s", c.travel_time_baseline, c.travel_time_optimal);
  line("mean effort", "m^2/s^3", c.effort_baseline, c.effort_optimal);
  line("mean stop-and-go", "count", c.stop_and_go_baseline, c.stop_and_go_optimal);
  return out.str();
}

}  // namespace cavcoord
