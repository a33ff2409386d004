#include "cavcoord/config.hpp"

#include "cavcoord/errors.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace cavcoord {

namespace {

std::string line_of(const YAML::Mark& mark) {
  if (mark.is_null()) return {};
  return " (line " + std::to_string(mark.line + 1) + ")";
}

// Collects every problem with its field path instead of stopping at the
// first one, and remembers where each field was written.
class Reader {
 public:
  std::vector<std::string> issues;

  void error(const std::string& path, const YAML::Node& node, const std::string& msg) {
    issues.push_back(path + ": " + msg + (node.IsDefined() ? line_of(node.Mark()) : std::string{}));
  }

  void remember(const std::string& path, const YAML::Node& node) {
    if (node.IsDefined()) marks_[path] = node.Mark();
  }

  /// Appends the line of the longest remembered field path that prefixes
  /// the issue.
  std::string annotate(const std::string& issue) const {
    std::size_t best = 0;
    const YAML::Mark* mark = nullptr;
    for (const auto& [path, m] : marks_) {
      if (path.size() <= best || issue.compare(0, path.size(), path) != 0) continue;
      if (issue.size() > path.size()) {
        const char next = issue[path.size()];
        if (next != ':' && next != '.' && next != '[') continue;
      }
      best = path.size();
      mark = &m;
    }
    return mark ? issue + line_of(*mark) : issue;
  }

  bool is_map(const YAML::Node& node, const std::string& path) {
    if (node.IsMap()) return true;
    error(path, node, "expected a mapping");
    return false;
  }

  bool is_list(const YAML::Node& node, const std::string& path) {
    if (node.IsSequence()) return true;
    error(path, node, "expected a list");
    return false;
  }

  void known_keys(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> keys) {
    if (!node.IsMap()) return;
    for (const auto& kv : node) {
      const std::string key = kv.first.Scalar();
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        error(path + "." + key, kv.first, "unknown field");
    }
  }

  template <typename T>
  void read(const YAML::Node& parent, const char* key, const std::string& path, T& out, bool required = false) {
    const std::string field = path.empty() ? key : path + "." + key;
    const YAML::Node node = parent[key];
    if (!node.IsDefined() || node.IsNull()) {
      if (required) error(field, parent, "missing required field");
      return;
    }
    remember(field, node);
    if (!node.IsScalar()) {
      error(field, node, "expected a scalar value");
      return;
    }
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      error(field, node, std::is_same_v<T, std::string> ? "expected text" : "expected a number");
    }
  }

  template <typename T>
  void read(const YAML::Node& parent, const char* key, const std::string& path, std::optional<T>& out) {
    if (!parent[key].IsDefined() || parent[key].IsNull()) return;
    T value{};
    read(parent, key, path, value);
    out = value;
  }

 private:
  std::map<std::string, YAML::Mark> marks_;
};

GlobalParams read_params(Reader& r, const YAML::Node& node) {
  GlobalParams p;
  if (!node.IsDefined()) return p;
  if (!r.is_map(node, "params")) return p;
  r.known_keys(node, "params", {"rho", "delta", "v_min", "v_max", "u_min", "u_max", "horizon_cap"});
  r.read(node, "rho", "params", p.rho);
  r.read(node, "delta", "params", p.delta);
  r.read(node, "v_min", "params", p.v_min);
  r.read(node, "v_max", "params", p.v_max);
  r.read(node, "u_min", "params", p.u_min);
  r.read(node, "u_max", "params", p.u_max);
  r.read(node, "horizon_cap", "params", p.horizon_cap);
  return p;
}

std::vector<ConflictZoneSpec> read_zones(Reader& r, const YAML::Node& node) {
  std::vector<ConflictZoneSpec> zones;
  if (!node.IsDefined()) {
    r.issues.push_back("zones: missing required section");
    return zones;
  }
  if (!r.is_list(node, "zones")) return zones;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string path = "zones[" + std::to_string(i) + "]";
    const YAML::Node z = node[i];
    r.remember(path, z);
    ConflictZoneSpec zone;
    if (r.is_map(z, path)) {
      r.known_keys(z, path, {"id", "length", "approaches", "conflict_pairs"});
      r.read(z, "id", path, zone.id, true);
      r.read(z, "length", path, zone.zone_length, true);
      const YAML::Node approaches = z["approaches"];
      if (!approaches.IsDefined()) {
        r.error(path + ".approaches", z, "missing required field");
      } else if (r.is_list(approaches, path + ".approaches")) {
        for (std::size_t j = 0; j < approaches.size(); ++j) {
          const std::string apath = path + ".approaches[" + std::to_string(j) + "]";
          r.remember(apath, approaches[j]);
          ApproachSpec a;
          if (r.is_map(approaches[j], apath)) {
            r.known_keys(approaches[j], apath, {"id", "control_zone_length"});
            r.read(approaches[j], "id", apath, a.id, true);
            r.read(approaches[j], "control_zone_length", apath, a.control_zone_length, true);
          }
          zone.approaches.push_back(a);
        }
      }
      const YAML::Node pairs = z["conflict_pairs"];
      if (pairs.IsDefined()) {
        const std::string ppath = path + ".conflict_pairs";
        r.remember(ppath, pairs);
        if (r.is_list(pairs, ppath)) {
          for (std::size_t j = 0; j < pairs.size(); ++j) {
            const YAML::Node pair = pairs[j];
            if (!pair.IsSequence() || pair.size() != 2 || !pair[0].IsScalar() || !pair[1].IsScalar()) {
              r.error(ppath + "[" + std::to_string(j) + "]", pair, "expected a pair [approach, approach]");
              continue;
            }
            zone.add_conflict(pair[0].Scalar(), pair[1].Scalar());
          }
        }
      }
    }
    zones.push_back(std::move(zone));
  }
  return zones;
}

std::vector<LinkSpec> read_links(Reader& r, const YAML::Node& node) {
  std::vector<LinkSpec> links;
  if (!node.IsDefined()) return links;
  if (!r.is_list(node, "links")) return links;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string path = "links[" + std::to_string(i) + "]";
    const YAML::Node l = node[i];
    r.remember(path, l);
    LinkSpec link;
    if (r.is_map(l, path)) {
      r.known_keys(l, path, {"id", "length", "to"});
      r.read(l, "id", path, link.id, true);
      r.read(l, "length", path, link.length, true);
      const YAML::Node to = l["to"];
      if (to.IsDefined() && !to.IsNull() && r.is_map(to, path + ".to")) {
        r.remember(path + ".to", to);
        r.known_keys(to, path + ".to", {"zone", "approach"});
        r.read(to, "zone", path + ".to", link.to_zone);
        r.read(to, "approach", path + ".to", link.to_approach);
      }
    }
    links.push_back(std::move(link));
  }
  return links;
}

std::map<RouteId, Route> read_routes(Reader& r, const YAML::Node& node) {
  std::map<RouteId, Route> routes;
  if (!node.IsDefined()) {
    r.issues.push_back("routes: missing required section");
    return routes;
  }
  if (!r.is_map(node, "routes")) return routes;
  for (const auto& kv : node) {
    Route route;
    route.id = kv.first.Scalar();
    const std::string path = "routes." + route.id;
    r.remember(path, kv.second);
    if (r.is_map(kv.second, path)) {
      r.known_keys(kv.second, path, {"legs"});
      const YAML::Node legs = kv.second["legs"];
      if (!legs.IsDefined()) {
        r.error(path + ".legs", kv.second, "missing required field");
      } else if (r.is_list(legs, path + ".legs")) {
        for (std::size_t k = 0; k < legs.size(); ++k) {
          const std::string lpath = path + ".legs[" + std::to_string(k) + "]";
          r.remember(lpath, legs[k]);
          RouteLeg leg;
          if (r.is_map(legs[k], lpath)) {
            r.known_keys(legs[k], lpath, {"zone", "approach", "exit_link"});
            r.read(legs[k], "zone", lpath, leg.zone, true);
            r.read(legs[k], "approach", lpath, leg.approach, true);
            r.read(legs[k], "exit_link", lpath, leg.exit_link, true);
          }
          route.legs.push_back(leg);
        }
      }
    }
    routes[route.id] = std::move(route);
  }
  return routes;
}

std::vector<Arrival> read_arrivals(Reader& r, const YAML::Node& node) {
  std::vector<Arrival> arrivals;
  if (!node.IsDefined()) return arrivals;
  if (!r.is_list(node, "arrivals")) return arrivals;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string path = "arrivals[" + std::to_string(i) + "]";
    r.remember(path, node[i]);
    Arrival a;
    if (r.is_map(node[i], path)) {
      r.known_keys(node[i], path, {"t", "v", "route"});
      r.read(node[i], "t", path, a.t, true);
      r.read(node[i], "v", path, a.v, true);
      r.read(node[i], "route", path, a.route, true);
    }
    arrivals.push_back(a);
  }
  return arrivals;
}

std::optional<GeneratorSpec> read_generator(Reader& r, const YAML::Node& node) {
  if (!node.IsDefined() || node.IsNull()) return std::nullopt;
  GeneratorSpec g;
  if (!r.is_map(node, "generator")) return g;
  r.remember("generator", node);
  r.known_keys(node, "generator", {"seed", "t_start", "horizon", "min_headway", "streams"});
  r.read(node, "seed", "generator", g.seed, true);
  r.read(node, "t_start", "generator", g.t_start);
  r.read(node, "horizon", "generator", g.horizon, true);
  r.read(node, "min_headway", "generator", g.min_headway);
  const YAML::Node streams = node["streams"];
  if (!streams.IsDefined()) {
    r.error("generator.streams", node, "missing required field");
    return g;
  }
  if (!r.is_list(streams, "generator.streams")) return g;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const std::string path = "generator.streams[" + std::to_string(i) + "]";
    r.remember(path, streams[i]);
    GeneratorStream s;
    if (r.is_map(streams[i], path)) {
      r.known_keys(streams[i], path, {"route", "mean_headway", "speed"});
      r.read(streams[i], "route", path, s.route, true);
      r.read(streams[i], "mean_headway", path, s.mean_headway, true);
      const YAML::Node speed = streams[i]["speed"];
      r.remember(path + ".speed", speed);
      if (!speed.IsDefined()) {
        r.error(path + ".speed", streams[i], "missing required field");
      } else if (!speed.IsSequence() || speed.size() != 2) {
        r.error(path + ".speed", speed, "expected [low, high]");
      } else {
        try {
          s.v_low = speed[0].as<double>();
          s.v_high = speed[1].as<double>();
        } catch (const YAML::Exception&) {
          r.error(path + ".speed", speed, "expected two numbers");
        }
      }
    }
    g.streams.push_back(s);
  }
  return g;
}

void read_simulation(Reader& r, const YAML::Node& node, ScenarioConfig& config) {
  if (!node.IsDefined() || node.IsNull()) return;
  if (!r.is_map(node, "simulation")) return;
  r.known_keys(node, "simulation", {"modes", "sample_dt", "metric_dt", "output_dir"});
  const YAML::Node modes = node["modes"];
  if (modes.IsDefined()) {
    r.remember("simulation.modes", modes);
    if (r.is_list(modes, "simulation.modes")) {
      config.modes.clear();
      for (std::size_t i = 0; i < modes.size(); ++i) {
        try {
          config.modes.push_back(parse_mode(modes[i].as<std::string>()));
        } catch (const std::exception&) {
          r.error("simulation.modes[" + std::to_string(i) + "]", modes[i], "expected optimal or baseline");
        }
      }
    }
  }
  r.read(node, "sample_dt", "simulation", config.output.sample_dt);
  r.read(node, "metric_dt", "simulation", config.options.metric_dt);
  r.read(node, "output_dir", "simulation", config.output.directory);
}

void read_baseline(Reader& r, const YAML::Node& node, BaselineParams& b) {
  if (!node.IsDefined() || node.IsNull()) return;
  if (!r.is_map(node, "baseline")) return;
  r.known_keys(node, "baseline",
               {"dt", "max_acceleration", "comfortable_decel", "time_headway", "exponent", "jam_margin",
                "request_distance", "stop_margin", "lookahead"});
  r.read(node, "dt", "baseline", b.dt);
  r.read(node, "max_acceleration", "baseline", b.max_acceleration);
  r.read(node, "comfortable_decel", "baseline", b.comfortable_decel);
  r.read(node, "time_headway", "baseline", b.time_headway);
  r.read(node, "exponent", "baseline", b.exponent);
  r.read(node, "jam_margin", "baseline", b.jam_margin);
  r.read(node, "request_distance", "baseline", b.request_distance);
  r.read(node, "stop_margin", "baseline", b.stop_margin);
  r.read(node, "lookahead", "baseline", b.lookahead);
}

void read_solver(Reader& r, const YAML::Node& node, SolverOptions& s) {
  if (!node.IsDefined() || node.IsNull()) return;
  if (!r.is_map(node, "solver")) return;
  r.known_keys(node, "solver",
               {"max_newton_iterations", "residual_tolerance", "max_structure_iterations", "initial_widening",
                "feasibility_tolerance", "multiplier_tolerance"});
  r.read(node, "max_newton_iterations", "solver", s.max_newton_iterations);
  r.read(node, "residual_tolerance", "solver", s.residual_tolerance);
  r.read(node, "max_structure_iterations", "solver", s.max_structure_iterations);
  r.read(node, "initial_widening", "solver", s.initial_widening);
  r.read(node, "feasibility_tolerance", "solver", s.feasibility_tolerance);
  r.read(node, "multiplier_tolerance", "solver", s.multiplier_tolerance);
}

void positive(std::vector<std::string>& issues, const std::string& path, double value) {
  if (!std::isfinite(value) || value <= 0) issues.push_back(path + ": must be > 0");
}

std::vector<std::string> check_options(const ScenarioConfig& c) {
  std::vector<std::string> issues;
  if (c.modes.empty()) issues.push_back("simulation.modes: at least one mode is required");
  positive(issues, "simulation.sample_dt", c.output.sample_dt);
  positive(issues, "simulation.metric_dt", c.options.metric_dt);
  const BaselineParams& b = c.options.baseline;
  positive(issues, "baseline.dt", b.dt);
  positive(issues, "baseline.max_acceleration", b.max_acceleration);
  positive(issues, "baseline.comfortable_decel", b.comfortable_decel);
  positive(issues, "baseline.time_headway", b.time_headway);
  positive(issues, "baseline.exponent", b.exponent);
  if (!(b.jam_margin >= 0)) issues.push_back("baseline.jam_margin: must be >= 0");
  positive(issues, "baseline.request_distance", b.request_distance);
  if (!(b.stop_margin >= 0)) issues.push_back("baseline.stop_margin: must be >= 0");
  positive(issues, "baseline.lookahead", b.lookahead);
  const SolverOptions& s = c.options.solver;
  if (s.max_newton_iterations < 1) issues.push_back("solver.max_newton_iterations: must be >= 1");
  if (s.max_structure_iterations < 1) issues.push_back("solver.max_structure_iterations: must be >= 1");
  positive(issues, "solver.residual_tolerance", s.residual_tolerance);
  positive(issues, "solver.initial_widening", s.initial_widening);
  positive(issues, "solver.feasibility_tolerance", s.feasibility_tolerance);
  positive(issues, "solver.multiplier_tolerance", s.multiplier_tolerance);
  if (c.generator) {
    const GeneratorSpec& g = *c.generator;
    if (!std::isfinite(g.t_start)) issues.push_back("generator.t_start: must be finite");
    positive(issues, "generator.horizon", g.horizon);
    if (g.min_headway && !(*g.min_headway >= 0)) issues.push_back("generator.min_headway: must be >= 0");
    if (g.streams.empty()) issues.push_back("generator.streams: at least one stream is required");
    for (std::size_t i = 0; i < g.streams.size(); ++i) {
      const GeneratorStream& s = g.streams[i];
      const std::string path = "generator.streams[" + std::to_string(i) + "]";
      if (!c.routes.count(s.route)) issues.push_back(path + ".route: unknown route '" + s.route + "'");
      positive(issues, path + ".mean_headway", s.mean_headway);
      const GlobalParams& p = c.corridor.params;
      if (!(s.v_low > 0) || !(s.v_low <= s.v_high) || s.v_low < p.v_min || s.v_high > p.v_max)
        issues.push_back(path + ".speed: need 0 < low <= high within [v_min, v_max]");
    }
  }
  if (c.arrivals.empty() && !c.generator) issues.push_back("arrivals: no arrivals listed and no generator block");
  return issues;
}

// Shortest text that reads back to the same double.
std::string number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ": parse error at line " + std::to_string(e.mark.line + 1) + ", column " +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError(source + ": expected a mapping at the top level");

  Reader r;
  r.known_keys(root, "", {"params", "zones", "links", "routes", "arrivals", "generator", "simulation", "baseline",
                          "solver"});
  // Keys at the top level come out as ".name"; drop the leading dot.
  for (auto& issue : r.issues)
    if (!issue.empty() && issue.front() == '.') issue.erase(0, 1);

  ScenarioConfig config;
  config.corridor.params = read_params(r, root["params"]);
  config.corridor.zones = read_zones(r, root["zones"]);
  config.corridor.links = read_links(r, root["links"]);
  config.routes = read_routes(r, root["routes"]);
  config.arrivals = read_arrivals(r, root["arrivals"]);
  config.generator = read_generator(r, root["generator"]);
  read_simulation(r, root["simulation"], config);
  read_baseline(r, root["baseline"], config.options.baseline);
  read_solver(r, root["solver"], config.options.solver);

  std::vector<std::string> issues = r.issues;
  if (issues.empty()) {
    auto add = [&](std::vector<std::string> more) {
      for (auto& m : more) issues.push_back(r.annotate(m));
    };
    add(config.corridor.params.validate("params"));
    add(config.corridor.validate());
    for (const auto& [id, route] : config.routes) add(config.corridor.validate_route(route, "routes." + id));
    add(check_options(config));
    if (issues.empty()) add(validate_arrivals(config.corridor, config.routes, scenario_arrivals(config)));
  }
  if (!issues.empty()) {
    for (auto& issue : issues) issue = source + ": " + issue;
    throw ConfigError(issues);
  }
  return config;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

std::string dump_config(const ScenarioConfig& c) {
  YAML::Emitter out;
  const GlobalParams& p = c.corridor.params;
  out << YAML::BeginMap;
  out << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "rho" << YAML::Value << number(p.rho);
  out << YAML::Key << "delta" << YAML::Value << number(p.delta);
  out << YAML::Key << "v_min" << YAML::Value << number(p.v_min);
  out << YAML::Key << "v_max" << YAML::Value << number(p.v_max);
  out << YAML::Key << "u_min" << YAML::Value << number(p.u_min);
  out << YAML::Key << "u_max" << YAML::Value << number(p.u_max);
  if (p.horizon_cap) out << YAML::Key << "horizon_cap" << YAML::Value << number(*p.horizon_cap);
  out << YAML::EndMap;

  out << YAML::Key << "zones" << YAML::Value << YAML::BeginSeq;
  for (const auto& z : c.corridor.zones) {
    out << YAML::BeginMap << YAML::Key << "id" << YAML::Value << z.id;
    out << YAML::Key << "length" << YAML::Value << number(z.zone_length);
    out << YAML::Key << "approaches" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : z.approaches)
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << a.id << YAML::Key
          << "control_zone_length" << YAML::Value << number(a.control_zone_length) << YAML::EndMap;
    out << YAML::EndSeq;
    out << YAML::Key << "conflict_pairs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& [x, y] : z.conflict_pairs) out << YAML::Flow << YAML::BeginSeq << x << y << YAML::EndSeq;
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "links" << YAML::Value << YAML::BeginSeq;
  for (const auto& l : c.corridor.links) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "id" << YAML::Value << l.id << YAML::Key << "length"
        << YAML::Value << number(l.length);
    if (l.to_zone || l.to_approach) {
      out << YAML::Key << "to" << YAML::Value << YAML::BeginMap;
      if (l.to_zone) out << YAML::Key << "zone" << YAML::Value << *l.to_zone;
      if (l.to_approach) out << YAML::Key << "approach" << YAML::Value << *l.to_approach;
      out << YAML::EndMap;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "routes" << YAML::Value << YAML::BeginMap;
  for (const auto& [id, route] : c.routes) {
    out << YAML::Key << id << YAML::Value << YAML::BeginMap << YAML::Key << "legs" << YAML::Value << YAML::BeginSeq;
    for (const auto& leg : route.legs)
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "zone" << YAML::Value << leg.zone << YAML::Key
          << "approach" << YAML::Value << leg.approach << YAML::Key << "exit_link" << YAML::Value << leg.exit_link
          << YAML::EndMap;
    out << YAML::EndSeq << YAML::EndMap;
  }
  out << YAML::EndMap;

  out << YAML::Key << "arrivals" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : c.arrivals)
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "t" << YAML::Value << number(a.t) << YAML::Key << "v"
        << YAML::Value << number(a.v) << YAML::Key << "route" << YAML::Value << a.route << YAML::EndMap;
  out << YAML::EndSeq;

  if (c.generator) {
    const GeneratorSpec& g = *c.generator;
    out << YAML::Key << "generator" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "seed" << YAML::Value << g.seed;
    out << YAML::Key << "t_start" << YAML::Value << number(g.t_start);
    out << YAML::Key << "horizon" << YAML::Value << number(g.horizon);
    if (g.min_headway) out << YAML::Key << "min_headway" << YAML::Value << number(*g.min_headway);
    out << YAML::Key << "streams" << YAML::Value << YAML::BeginSeq;
    for (const auto& s : g.streams)
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "route" << YAML::Value << s.route << YAML::Key
          << "mean_headway" << YAML::Value << number(s.mean_headway) << YAML::Key << "speed" << YAML::Value
          << YAML::Flow << YAML::BeginSeq << number(s.v_low) << number(s.v_high) << YAML::EndSeq << YAML::EndMap;
    out << YAML::EndSeq << YAML::EndMap;
  }

  out << YAML::Key << "simulation" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "modes" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (Mode m : c.modes) out << to_string(m);
  out << YAML::EndSeq;
  out << YAML::Key << "sample_dt" << YAML::Value << number(c.output.sample_dt);
  out << YAML::Key << "metric_dt" << YAML::Value << number(c.options.metric_dt);
  out << YAML::Key << "output_dir" << YAML::Value << c.output.directory;
  out << YAML::EndMap;

  const BaselineParams& b = c.options.baseline;
  out << YAML::Key << "baseline" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dt" << YAML::Value << number(b.dt);
  out << YAML::Key << "max_acceleration" << YAML::Value << number(b.max_acceleration);
  out << YAML::Key << "comfortable_decel" << YAML::Value << number(b.comfortable_decel);
  out << YAML::Key << "time_headway" << YAML::Value << number(b.time_headway);
  out << YAML::Key << "exponent" << YAML::Value << number(b.exponent);
  out << YAML::Key << "jam_margin" << YAML::Value << number(b.jam_margin);
  out << YAML::Key << "request_distance" << YAML::Value << number(b.request_distance);
  out << YAML::Key << "stop_margin" << YAML::Value << number(b.stop_margin);
  out << YAML::Key << "lookahead" << YAML::Value << number(b.lookahead);
  out << YAML::EndMap;

  const SolverOptions& s = c.options.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "max_newton_iterations" << YAML::Value << s.max_newton_iterations;
  out << YAML::Key << "residual_tolerance" << YAML::Value << number(s.residual_tolerance);
  out << YAML::Key << "max_structure_iterations" << YAML::Value << s.max_structure_iterations;
  out << YAML::Key << "initial_widening" << YAML::Value << number(s.initial_widening);
  out << YAML::Key << "feasibility_tolerance" << YAML::Value << number(s.feasibility_tolerance);
  out << YAML::Key << "multiplier_tolerance" << YAML::Value << number(s.multiplier_tolerance);
  out << YAML::EndMap;

  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::vector<Arrival> generate_arrivals(const GeneratorSpec& generator, const CorridorSpec& corridor,
                                       const std::map<RouteId, Route>& routes) {
  std::mt19937_64 rng(generator.seed);
  std::vector<Arrival> out;
  const double t_end = generator.t_start + generator.horizon;
  for (const auto& stream : generator.streams) {
    std::exponential_distribution<double> gap(1.0 / stream.mean_headway);
    std::uniform_real_distribution<double> speed(stream.v_low, stream.v_high);
    double t = generator.t_start;
    while (true) {
      t += gap(rng);
      if (t > t_end) break;
      out.push_back({t, speed(rng), stream.route});
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Arrival& a, const Arrival& b) { return std::tie(a.t, a.route) < std::tie(b.t, b.route); });
  // Same first approach: start at least delta (at the previous spawn's
  // speed) and min_headway behind the previous spawn.
  std::map<std::pair<ZoneId, ApproachId>, const Arrival*> last;
  const double delta = corridor.params.delta;
  const double headway = generator.min_headway.value_or(corridor.params.rho);
  for (auto& a : out) {
    const auto route = routes.find(a.route);
    if (route == routes.end() || route->second.legs.empty()) continue;
    const auto key = std::make_pair(route->second.legs.front().zone, route->second.legs.front().approach);
    if (const auto prev = last.find(key); prev != last.end()) {
      const Arrival& k = *prev->second;
      const double earliest = k.t + std::max(headway, delta * (1 + 1e-9) / k.v);
      a.t = std::max(a.t, earliest);
    }
    last[key] = &a;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Arrival& a, const Arrival& b) { return std::tie(a.t, a.route) < std::tie(b.t, b.route); });
  return out;
}

std::vector<Arrival> scenario_arrivals(const ScenarioConfig& config) {
  std::vector<Arrival> all = config.arrivals;
  if (config.generator) {
    auto more = generate_arrivals(*config.generator, config.corridor, config.routes);
    all.insert(all.end(), more.begin(), more.end());
  }
  return all;
}

}  // namespace cavcoord
