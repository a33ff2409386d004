#pragma once

#include "cavcoord/corridor.hpp"
#include "cavcoord/simulator.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cavcoord {

/// Poisson spawn stream on one route.
struct GeneratorStream {
  RouteId route;
  double mean_headway = 0.0;  ///< [s]
  double v_low = 0.0;         ///< spawn speed drawn uniformly from [v_low, v_high] [m/s]
  double v_high = 0.0;
};

/// Random arrivals, reproducible from `seed`. Spawns on the same first
/// approach are pushed later when needed so they start at least delta and
/// `min_headway` apart.
struct GeneratorSpec {
  std::uint64_t seed = 0;
  double t_start = 0.0;
  double horizon = 0.0;  ///< no spawns after t_start + horizon [s]
  std::optional<double> min_headway;  ///< [s]; params.rho when absent
  std::vector<GeneratorStream> streams;
};

struct OutputOptions {
  double sample_dt = 0.1;  ///< trajectories.csv time step [s]
  std::string directory = "out";
};

struct ScenarioConfig {
  CorridorSpec corridor;
  std::map<RouteId, Route> routes;
  std::vector<Arrival> arrivals;  ///< listed explicitly
  std::optional<GeneratorSpec> generator;
  std::vector<Mode> modes{Mode::Optimal, Mode::Baseline};
  OutputOptions output;
  SimulationOptions options;
};

/// Parses and validates a YAML scenario. Throws ConfigError with every
/// problem found, each naming its field path (and source line when known).
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::string& path);

/// YAML text that parse_config() reads back into an equivalent config.
std::string dump_config(const ScenarioConfig& config);

/// Draws arrivals for the generator block.
std::vector<Arrival> generate_arrivals(const GeneratorSpec& generator, const CorridorSpec& corridor,
                                       const std::map<RouteId, Route>& routes);

/// Explicit arrivals followed by generated ones.
std::vector<Arrival> scenario_arrivals(const ScenarioConfig& config);

}  // namespace cavcoord
