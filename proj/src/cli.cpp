#include "cavcoord/cli.hpp"

#include "cavcoord/config.hpp"
#include "cavcoord/errors.hpp"
#include "cavcoord/results_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <optional>
#include <ostream>

namespace cavcoord {

namespace {

struct RunArgs {
  std::string config;
  std::string mode;
  std::string out;
  std::optional<double> sample_dt;
};

ScenarioResult simulate(const ScenarioConfig& config, Mode mode) {
  return run_scenario(config.corridor, config.routes, scenario_arrivals(config), mode, config.options);
}

void summary(std::ostream& out, const ScenarioResult& r, const std::string& dir) {
  out << to_string(r.mode) << ": " << r.aggregate.vehicles << " vehicles, mean travel time "
      << r.aggregate.mean_travel_time << " s, mean effort " << r.aggregate.mean_effort << " m^2/s^3, stop-and-go "
      << r.aggregate.total_stop_and_go << ", " << r.warnings.size() << " warnings -> " << dir << "\n";
}

std::string output_dir(const ScenarioConfig& config, const RunArgs& args) {
  return args.out.empty() ? config.output.directory : args.out;
}

int do_run(const RunArgs& args, std::ostream& out) {
  const ScenarioConfig config = load_config(args.config);
  std::vector<Mode> modes = config.modes;
  if (args.mode == "both")
    modes = {Mode::Optimal, Mode::Baseline};
  else if (!args.mode.empty())
    modes = {parse_mode(args.mode)};
  const double dt = args.sample_dt.value_or(config.output.sample_dt);
  const std::filesystem::path base(output_dir(config, args));
  for (Mode mode : modes) {
    const ScenarioResult result = simulate(config, mode);
    const std::string dir = (base / to_string(mode)).string();
    write_results(result, dir, dt);
    summary(out, result, dir);
  }
  return kExitOk;
}

int do_compare(const RunArgs& args, std::ostream& out) {
  const ScenarioConfig config = load_config(args.config);
  const double dt = args.sample_dt.value_or(config.output.sample_dt);
  const std::filesystem::path base(output_dir(config, args));
  const ScenarioResult optimal = simulate(config, Mode::Optimal);
  const ScenarioResult baseline = simulate(config, Mode::Baseline);
  write_results(optimal, (base / "optimal").string(), dt);
  write_results(baseline, (base / "baseline").string(), dt);
  const Comparison c = compare_results(optimal, baseline);
  write_file((base / "comparison.json").string(), comparison_json(c));
  out << comparison_report(c);
  return kExitOk;
}

int do_validate(const RunArgs& args, std::ostream& out) {
  const ScenarioConfig config = load_config(args.config);
  out << args.config << ": ok (" << config.corridor.zones.size() << " zones, " << config.routes.size()
      << " routes, " << scenario_arrivals(config).size() << " arrivals)\n";
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coordinates connected automated vehicles through a corridor of conflict zones", "cavcoord"};
  app.require_subcommand(1);
  RunArgs args;

  auto* run = app.add_subcommand("run", "simulate a scenario and write results");
  run->add_option("config", args.config, "scenario file (YAML)")->required();
  run->add_option("--mode", args.mode, "optimal, baseline or both (default: simulation.modes)")
      ->check(CLI::IsMember({"optimal", "baseline", "both"}));
  run->add_option("--out", args.out, "output directory (default: simulation.output_dir)");
  run->add_option("--sample-dt", args.sample_dt, "trajectories.csv time step [s]")->check(CLI::PositiveNumber);

  auto* compare = app.add_subcommand("compare", "run both modes and report the differences");
  compare->add_option("config", args.config, "scenario file (YAML)")->required();
  compare->add_option("--out", args.out, "output directory (default: simulation.output_dir)");
  compare->add_option("--sample-dt", args.sample_dt, "trajectories.csv time step [s]")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("config", args.config, "scenario file (YAML)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (run->parsed()) return do_run(args, out);
    if (compare->parsed()) return do_compare(args, out);
    return do_validate(args, out);
  } catch (const ConfigError& e) {
    for (const auto& issue : e.issues()) err << "error: " << issue << "\n";
    return kExitInvalid;
  } catch (const ScenarioAbort& e) {
    err << "infeasible (vehicle " << e.vehicle_id() << ", zone '" << e.zone_id() << "'): " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
}

}  // namespace cavcoord
