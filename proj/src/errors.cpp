#include "cavcoord/errors.hpp"

namespace cavcoord {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out;
  for (std::size_t i = 0; i < issues.size(); ++i) {
    if (i) out += "; ";
    out += issues[i];
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

InfeasibleScheduleError::InfeasibleScheduleError(int vehicle_id, std::string zone_id, const std::string& what)
    : std::runtime_error(what), vehicle_id_(vehicle_id), zone_id_(std::move(zone_id)) {}

ScenarioAbort::ScenarioAbort(int vehicle_id, std::string zone_id, const std::string& what)
    : std::runtime_error(what), vehicle_id_(vehicle_id), zone_id_(std::move(zone_id)) {}

}  // namespace cavcoord
