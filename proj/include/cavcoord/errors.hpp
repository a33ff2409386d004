#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace cavcoord {

/// Raised when an operation is called outside its domain (bad arguments,
/// unknown identifiers, evaluation outside a trajectory span).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid corridor or scenario configuration. Carries every issue found,
/// not only the first one.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  explicit ConfigError(const std::string& issue)
      : ConfigError(std::vector<std::string>{issue}) {}

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// No admissible conflict-zone entry time exists for a vehicle.
class InfeasibleScheduleError : public std::runtime_error {
 public:
  InfeasibleScheduleError(int vehicle_id, std::string zone_id, const std::string& what);

  int vehicle_id() const noexcept { return vehicle_id_; }
  const std::string& zone_id() const noexcept { return zone_id_; }

 private:
  int vehicle_id_;
  std::string zone_id_;
};

/// The lower-level trajectory solver failed (non-convergence, infeasible
/// rear-end geometry, degenerate boundary data).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario aborted because of a scheduler or solver failure; identifies the
/// offending vehicle and zone.
class ScenarioAbort : public std::runtime_error {
 public:
  ScenarioAbort(int vehicle_id, std::string zone_id, const std::string& what);

  int vehicle_id() const noexcept { return vehicle_id_; }
  const std::string& zone_id() const noexcept { return zone_id_; }

 private:
  int vehicle_id_;
  std::string zone_id_;
};

}  // namespace cavcoord
