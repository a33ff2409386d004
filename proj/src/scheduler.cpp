#include "cavcoord/scheduler.hpp"

#include "cavcoord/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cavcoord {

const char* to_string(ScheduleCase c) {
  switch (c) {
    case ScheduleCase::NoLaterConflict:
      return "no_later_conflict";
    case ScheduleCase::BeforeNextConflict:
      return "before_next_conflict";
    case ScheduleCase::InGap:
      return "in_gap";
    case ScheduleCase::AfterLastConflict:
      return "after_last_conflict";
  }
  return "unknown";
}

double entry_time_same_lane(double t_k_z, double rho, double t_min, double t_max) {
  return std::max(std::min(t_k_z + rho, t_max), t_min);
}

double first_vehicle_time(double t0, double v0, const ApproachSpec& approach, const GlobalParams& params) {
  if (!(v0 > 0) || v0 < params.v_min || v0 > params.v_max) {
    std::ostringstream msg;
    msg << "first_vehicle_time: speed " << v0 << " outside [" << params.v_min << ", " << params.v_max << "]";
    throw DomainError(msg.str());
  }
  const TimeBounds bounds = feasible_time_bounds(approach, t0, params);
  return std::clamp(t0 + approach.control_zone_length / v0, bounds.t_min, bounds.t_max);
}

ConflictSets build_sets_A_L(double candidate_t, std::span<const double> conflicting_times, double rho) {
  if (!std::is_sorted(conflicting_times.begin(), conflicting_times.end()))
    throw DomainError("build_sets_A_L: conflicting times must be sorted ascending");
  ConflictSets sets;
  for (double t : conflicting_times)
    if (t >= candidate_t - kTimeTolerance) sets.later.push_back(t);
  // The last later vehicle has no successor and so defines no gap.
  for (std::size_t j = 0; j + 1 < sets.later.size(); ++j)
    if (sets.later[j] + rho <= sets.later[j + 1] - rho + kTimeTolerance) sets.gap_after.push_back(sets.later[j]);
  return sets;
}

LateralDecision resolve_lateral(double t_candidate, std::span<const double> conflicting_times, double rho) {
  std::vector<double> sorted(conflicting_times.begin(), conflicting_times.end());
  std::sort(sorted.begin(), sorted.end());
  const ConflictSets sets = build_sets_A_L(t_candidate, sorted, rho);

  if (sets.later.empty()) {
    double t = t_candidate;
    if (!sorted.empty()) t = std::max(t, sorted.back() + rho);
    return {t, ScheduleCase::NoLaterConflict};
  }

  // Conflicting vehicles that enter shortly before the candidate still block
  // it; push the candidate past them first.
  double pushed = t_candidate;
  for (double t : sorted)
    if (t < t_candidate - kTimeTolerance) pushed = std::max(pushed, t + rho);

  if (pushed + rho <= sets.later.front() + kTimeTolerance) return {pushed, ScheduleCase::BeforeNextConflict};

  if (!sets.gap_after.empty()) return {sets.gap_after.front() + rho, ScheduleCase::InGap};

  return {sets.later.back() + rho, ScheduleCase::AfterLastConflict};
}

ScheduleLedger::ScheduleLedger(const CorridorSpec& corridor) : corridor_(&corridor) {
  for (const auto& z : corridor.zones) zones_[z.id];
}

const ScheduleLedger::ZoneState& ScheduleLedger::state(const ZoneId& zone) const {
  auto it = zones_.find(zone);
  if (it == zones_.end()) throw DomainError("ledger: unknown zone '" + zone + "'");
  return it->second;
}

ScheduleLedger::ZoneState& ScheduleLedger::state(const ZoneId& zone) {
  auto it = zones_.find(zone);
  if (it == zones_.end()) throw DomainError("ledger: unknown zone '" + zone + "'");
  return it->second;
}

std::optional<LedgerEntry> ScheduleLedger::last_on_approach(const ZoneId& zone, const ApproachId& approach) const {
  std::shared_lock lock(mutex_);
  const auto& entries = state(zone).entries;
  for (auto it = entries.rbegin(); it != entries.rend(); ++it)
    if (it->approach == approach) return *it;
  return std::nullopt;
}

std::optional<LedgerEntry> ScheduleLedger::find(const ZoneId& zone, int vehicle_id) const {
  std::shared_lock lock(mutex_);
  for (const auto& e : state(zone).entries)
    if (e.vehicle_id == vehicle_id) return e;
  return std::nullopt;
}

ZoneLedgerSnapshot ScheduleLedger::snapshot(const ZoneId& zone) const {
  std::shared_lock lock(mutex_);
  const auto& s = state(zone);
  return {zone, s.entries, std::vector<int>(s.queue.begin(), s.queue.end())};
}

std::vector<ZoneLedgerSnapshot> ScheduleLedger::snapshot_all() const {
  std::vector<ZoneLedgerSnapshot> out;
  for (const auto& z : corridor_->zones) out.push_back(snapshot(z.id));
  return out;
}

void ScheduleLedger::enter_control_zone(const ZoneId& zone, int vehicle_id) {
  std::unique_lock lock(mutex_);
  state(zone).queue.push_back(vehicle_id);
}

void ScheduleLedger::leave_conflict_zone(const ZoneId& zone, int vehicle_id) {
  std::unique_lock lock(mutex_);
  auto& queue = state(zone).queue;
  auto it = std::find(queue.begin(), queue.end(), vehicle_id);
  if (it == queue.end()) throw DomainError("ledger: vehicle " + std::to_string(vehicle_id) + " not queued at '" + zone + "'");
  queue.erase(it);
}

LedgerEntry ScheduleLedger::schedule_entry(int vehicle_id, const ZoneId& zone_id, const ApproachId& approach_id,
                                           double t0, double cruise_speed, double not_before) {
  const auto& zone = corridor_->zone(zone_id);
  const auto& approach = zone.approach(approach_id);
  const GlobalParams& params = corridor_->params;

  std::unique_lock lock(mutex_);
  auto& zs = state(zone_id);
  for (const auto& e : zs.entries)
    if (e.vehicle_id == vehicle_id)
      throw DomainError("ledger: vehicle " + std::to_string(vehicle_id) + " already assigned at '" + zone_id + "'");

  LedgerEntry entry;
  entry.vehicle_id = vehicle_id;
  entry.approach = approach_id;
  entry.t_control_entry = t0;
  const TimeBounds bounds = feasible_time_bounds(approach, t0, params);
  entry.t_min = bounds.t_min;
  entry.t_max = bounds.t_max;

  double candidate = first_vehicle_time(t0, cruise_speed, approach, params);
  std::vector<double> conflicting;
  for (auto it = zs.entries.rbegin(); it != zs.entries.rend(); ++it) {
    if (it->approach == approach_id && !entry.same_lane_predecessor) {
      entry.same_lane_predecessor = it->vehicle_id;
      if (it->t_assigned + params.rho > bounds.t_max + kTimeTolerance) {
        std::ostringstream msg;
        msg << "vehicle " << vehicle_id << " at zone '" << zone_id << "': same-lane headway needs entry at "
            << it->t_assigned + params.rho << " s but the latest feasible entry is " << bounds.t_max << " s";
        throw InfeasibleScheduleError(vehicle_id, zone_id, msg.str());
      }
      candidate = std::max(candidate, entry_time_same_lane(it->t_assigned, params.rho, bounds.t_min, bounds.t_max));
    }
  }
  for (const auto& e : zs.entries) {
    if (zone.conflicts(e.approach, approach_id)) {
      conflicting.push_back(e.t_assigned);
      entry.lateral_dependencies.push_back(e.vehicle_id);
    }
  }
  if (not_before > bounds.t_max + kTimeTolerance) {
    std::ostringstream msg;
    msg << "vehicle " << vehicle_id << " at zone '" << zone_id << "': cannot enter before " << not_before
        << " s but the latest feasible entry is " << bounds.t_max << " s";
    throw InfeasibleScheduleError(vehicle_id, zone_id, msg.str());
  }
  candidate = std::max(candidate, not_before);
  entry.t_candidate = candidate;

  const LateralDecision decision = resolve_lateral(candidate, conflicting, params.rho);
  if (decision.time > bounds.t_max + kTimeTolerance) {
    std::ostringstream msg;
    msg << "vehicle " << vehicle_id << " at zone '" << zone_id << "': lateral headway pushes entry to "
        << decision.time << " s beyond the latest feasible entry " << bounds.t_max << " s";
    throw InfeasibleScheduleError(vehicle_id, zone_id, msg.str());
  }
  entry.t_assigned = decision.time;
  entry.which = decision.which;
  zs.entries.push_back(entry);
  return entry;
}

}  // namespace cavcoord
