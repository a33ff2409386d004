#pragma once

#include "cavcoord/corridor.hpp"

#include <deque>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace cavcoord {

/// Tolerance used when comparing entry times. Grid-aligned inputs produce
/// exact ties that floating-point sums would otherwise break arbitrarily.
inline constexpr double kTimeTolerance = 1e-9;

/// Which branch of the lateral recursion produced an entry time.
enum class ScheduleCase {
  NoLaterConflict,   ///< no conflicting vehicle at or after the candidate
  BeforeNextConflict,///< candidate (pushed past earlier conflicts) fits before the next one
  InGap,             ///< earliest gap between two later conflicting vehicles
  AfterLastConflict  ///< no gap fits; go after the last conflicting vehicle
};

const char* to_string(ScheduleCase c);

/// Conflict-zone entry time for a vehicle following `t_k_z` on the same lane,
/// clipped to the feasible window.
double entry_time_same_lane(double t_k_z, double rho, double t_min, double t_max);

/// Desired entry time of an unconstrained vehicle: the control zone covered at
/// constant speed v0, clipped to the feasible window. Throws DomainError if
/// v0 lies outside [v_min, v_max] or is not positive.
double first_vehicle_time(double t0, double v0, const ApproachSpec& approach, const GlobalParams& params);

/// Later conflicting vehicles (A) and those followed by a gap wide enough to
/// fit one vehicle (L). Throws DomainError if `conflicting_times` is unsorted.
struct ConflictSets {
  std::vector<double> later;     ///< A
  std::vector<double> gap_after; ///< L
};

ConflictSets build_sets_A_L(double candidate_t, std::span<const double> conflicting_times, double rho);

struct LateralDecision {
  double time;
  ScheduleCase which;
};

/// Earliest time >= t_candidate separated by at least rho from every time in
/// `conflicting_times` (any order), following the four-case recursion.
LateralDecision resolve_lateral(double t_candidate, std::span<const double> conflicting_times, double rho);

struct LedgerEntry {
  int vehicle_id = 0;
  ApproachId approach;
  double t_control_entry = 0.0;  ///< arrival at the control zone
  double t_min = 0.0;
  double t_max = 0.0;
  double t_candidate = 0.0;      ///< after the same-lane rule, before lateral resolution
  double t_assigned = 0.0;       ///< stored conflict-zone entry time
  ScheduleCase which = ScheduleCase::NoLaterConflict;
  std::optional<int> same_lane_predecessor;
  std::vector<int> lateral_dependencies;  ///< conflicting vehicles already assigned
};

/// Read-only copy of one zone's ledger.
struct ZoneLedgerSnapshot {
  ZoneId zone;
  std::vector<LedgerEntry> entries;  ///< assignment order
  std::vector<int> queue;            ///< vehicles currently in the control zone (FIFO)
};

/// Per-zone store of assigned entry times. Entries are immutable once
/// written. Mutations are serialized; readers get consistent snapshots.
class ScheduleLedger {
 public:
  explicit ScheduleLedger(const CorridorSpec& corridor);

  ScheduleLedger(const ScheduleLedger&) = delete;
  ScheduleLedger& operator=(const ScheduleLedger&) = delete;

  std::optional<LedgerEntry> last_on_approach(const ZoneId& zone, const ApproachId& approach) const;
  std::optional<LedgerEntry> find(const ZoneId& zone, int vehicle_id) const;
  ZoneLedgerSnapshot snapshot(const ZoneId& zone) const;
  std::vector<ZoneLedgerSnapshot> snapshot_all() const;

  void enter_control_zone(const ZoneId& zone, int vehicle_id);
  void leave_conflict_zone(const ZoneId& zone, int vehicle_id);

  /// Assigns and stores the conflict-zone entry time of a vehicle arriving at
  /// the control zone of `zone` at `t0`. `cruise_speed` defines its desired
  /// (unconstrained) entry time; `not_before` is an extra lower bound from
  /// the caller (e.g. the time the same-lane leader has cleared delta into
  /// the zone). Throws InfeasibleScheduleError when no time within
  /// [t_min, t_max] satisfies both headway rules.
  LedgerEntry schedule_entry(int vehicle_id, const ZoneId& zone, const ApproachId& approach, double t0,
                             double cruise_speed, double not_before = -std::numeric_limits<double>::infinity());

 private:
  struct ZoneState {
    std::vector<LedgerEntry> entries;
    std::deque<int> queue;
  };

  const ZoneState& state(const ZoneId& zone) const;
  ZoneState& state(const ZoneId& zone);

  const CorridorSpec* corridor_;
  std::map<ZoneId, ZoneState> zones_;
  mutable std::shared_mutex mutex_;
};

}  // namespace cavcoord
