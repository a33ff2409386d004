#pragma once

#include "cavcoord/corridor.hpp"
#include "cavcoord/cubic_arc.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cavcoord {

/// Constrained arc: the follower shadows an already-committed leader at a
/// fixed distance, p = p_k - delta, v = v_k, u = u_k. Holds the leader's
/// pieces over [t_start, t_end], already offset by -delta.
struct LeaderOffsetArc {
  int leader_id = 0;
  double delta = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::vector<CubicArcd> pieces;

  Stated evaluate(double t) const;
};

using Arc = std::variant<CubicArcd, LeaderOffsetArc>;

double arc_start(const Arc& arc);
double arc_end(const Arc& arc);

/// Time-contiguous sequence of arcs for one vehicle in one control zone
/// (or, in the simulator, along its whole route).
class PiecewiseTrajectory {
 public:
  PiecewiseTrajectory() = default;
  explicit PiecewiseTrajectory(std::vector<Arc> arcs, int vehicle_id = 0, ZoneId zone = {});

  const std::vector<Arc>& arcs() const { return arcs_; }
  bool empty() const { return arcs_.empty(); }
  double t_start() const;
  double t_end() const;

  int vehicle_id() const { return vehicle_id_; }
  const ZoneId& zone() const { return zone_; }

  /// Every polynomial piece in time order (constrained arcs expanded).
  std::vector<CubicArcd> pieces() const;
  /// Times where consecutive arcs meet.
  std::vector<double> junctions() const;

  void append(Arc arc);
  /// Copy moved `offset` metres along the path.
  PiecewiseTrajectory shifted(double offset) const;
  /// Restriction to [lo, hi] (intersected with the span), flattened to cubics.
  PiecewiseTrajectory clipped(double lo, double hi) const;
  /// Copy continued at its terminal speed up to `t_end` (no-op if already longer).
  PiecewiseTrajectory extended_to(double t_end) const;

 private:
  std::vector<Arc> arcs_;
  int vehicle_id_ = 0;
  ZoneId zone_;
};

/// (p, v, u) at time t. Throws DomainError outside the span.
Stated evaluate(const PiecewiseTrajectory& traj, double t);

/// Half the integral of u^2, in closed form per arc.
double effort(const PiecewiseTrajectory& traj);

/// Fixed-final-time, fixed-final-position problem on one control zone.
/// Positions are measured from the control-zone entry. The final speed is
/// free (u(tf) = 0) unless `vf` pins it.
struct BvpProblem {
  double t0 = 0.0;
  double tf = 0.0;
  double v0 = 0.0;
  double p0 = 0.0;
  double pf = 0.0;
  std::optional<double> vf;
  std::optional<PiecewiseTrajectory> leader;  ///< same-lane vehicle ahead, same coordinates
  double delta = 0.0;
};

/// The cubic with p(t0) = p0, v(t0) = v0, p(tf) = pf and u(tf) = 0
/// (or v(tf) = vf when set).
CubicArcd solve_unconstrained(const BvpProblem& problem);

/// Largest constant speed at which a vehicle at `p_start` at time `t_start`
/// covers `length` metres without coming closer than delta to `leader`
/// (continued at its terminal speed). With `brake`, the vehicle then brakes
/// to a stop at that rate and the leader is taken to do the same from the
/// end of its trajectory; the gap must hold throughout. Bisection to
/// `tolerance`; capped at `v_cap`.
double max_safe_cruise_speed(const PiecewiseTrajectory& leader, double delta, double t_start, double p_start,
                             double length, double v_cap, std::optional<double> brake = std::nullopt,
                             double tolerance = 1e-10);

struct TimeInterval {
  double start = 0.0;
  double end = 0.0;
};

/// Maximal intervals inside `overlap` where p_k - p_i - delta < -tolerance.
std::vector<TimeInterval> find_rear_end_violations(const PiecewiseTrajectory& follower,
                                                   const PiecewiseTrajectory& leader, double delta,
                                                   TimeInterval overlap, double tolerance = 1e-9);

/// First violation interval of a single-arc follower, if any.
std::optional<TimeInterval> detect_rear_end_violation(const CubicArcd& follower, const PiecewiseTrajectory& leader,
                                                      double delta, TimeInterval overlap);

struct MarginMinimum {
  double margin;  ///< min of p_k - p_i - delta
  double t;
};

/// Exact minimum of the rear-end margin over `overlap`.
MarginMinimum min_rear_end_margin(const PiecewiseTrajectory& follower, const PiecewiseTrajectory& leader,
                                  double delta, TimeInterval overlap);

struct SolverOptions {
  int max_newton_iterations = 60;
  double residual_tolerance = 1e-10;    ///< on control mismatches at junctions [m/s^2]
  int max_structure_iterations = 3;     ///< violation intervals handled one after another
  double initial_widening = 0.05;       ///< junction guess widening around a violation
  double feasibility_tolerance = 1e-8;  ///< accepted rear-end margin deficit [m]
  double multiplier_tolerance = 1e-6;
};

/// How the follower meets the rear-end constraint.
struct Contact {
  enum class Kind {
    Arc,       ///< constrained arc [entry, exit] between two free arcs
    Touch,     ///< single tangential contact (entry == exit)
    ArcToEnd,  ///< constrained arc that lasts until tf
  };
  Kind kind = Kind::Arc;
  double entry = 0.0;
  double exit = 0.0;
};

struct ConstrainedSolution {
  PiecewiseTrajectory trajectory;
  std::vector<Contact> contacts;  ///< empty when the unconstrained arc was already safe
  int newton_iterations = 0;
  double max_residual = 0.0;
};

/// Minimum-effort trajectory that keeps p <= p_k - delta, stitching free
/// cubic arcs to constrained arcs (or tangential contacts) with continuous
/// position, speed and control. Junction times come from damped Newton on
/// the control-continuity residuals. Throws SolverError on failure.
ConstrainedSolution solve_constrained_detailed(const BvpProblem& problem, const SolverOptions& options = {});

PiecewiseTrajectory solve_constrained(const BvpProblem& problem, const SolverOptions& options = {});


enum class BoundKind { SpeedAboveMax, SpeedBelowMin, ControlAboveMax, ControlBelowMin };

const char* to_string(BoundKind kind);

struct BoundExcursion {
  BoundKind kind;
  double t_start;
  double t_end;
  double extreme;  ///< worst value reached inside the interval
};

/// Exact intervals where v or u leaves its admissible range.
std::vector<BoundExcursion> check_bounds(const PiecewiseTrajectory& traj, const GlobalParams& params,
                                         double tolerance = 1e-9);

/// Costates and multipliers reconstructed from a solved trajectory.
///
/// On a free arc lambda_p is the constant slope of u and lambda_v = -u. On a
/// constrained arc the costates continue those of the following free arc
/// backwards (jumps are placed at the entry junction), so the multiplier of
/// u - u_k = 0 is eta_c = -u_k - lambda_v, and eta_c(entry+) equals pi2.
struct ArcCostate {
  double t_start = 0.0;
  double t_end = 0.0;
  bool constrained = false;
  double lambda_p = 0.0;
  double lambda_v_start = 0.0;
  double lambda_v_end = 0.0;
  double eta_c_start = 0.0;
  double eta_c_end = 0.0;
  double eta_c_min = 0.0;
};

struct JunctionMultipliers {
  enum class Kind { Entry, Exit, Touch };
  Kind kind;
  double t = 0.0;
  double pi1 = 0.0;  ///< jump of lambda_p
  double pi2 = 0.0;  ///< jump of lambda_v
};

struct CostateRecord {
  std::vector<ArcCostate> arcs;
  std::vector<JunctionMultipliers> junctions;
};

CostateRecord costates(const PiecewiseTrajectory& traj);

}  // namespace cavcoord
