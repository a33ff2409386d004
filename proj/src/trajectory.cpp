#include "cavcoord/trajectory.hpp"

#include "cavcoord/errors.hpp"
#include "cavcoord/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cavcoord {

namespace {

// Index of the piece that owns time t: the last piece starting at or before
// t, so a junction belongs to the arc it opens.
template <typename Piece, typename StartFn>
std::size_t locate(const std::vector<Piece>& pieces, double t, StartFn start_of) {
  auto it = std::upper_bound(pieces.begin(), pieces.end(), t,
                             [&](double value, const Piece& p) { return value < start_of(p); });
  if (it == pieces.begin()) return 0;
  return static_cast<std::size_t>(std::distance(pieces.begin(), it) - 1);
}

Stated evaluate_pieces(const std::vector<CubicArcd>& pieces, double t) {
  const std::size_t i = locate(pieces, t, [](const CubicArcd& p) { return p.t_start; });
  return pieces[i].evaluate(t);
}

void out_of_span(double t, double lo, double hi) {
  std::ostringstream msg;
  msg.precision(17);
  msg << "evaluate: t = " << t << " outside trajectory span [" << lo << ", " << hi << "]";
  throw DomainError(msg.str());
}

constexpr double kSpanSlack = 1e-9;

}  // namespace

Stated LeaderOffsetArc::evaluate(double t) const {
  if (pieces.empty()) throw DomainError("LeaderOffsetArc without leader pieces");
  return evaluate_pieces(pieces, t);
}

double arc_start(const Arc& arc) {
  return std::visit([](const auto& a) { return a.t_start; }, arc);
}

double arc_end(const Arc& arc) {
  return std::visit([](const auto& a) { return a.t_end; }, arc);
}

PiecewiseTrajectory::PiecewiseTrajectory(std::vector<Arc> arcs, int vehicle_id, ZoneId zone)
    : arcs_(std::move(arcs)), vehicle_id_(vehicle_id), zone_(std::move(zone)) {
  for (std::size_t i = 1; i < arcs_.size(); ++i)
    if (std::abs(arc_start(arcs_[i]) - arc_end(arcs_[i - 1])) > 1e-9 * std::max(1.0, std::abs(arc_end(arcs_[i - 1]))))
      throw DomainError("PiecewiseTrajectory: arcs are not contiguous in time");
}

double PiecewiseTrajectory::t_start() const {
  if (arcs_.empty()) throw DomainError("empty trajectory");
  return arc_start(arcs_.front());
}

double PiecewiseTrajectory::t_end() const {
  if (arcs_.empty()) throw DomainError("empty trajectory");
  return arc_end(arcs_.back());
}

std::vector<CubicArcd> PiecewiseTrajectory::pieces() const {
  std::vector<CubicArcd> out;
  for (const auto& arc : arcs_) {
    if (const auto* cubic = std::get_if<CubicArcd>(&arc)) {
      out.push_back(*cubic);
    } else {
      const auto& offset = std::get<LeaderOffsetArc>(arc);
      for (const auto& p : offset.pieces) {
        const double lo = std::max(p.t_start, offset.t_start);
        const double hi = std::min(p.t_end, offset.t_end);
        if (hi > lo) {
          CubicArcd piece = p.rebased(lo);
          piece.t_end = hi;
          out.push_back(piece);
        }
      }
    }
  }
  return out;
}

std::vector<double> PiecewiseTrajectory::junctions() const {
  std::vector<double> out;
  for (std::size_t i = 1; i < arcs_.size(); ++i) out.push_back(arc_start(arcs_[i]));
  return out;
}

void PiecewiseTrajectory::append(Arc arc) {
  if (!arcs_.empty()) {
    const double gap = arc_start(arc) - t_end();
    if (std::abs(gap) > 1e-9 * std::max(1.0, std::abs(t_end())))
      throw DomainError("PiecewiseTrajectory::append: arc does not start at the current end");
  }
  arcs_.push_back(std::move(arc));
}

PiecewiseTrajectory PiecewiseTrajectory::shifted(double offset) const {
  PiecewiseTrajectory out = *this;
  for (auto& arc : out.arcs_) {
    if (auto* cubic = std::get_if<CubicArcd>(&arc)) {
      cubic->d += offset;
    } else {
      for (auto& p : std::get<LeaderOffsetArc>(arc).pieces) p.d += offset;
    }
  }
  return out;
}

PiecewiseTrajectory PiecewiseTrajectory::clipped(double lo, double hi) const {
  std::vector<Arc> arcs;
  for (const auto& p : pieces()) {
    const double a = std::max(lo, p.t_start);
    const double b = std::min(hi, p.t_end);
    if (b > a) {
      CubicArcd piece = p.rebased(a);
      piece.t_end = b;
      arcs.emplace_back(piece);
    }
  }
  return PiecewiseTrajectory(std::move(arcs), vehicle_id_, zone_);
}

PiecewiseTrajectory PiecewiseTrajectory::extended_to(double t_final) const {
  PiecewiseTrajectory out = *this;
  if (arcs_.empty() || t_final <= t_end()) return out;
  const double t = t_end();
  const Stated s = evaluate(*this, t);
  out.arcs_.emplace_back(cruise_arc(t, t_final, s.p, s.v));
  return out;
}

Stated evaluate(const PiecewiseTrajectory& traj, double t) {
  if (traj.empty()) throw DomainError("evaluate: empty trajectory");
  const double lo = traj.t_start();
  const double hi = traj.t_end();
  const double slack = kSpanSlack * std::max(1.0, std::abs(hi));
  if (!(t >= lo - slack && t <= hi + slack)) out_of_span(t, lo, hi);
  const auto& arcs = traj.arcs();
  const std::size_t i = locate(arcs, t, [](const Arc& a) { return arc_start(a); });
  return std::visit([t](const auto& arc) { return arc.evaluate(t); }, arcs[i]);
}

double effort(const PiecewiseTrajectory& traj) {
  double total = 0.0;
  for (const auto& p : traj.pieces()) total += p.effort();
  return total;
}

CubicArcd solve_unconstrained(const BvpProblem& problem) {
  if (!(problem.tf > problem.t0))
    throw DomainError("solve_unconstrained: tf must be later than t0");
  using Kind = BoundaryCondition<double>::Kind;
  const std::array<BoundaryCondition<double>, 4> conditions{{
      {Kind::Position, problem.t0, problem.p0},
      {Kind::Speed, problem.t0, problem.v0},
      {Kind::Position, problem.tf, problem.pf},
      problem.vf ? BoundaryCondition<double>{Kind::Speed, problem.tf, *problem.vf}
                 : BoundaryCondition<double>{Kind::Control, problem.tf, 0.0},
  }};
  CubicArcd arc;
  if (!fit_cubic(problem.t0, problem.tf, conditions, arc))
    throw DomainError("solve_unconstrained: singular boundary system");
  return arc;
}

namespace {

// Walks the common breakpoints of two piecewise cubics over [lo, hi] and
// hands each sub-interval's margin polynomial (in time since the
// sub-interval start) to `visit`.
template <typename Visit>
void for_each_margin_piece(const PiecewiseTrajectory& follower, const PiecewiseTrajectory& leader, double delta,
                           double lo, double hi, Visit&& visit) {
  const std::vector<CubicArcd> fp = follower.pieces();
  const std::vector<CubicArcd> lp = leader.pieces();
  std::vector<double> cuts{lo, hi};
  for (const auto& p : fp)
    if (p.t_start > lo && p.t_start < hi) cuts.push_back(p.t_start);
  for (const auto& p : lp)
    if (p.t_start > lo && p.t_start < hi) cuts.push_back(p.t_start);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    if (!(b > a)) continue;
    const double mid = a + (b - a) / 2;
    const CubicArcd f = fp[locate(fp, mid, [](const CubicArcd& p) { return p.t_start; })].rebased(a);
    const CubicArcd g = lp[locate(lp, mid, [](const CubicArcd& p) { return p.t_start; })].rebased(a);
    Poly3<double> margin;
    margin.c = {g.d - f.d - delta, g.c - f.c, (g.b - f.b) / 2, (g.a - f.a) / 6};
    visit(a, b, margin);
  }
}

TimeInterval clamp_overlap(const PiecewiseTrajectory& follower, const PiecewiseTrajectory& leader,
                           TimeInterval overlap) {
  if (follower.empty() || leader.empty()) throw DomainError("rear-end check on an empty trajectory");
  return {std::max({overlap.start, follower.t_start(), leader.t_start()}),
          std::min({overlap.end, follower.t_end(), leader.t_end()})};
}

}  // namespace

std::vector<TimeInterval> find_rear_end_violations(const PiecewiseTrajectory& follower,
                                                   const PiecewiseTrajectory& leader, double delta,
                                                   TimeInterval overlap, double tolerance) {
  const TimeInterval window = clamp_overlap(follower, leader, overlap);
  std::vector<TimeInterval> out;
  if (!(window.end > window.start)) return out;
  for_each_margin_piece(follower, leader, delta, window.start, window.end,
                        [&](double a, double b, const Poly3<double>& margin) {
                          for (const auto& [lo, hi] : negative_intervals(margin, 0.0, b - a, tolerance)) {
                            const TimeInterval iv{a + lo, a + hi};
                            if (!out.empty() && out.back().end >= iv.start - 1e-12)
                              out.back().end = iv.end;
                            else
                              out.push_back(iv);
                          }
                        });
  return out;
}

std::optional<TimeInterval> detect_rear_end_violation(const CubicArcd& follower, const PiecewiseTrajectory& leader,
                                                      double delta, TimeInterval overlap) {
  const auto intervals = find_rear_end_violations(PiecewiseTrajectory({follower}), leader, delta, overlap);
  if (intervals.empty()) return std::nullopt;
  return intervals.front();
}

MarginMinimum min_rear_end_margin(const PiecewiseTrajectory& follower, const PiecewiseTrajectory& leader,
                                  double delta, TimeInterval overlap) {
  const TimeInterval window = clamp_overlap(follower, leader, overlap);
  MarginMinimum best{std::numeric_limits<double>::infinity(), window.start};
  if (!(window.end >= window.start)) return best;
  if (window.end == window.start) {
    best.margin = evaluate(leader, window.start).p - evaluate(follower, window.start).p - delta;
    return best;
  }
  for_each_margin_piece(follower, leader, delta, window.start, window.end,
                        [&](double a, double b, const Poly3<double>& margin) {
                          const auto [value, x] = poly_min(margin, 0.0, b - a);
                          if (value < best.margin) best = {value, a + x};
                        });
  return best;
}

const char* to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::SpeedAboveMax:
      return "speed_above_max";
    case BoundKind::SpeedBelowMin:
      return "speed_below_min";
    case BoundKind::ControlAboveMax:
      return "control_above_max";
    case BoundKind::ControlBelowMin:
      return "control_below_min";
  }
  return "unknown";
}

std::vector<BoundExcursion> check_bounds(const PiecewiseTrajectory& traj, const GlobalParams& params,
                                         double tolerance) {
  std::vector<BoundExcursion> out;
  auto add = [&](BoundKind kind, double lo, double hi, double extreme) {
    for (auto& e : out) {
      if (e.kind == kind && std::abs(e.t_end - lo) < 1e-12) {
        e.t_end = hi;
        e.extreme = (kind == BoundKind::SpeedAboveMax || kind == BoundKind::ControlAboveMax)
                        ? std::max(e.extreme, extreme)
                        : std::min(e.extreme, extreme);
        return;
      }
    }
    out.push_back({kind, lo, hi, extreme});
  };
  for (const auto& p : traj.pieces()) {
    const double T = p.duration();
    // Speed and control as polynomials in time since the piece start; an
    // excursion above a limit is a negative interval of (limit - value).
    const Poly3<double> v{{p.c, p.b, p.a / 2, 0.0}};
    const Poly3<double> u{{p.b, p.a, 0.0, 0.0}};
    auto scan = [&](const Poly3<double>& value, double limit, bool upper, BoundKind kind) {
      Poly3<double> slack = value;
      for (auto& c : slack.c) c = upper ? -c : c;
      slack.c[0] += upper ? limit : -limit;
      for (const auto& [lo, hi] : negative_intervals(slack, 0.0, T, tolerance)) {
        const double worst = -poly_min(slack, lo, hi).first;
        add(kind, p.t_start + lo, p.t_start + hi, upper ? limit + worst : limit - worst);
      }
    };
    scan(v, params.v_max, true, BoundKind::SpeedAboveMax);
    scan(v, params.v_min, false, BoundKind::SpeedBelowMin);
    scan(u, params.u_max, true, BoundKind::ControlAboveMax);
    scan(u, params.u_min, false, BoundKind::ControlBelowMin);
  }
  std::sort(out.begin(), out.end(), [](const BoundExcursion& x, const BoundExcursion& y) {
    return x.t_start != y.t_start ? x.t_start < y.t_start : x.kind < y.kind;
  });
  return out;
}

CostateRecord costates(const PiecewiseTrajectory& traj) {
  CostateRecord record;
  const auto& arcs = traj.arcs();
  auto next_free = [&](std::size_t i) -> const CubicArcd* {
    for (std::size_t j = i + 1; j < arcs.size(); ++j)
      if (const auto* c = std::get_if<CubicArcd>(&arcs[j])) return c;
    return nullptr;
  };
  for (std::size_t i = 0; i < arcs.size(); ++i) {
    ArcCostate ac;
    ac.t_start = arc_start(arcs[i]);
    ac.t_end = arc_end(arcs[i]);
    if (const auto* c = std::get_if<CubicArcd>(&arcs[i])) {
      ac.lambda_p = c->a;
      ac.lambda_v_start = -c->control(ac.t_start);
      ac.lambda_v_end = -c->control(ac.t_end);
    } else {
      const auto& con = std::get<LeaderOffsetArc>(arcs[i]);
      ac.constrained = true;
      double u_exit = 0.0;
      double t_exit = ac.t_end;
      double slope = 0.0;
      if (const CubicArcd* free = next_free(i)) {
        u_exit = free->control(free->t_start);
        t_exit = free->t_start;
        slope = free->a;
      } else {
        // Constrained until the end: transversality pins lambda_v(tf) = 0.
        slope = con.pieces.back().a;
      }
      ac.lambda_p = slope;
      auto lambda_v = [&](double t) { return -(slope * (t - t_exit) + u_exit); };
      auto eta_c = [&](double t) { return -con.evaluate(t).u - lambda_v(t); };
      ac.lambda_v_start = lambda_v(ac.t_start);
      ac.lambda_v_end = lambda_v(ac.t_end);
      ac.eta_c_start = eta_c(ac.t_start);
      ac.eta_c_end = eta_c(ac.t_end);
      ac.eta_c_min = std::min(ac.eta_c_start, ac.eta_c_end);
      // eta_c is piecewise affine between leader breakpoints.
      for (const auto& p : con.pieces)
        if (p.t_start > ac.t_start && p.t_start < ac.t_end) ac.eta_c_min = std::min(ac.eta_c_min, eta_c(p.t_start));
    }
    record.arcs.push_back(ac);
  }
  for (std::size_t i = 1; i < record.arcs.size(); ++i) {
    const auto& before = record.arcs[i - 1];
    const auto& after = record.arcs[i];
    JunctionMultipliers j;
    j.t = after.t_start;
    if (after.constrained)
      j.kind = JunctionMultipliers::Kind::Entry;
    else if (before.constrained)
      j.kind = JunctionMultipliers::Kind::Exit;
    else
      j.kind = JunctionMultipliers::Kind::Touch;
    j.pi1 = before.lambda_p - after.lambda_p;
    j.pi2 = before.lambda_v_end - after.lambda_v_start;
    record.junctions.push_back(j);
  }
  return record;
}

}  // namespace cavcoord

namespace cavcoord {

namespace {

// Appends braking at `brake` from the terminal state until standstill.
PiecewiseTrajectory with_brake_to_stop(PiecewiseTrajectory traj, double brake) {
  const double t = traj.t_end();
  const Stated end = evaluate(traj, t);
  if (end.v > 0) traj.append(CubicArcd{0.0, -brake, end.v, end.p, t, t + end.v / brake});
  return traj;
}

}  // namespace

double max_safe_cruise_speed(const PiecewiseTrajectory& leader, double delta, double t_start, double p_start,
                             double length, double v_cap, std::optional<double> brake, double tolerance) {
  auto safe = [&](double v) {
    if (!(v > 0)) return true;
    const double t_cruise = t_start + length / v;
    PiecewiseTrajectory own({cruise_arc(t_start, t_cruise, p_start, v)});
    PiecewiseTrajectory lead = leader.extended_to(t_cruise);
    if (brake) {
      own = with_brake_to_stop(own, *brake);
      lead = with_brake_to_stop(lead.t_end() > t_cruise ? lead : lead.extended_to(t_cruise), *brake);
    }
    const double t_end = std::max(own.t_end(), lead.t_end());
    return min_rear_end_margin(own.extended_to(t_end), lead.extended_to(t_end), delta, {t_start, t_end}).margin >=
           -tolerance;
  };
  if (safe(v_cap)) return v_cap;
  // Feasible speeds form an interval [0, v*] as long as the leader never
  // moves backwards.
  double lo = 0.0;
  double hi = v_cap;
  while (hi - lo > tolerance * std::max(1.0, v_cap)) {
    const double mid = 0.5 * (lo + hi);
    (safe(mid) ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace cavcoord
