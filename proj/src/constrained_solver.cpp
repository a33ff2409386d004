#include "cavcoord/errors.hpp"
#include "cavcoord/polynomial.hpp"
#include "cavcoord/trajectory.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace cavcoord {

namespace {

using Kind = BoundaryCondition<double>::Kind;

// The leader's path offset by -delta: the follower's position ceiling.
class Ceiling {
 public:
  Ceiling(const PiecewiseTrajectory& leader, double delta, double t0, double tf)
      : leader_id_(leader.vehicle_id()), delta_(delta) {
    if (leader.t_start() > t0 + 1e-9)
      throw DomainError("solve_constrained: leader trajectory starts after the follower enters");
    const PiecewiseTrajectory view = leader.extended_to(tf).clipped(t0, tf).shifted(-delta);
    pieces_ = view.pieces();
    if (pieces_.empty()) throw DomainError("solve_constrained: empty leader trajectory");
  }

  Stated at(double t) const { return pieces_[index(t)].evaluate(t); }
  double jerk_right(double t) const { return pieces_[index(t)].a; }
  double jerk_left(double t) const {
    std::size_t i = index(t);
    if (i > 0 && t <= pieces_[i].t_start) --i;
    return pieces_[i].a;
  }

  /// Breakpoints strictly inside (lo, hi).
  std::vector<double> breakpoints(double lo, double hi) const {
    std::vector<double> out;
    for (const auto& p : pieces_)
      if (p.t_start > lo && p.t_start < hi) out.push_back(p.t_start);
    return out;
  }

  LeaderOffsetArc arc(double lo, double hi) const {
    LeaderOffsetArc out;
    out.leader_id = leader_id_;
    out.delta = delta_;
    out.t_start = lo;
    out.t_end = hi;
    for (const auto& p : pieces_) {
      const double a = std::max(lo, p.t_start);
      const double b = std::min(hi, p.t_end);
      if (b > a) {
        CubicArcd piece = p.rebased(a);
        piece.t_end = b;
        out.pieces.push_back(piece);
      }
    }
    return out;
  }

  PiecewiseTrajectory as_trajectory() const {
    std::vector<Arc> arcs(pieces_.begin(), pieces_.end());
    return PiecewiseTrajectory(std::move(arcs));
  }

 private:
  std::size_t index(double t) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), t,
                               [](double value, const CubicArcd& p) { return value < p.t_start; });
    if (it == pieces_.begin()) return 0;
    return static_cast<std::size_t>(std::distance(pieces_.begin(), it) - 1);
  }

  int leader_id_;
  double delta_;
  std::vector<CubicArcd> pieces_;
};

int unknowns(const Contact& c) { return c.kind == Contact::Kind::Arc ? 2 : 1; }

Eigen::VectorXd pack(const std::vector<Contact>& contacts) {
  int n = 0;
  for (const auto& c : contacts) n += unknowns(c);
  Eigen::VectorXd x(n);
  int k = 0;
  for (const auto& c : contacts) {
    x(k++) = c.entry;
    if (c.kind == Contact::Kind::Arc) x(k++) = c.exit;
  }
  return x;
}

void unpack(const Eigen::VectorXd& x, std::vector<Contact>& contacts, double tf) {
  int k = 0;
  for (auto& c : contacts) {
    c.entry = x(k++);
    switch (c.kind) {
      case Contact::Kind::Arc:
        c.exit = x(k++);
        break;
      case Contact::Kind::Touch:
        c.exit = c.entry;
        break;
      case Contact::Kind::ArcToEnd:
        c.exit = tf;
        break;
    }
  }
}

bool ordered(const std::vector<Contact>& contacts, double t0, double tf) {
  const double gap = 1e-7 * std::max(1.0, tf - t0);
  double cursor = t0;
  for (std::size_t i = 0; i < contacts.size(); ++i) {
    const auto& c = contacts[i];
    if (!(c.entry > cursor + gap)) return false;
    if (c.kind == Contact::Kind::Arc && !(c.exit > c.entry + gap)) return false;
    if (c.kind == Contact::Kind::ArcToEnd && i + 1 != contacts.size()) return false;
    cursor = c.exit;
  }
  if (!contacts.empty() && contacts.back().kind == Contact::Kind::ArcToEnd) return true;
  return tf > cursor + gap;
}

// Free arcs and constrained arcs for a given contact layout, plus the
// control-continuity residuals at every junction.
struct Assembly {
  std::vector<Arc> arcs;
  std::vector<CubicArcd> free_arcs;  // in order; free_arcs[j] precedes contact j
  Eigen::VectorXd residual;
};

std::optional<Assembly> assemble(const BvpProblem& problem, const Ceiling& ceiling,
                                 const std::vector<Contact>& contacts) {
  Assembly out;
  double t = problem.t0;
  double p = problem.p0;
  double v = problem.v0;
  for (const auto& c : contacts) {
    const Stated g = ceiling.at(c.entry);
    CubicArcd free;
    if (!fit_cubic(t, c.entry,
                   std::array<BoundaryCondition<double>, 4>{{{Kind::Position, t, p},
                                                            {Kind::Speed, t, v},
                                                            {Kind::Position, c.entry, g.p},
                                                            {Kind::Speed, c.entry, g.v}}},
                   free))
      return std::nullopt;
    out.free_arcs.push_back(free);
    out.arcs.emplace_back(free);
    if (c.kind != Contact::Kind::Touch) out.arcs.emplace_back(ceiling.arc(c.entry, c.exit));
    const Stated e = ceiling.at(c.exit);
    t = c.exit;
    p = e.p;
    v = e.v;
  }
  const BoundaryCondition<double> terminal = problem.vf
                                                 ? BoundaryCondition<double>{Kind::Speed, problem.tf, *problem.vf}
                                                 : BoundaryCondition<double>{Kind::Control, problem.tf, 0.0};
  const bool ends_constrained = !contacts.empty() && contacts.back().kind == Contact::Kind::ArcToEnd;
  if (!ends_constrained) {
    CubicArcd last;
    if (!fit_cubic(t, problem.tf,
                   std::array<BoundaryCondition<double>, 4>{{{Kind::Position, t, p},
                                                            {Kind::Speed, t, v},
                                                            {Kind::Position, problem.tf, problem.pf},
                                                            terminal}},
                   last))
      return std::nullopt;
    out.free_arcs.push_back(last);
    out.arcs.emplace_back(last);
  }

  int n = 0;
  for (const auto& c : contacts) n += unknowns(c);
  out.residual.resize(n);
  int k = 0;
  for (std::size_t j = 0; j < contacts.size(); ++j) {
    const auto& c = contacts[j];
    const double u_in = out.free_arcs[j].control(c.entry);
    switch (c.kind) {
      case Contact::Kind::Touch:
        out.residual(k++) = u_in - out.free_arcs[j + 1].control(c.entry);
        break;
      case Contact::Kind::Arc:
        out.residual(k++) = u_in - ceiling.at(c.entry).u;
        out.residual(k++) = out.free_arcs[j + 1].control(c.exit) - ceiling.at(c.exit).u;
        break;
      case Contact::Kind::ArcToEnd:
        out.residual(k++) = u_in - ceiling.at(c.entry).u;
        break;
    }
  }
  return out;
}

struct NewtonResult {
  bool converged = false;
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();
};

NewtonResult newton(const BvpProblem& problem, const Ceiling& ceiling, std::vector<Contact>& contacts,
                    const SolverOptions& options) {
  NewtonResult result;
  if (!ordered(contacts, problem.t0, problem.tf)) return result;
  auto residual_at = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r) {
    std::vector<Contact> trial = contacts;
    unpack(x, trial, problem.tf);
    if (!ordered(trial, problem.t0, problem.tf)) return false;
    const auto assembly = assemble(problem, ceiling, trial);
    if (!assembly) return false;
    r = assembly->residual;
    return r.allFinite();
  };

  Eigen::VectorXd x = pack(contacts);
  Eigen::VectorXd r;
  if (!residual_at(x, r)) return result;
  const int n = static_cast<int>(x.size());
  for (int it = 0; it < options.max_newton_iterations; ++it) {
    result.iterations = it;
    result.residual = r.lpNorm<Eigen::Infinity>();
    if (result.residual < options.residual_tolerance) {
      result.converged = true;
      unpack(x, contacts, problem.tf);
      return result;
    }
    Eigen::MatrixXd J(n, n);
    for (int k = 0; k < n; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(x(k)));
      Eigen::VectorXd xp = x, xm = x, rp, rm;
      xp(k) += h;
      xm(k) -= h;
      const bool ok_p = residual_at(xp, rp);
      const bool ok_m = residual_at(xm, rm);
      if (ok_p && ok_m)
        J.col(k) = (rp - rm) / (2 * h);
      else if (ok_p)
        J.col(k) = (rp - r) / h;
      else if (ok_m)
        J.col(k) = (r - rm) / h;
      else
        return result;
    }
    const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-r);
    if (!step.allFinite()) return result;
    // Damped step: halve until the iterate keeps the junctions ordered and
    // the residual decreases.
    double alpha = 1.0;
    bool accepted = false;
    const double norm = r.norm();
    while (alpha > 1e-10) {
      Eigen::VectorXd x_new = x + alpha * step;
      Eigen::VectorXd r_new;
      if (residual_at(x_new, r_new) && r_new.norm() < (1 - 1e-4 * alpha) * norm) {
        x = x_new;
        r = r_new;
        accepted = true;
        break;
      }
      alpha /= 2;
    }
    if (!accepted) {
      // Stalled at roundoff level: accept if within the continuity tolerance
      // that junctions are held to.
      result.converged = result.residual < 1e3 * options.residual_tolerance;
      if (result.converged) unpack(x, contacts, problem.tf);
      return result;
    }
  }
  result.residual = r.lpNorm<Eigen::Infinity>();
  result.converged = result.residual < options.residual_tolerance;
  result.iterations = options.max_newton_iterations;
  if (result.converged) unpack(x, contacts, problem.tf);
  return result;
}

struct Candidate {
  std::vector<Contact> contacts;
  PiecewiseTrajectory trajectory;
  std::vector<TimeInterval> violations;
  bool multipliers_ok = true;
  double effort = 0.0;
  NewtonResult newton;
};

// Nonnegativity of the rear-end multiplier measure: the slope of u may only
// drop where the follower meets the ceiling.
bool multipliers_nonnegative(const Assembly& assembly, const Ceiling& ceiling, const std::vector<Contact>& contacts,
                             double tol) {
  for (std::size_t j = 0; j < contacts.size(); ++j) {
    const auto& c = contacts[j];
    const double slope_in = assembly.free_arcs[j].a;
    switch (c.kind) {
      case Contact::Kind::Touch:
        if (slope_in - assembly.free_arcs[j + 1].a < -tol) return false;
        break;
      case Contact::Kind::Arc:
      case Contact::Kind::ArcToEnd:
        if (slope_in - ceiling.jerk_right(c.entry) < -tol) return false;
        for (double b : ceiling.breakpoints(c.entry, c.exit))
          if (ceiling.jerk_left(b) - ceiling.jerk_right(b) < -tol) return false;
        if (c.kind == Contact::Kind::Arc && ceiling.jerk_left(c.exit) - assembly.free_arcs[j + 1].a < -tol)
          return false;
        break;
    }
  }
  return true;
}

std::optional<Candidate> build_candidate(const BvpProblem& problem, const Ceiling& ceiling,
                                         const PiecewiseTrajectory& ceiling_traj, std::vector<Contact> contacts,
                                         const SolverOptions& options) {
  Candidate cand;
  cand.newton = newton(problem, ceiling, contacts, options);
  if (!cand.newton.converged) return std::nullopt;
  const auto assembly = assemble(problem, ceiling, contacts);
  if (!assembly) return std::nullopt;
  if (!contacts.empty() && contacts.back().kind == Contact::Kind::ArcToEnd) {
    const Stated end = ceiling.at(problem.tf);
    const bool end_matches = problem.vf ? std::abs(end.v - *problem.vf) <= options.feasibility_tolerance
                                        : std::abs(end.u) <= options.residual_tolerance * 10;
    if (std::abs(end.p - problem.pf) > options.feasibility_tolerance || !end_matches)
      return std::nullopt;
  }
  cand.contacts = contacts;
  cand.trajectory = PiecewiseTrajectory(assembly->arcs);
  cand.violations = find_rear_end_violations(cand.trajectory, ceiling_traj, 0.0, {problem.t0, problem.tf},
                                             options.feasibility_tolerance);
  cand.multipliers_ok = multipliers_nonnegative(*assembly, ceiling, contacts, options.multiplier_tolerance);
  cand.effort = effort(cand.trajectory);
  return cand;
}

bool certified(const Candidate& c) { return c.violations.empty() && c.multipliers_ok; }

std::vector<Contact> with_contact(std::vector<Contact> contacts, const Contact& extra) {
  contacts.push_back(extra);
  std::sort(contacts.begin(), contacts.end(), [](const Contact& x, const Contact& y) { return x.entry < y.entry; });
  return contacts;
}

// Roots of the single-touch residual found by scanning (t0, tf).
std::vector<double> scan_touch_points(const BvpProblem& problem, const Ceiling& ceiling) {
  const int samples = 240;
  const double span = problem.tf - problem.t0;
  const double lo = problem.t0 + 1e-3 * span;
  const double hi = problem.tf - 1e-3 * span;
  auto residual = [&](double t) {
    const auto a = assemble(problem, ceiling, {Contact{Contact::Kind::Touch, t, t}});
    return a ? a->residual(0) : std::numeric_limits<double>::quiet_NaN();
  };
  // Geometric samples near t0 catch contacts forced right after entry.
  std::vector<double> grid;
  for (int k = 7; k > 3; --k) grid.push_back(problem.t0 + span * std::pow(10.0, -k));
  for (int i = 0; i <= samples; ++i) grid.push_back(lo + (hi - lo) * i / samples);
  std::vector<double> roots;
  double t_prev = grid.front();
  double r_prev = residual(t_prev);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t = grid[i];
    const double r = residual(t);
    if (std::isfinite(r) && std::isfinite(r_prev) && ((r_prev < 0) != (r < 0)))
      roots.push_back(bisect(residual, t_prev, t, r_prev));
    t_prev = t;
    r_prev = r;
  }
  return roots;
}

}  // namespace

ConstrainedSolution solve_constrained_detailed(const BvpProblem& problem, const SolverOptions& options) {
  const CubicArcd free = solve_unconstrained(problem);
  ConstrainedSolution solution;
  solution.trajectory = PiecewiseTrajectory({free});
  if (!problem.leader || problem.leader->empty()) return solution;

  const Ceiling ceiling(*problem.leader, problem.delta, problem.t0, problem.tf);
  const PiecewiseTrajectory ceiling_traj = ceiling.as_trajectory();
  const TimeInterval window{problem.t0, problem.tf};

  auto violations =
      find_rear_end_violations(solution.trajectory, ceiling_traj, 0.0, window, options.feasibility_tolerance);
  if (violations.empty()) return solution;

  const double start_margin = ceiling.at(problem.t0).p - problem.p0;
  if (start_margin < -options.feasibility_tolerance)
    throw SolverError("solve_constrained: follower starts closer than the safe distance");
  const double end_margin = ceiling.at(problem.tf).p - problem.pf;
  if (end_margin < -options.feasibility_tolerance) {
    std::ostringstream msg;
    msg << "solve_constrained: infeasible, the leader is only " << end_margin + problem.delta
        << " m ahead of the terminal position at tf (safe distance " << problem.delta << " m)";
    throw SolverError(msg.str());
  }

  std::vector<Contact> contacts;
  Candidate current;
  current.trajectory = solution.trajectory;
  current.violations = violations;
  int total_iterations = 0;
  double residual = 0.0;

  for (int round = 0; round < options.max_structure_iterations; ++round) {
    const TimeInterval v = current.violations.front();
    const double width = std::max(v.end - v.start, 1e-3);
    const double widen = options.initial_widening * width;
    // Neighbouring contacts bound where the new one may sit.
    double lo = problem.t0;
    double hi = problem.tf;
    for (const auto& c : contacts) {
      if (c.exit <= v.start) lo = std::max(lo, c.exit);
      if (c.entry >= v.end) hi = std::min(hi, c.entry);
    }
    const double pad = 1e-4 * (hi - lo);
    const double entry = std::clamp(v.start - widen, lo + pad, hi - 2 * pad);
    const double exit = std::clamp(v.end + widen, entry + pad, hi - pad);
    const double deepest = min_rear_end_margin(current.trajectory, ceiling_traj, 0.0, v).t;

    std::vector<Candidate> candidates;
    auto consider = [&](const std::vector<Contact>& layout) {
      if (auto c = build_candidate(problem, ceiling, ceiling_traj, layout, options)) {
        total_iterations += c->newton.iterations;
        candidates.push_back(std::move(*c));
      }
    };
    consider(with_contact(contacts, {Contact::Kind::Arc, entry, exit}));
    consider(with_contact(contacts, {Contact::Kind::Touch, deepest, deepest}));
    if (contacts.empty() || contacts.back().exit <= v.start)
      consider(with_contact(contacts, {Contact::Kind::ArcToEnd, entry, problem.tf}));
    if (contacts.empty() && std::none_of(candidates.begin(), candidates.end(), certified)) {
      for (double t : scan_touch_points(problem, ceiling)) consider({{Contact::Kind::Touch, t, t}});
    }

    // Equal-effort layouts (a constrained arc ending a hair before tf versus
    // one lasting to tf) are resolved towards fewer arcs.
    auto better = [](const Candidate& x, const Candidate& y) {
      const double tie = 1e-9 * std::max(1.0, y.effort);
      if (std::abs(x.effort - y.effort) <= tie) return x.trajectory.arcs().size() < y.trajectory.arcs().size();
      return x.effort < y.effort;
    };
    const Candidate* best = nullptr;
    for (const auto& c : candidates) {
      if (certified(c) && (!best || better(c, *best))) best = &c;
    }
    if (best) {
      solution.trajectory = best->trajectory;
      solution.contacts = best->contacts;
      solution.newton_iterations = total_iterations;
      solution.max_residual = std::max(residual, best->newton.residual);
      return solution;
    }
    // No certified layout yet: keep the admissible one with the fewest
    // remaining violations and resolve those next.
    for (const auto& c : candidates) {
      if (!c.multipliers_ok) continue;
      if (!best || c.violations.size() < best->violations.size() ||
          (c.violations.size() == best->violations.size() && c.effort < best->effort))
        best = &c;
    }
    if (!best) break;
    current = *best;
    contacts = best->contacts;
    residual = std::max(residual, best->newton.residual);
  }

  std::ostringstream msg;
  msg << "solve_constrained: no admissible constrained-arc layout found (t0=" << problem.t0 << ", tf=" << problem.tf
      << ", v0=" << problem.v0 << ", pf=" << problem.pf << ", first violation [" << violations.front().start << ", "
      << violations.front().end << "])";
  throw SolverError(msg.str());
}

PiecewiseTrajectory solve_constrained(const BvpProblem& problem, const SolverOptions& options) {
  return solve_constrained_detailed(problem, options).trajectory;
}

}  // namespace cavcoord
