#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>

namespace cavcoord {

/// Kinematic state sampled on a trajectory.
template <typename Scalar>
struct State {
  Scalar p{0};  ///< position [m]
  Scalar v{0};  ///< speed [m/s]
  Scalar u{0};  ///< control (acceleration) [m/s^2]
};

using Stated = State<double>;

/// Minimum-effort arc of the double integrator: the control is affine in
/// time, so speed is quadratic and position cubic.
///
/// Coefficients are referenced to the arc's own start time. With
/// tau = t - t_start:
///
///   u(t) = a tau + b
///   v(t) = a tau^2 / 2 + b tau + c
///   p(t) = a tau^3 / 6 + b tau^2 / 2 + c tau + d
///
/// so (c, d) are the speed and position at t_start. Keeping the origin local
/// avoids the cancellation that absolute-time coefficients suffer late in a
/// long simulation. absolute_coefficients() converts to the t-origin form.
template <typename Scalar>
struct CubicArc {
  Scalar a{0};
  Scalar b{0};
  Scalar c{0};
  Scalar d{0};
  Scalar t_start{0};
  Scalar t_end{0};

  Scalar duration() const { return t_end - t_start; }

  Scalar control(Scalar t) const { return a * (t - t_start) + b; }

  Scalar speed(Scalar t) const {
    const Scalar tau = t - t_start;
    return (a * tau / 2 + b) * tau + c;
  }

  Scalar position(Scalar t) const {
    const Scalar tau = t - t_start;
    return ((a * tau / 6 + b / 2) * tau + c) * tau + d;
  }

  State<Scalar> evaluate(Scalar t) const { return {position(t), speed(t), control(t)}; }

  /// Same motion, coefficients re-referenced to `origin` (Taylor shift).
  CubicArc rebased(Scalar origin) const {
    const State<Scalar> s = evaluate(origin);
    return CubicArc{a, s.u, s.v, s.p, origin, t_end};
  }

  /// Same motion shifted along the path by `offset` metres.
  CubicArc shifted(Scalar offset) const {
    CubicArc out = *this;
    out.d += offset;
    return out;
  }

  /// Coefficients (a, b, c, d) such that u = a t + b, v = a t^2/2 + b t + c,
  /// p = a t^3/6 + b t^2/2 + c t + d in absolute time.
  std::array<Scalar, 4> absolute_coefficients() const {
    const CubicArc z = rebased(Scalar(0));
    return {z.a, z.b, z.c, z.d};
  }

  /// Half the integral of u^2 over the arc.
  Scalar effort() const {
    const Scalar T = duration();
    return (a * a * T * T * T / 3 + a * b * T * T + b * b * T) / 2;
  }
};

using CubicArcd = CubicArc<double>;

/// Constant-speed arc starting at (t_start, p, v).
template <typename Scalar>
CubicArc<Scalar> cruise_arc(Scalar t_start, Scalar t_end, Scalar p, Scalar v) {
  return CubicArc<Scalar>{Scalar(0), Scalar(0), v, p, t_start, t_end};
}

/// A single linear boundary condition on a cubic arc.
template <typename Scalar>
struct BoundaryCondition {
  enum class Kind { Position, Speed, Control };
  Kind kind;
  Scalar t;
  Scalar value;
};

/// Row of the boundary matrix acting on (a, b, c, d) for a condition at
/// relative time tau.
template <typename Scalar>
Eigen::Matrix<Scalar, 1, 4> boundary_row(typename BoundaryCondition<Scalar>::Kind kind, Scalar tau) {
  using Kind = typename BoundaryCondition<Scalar>::Kind;
  Eigen::Matrix<Scalar, 1, 4> row;
  switch (kind) {
    case Kind::Position:
      row << tau * tau * tau / 6, tau * tau / 2, tau, Scalar(1);
      break;
    case Kind::Speed:
      row << tau * tau / 2, tau, Scalar(1), Scalar(0);
      break;
    case Kind::Control:
      row << tau, Scalar(1), Scalar(0), Scalar(0);
      break;
  }
  return row;
}

/// Solves the 4x4 linear system that pins a cubic arc on [t_start, t_end] to
/// four boundary conditions. Returns false if the system is singular.
template <typename Scalar>
bool fit_cubic(Scalar t_start, Scalar t_end, const std::array<BoundaryCondition<Scalar>, 4>& conditions,
               CubicArc<Scalar>& out) {
  Eigen::Matrix<Scalar, 4, 4> M;
  Eigen::Matrix<Scalar, 4, 1> rhs;
  for (int i = 0; i < 4; ++i) {
    M.row(i) = boundary_row<Scalar>(conditions[i].kind, conditions[i].t - t_start);
    rhs(i) = conditions[i].value;
  }
  const Eigen::FullPivLU<Eigen::Matrix<Scalar, 4, 4>> lu(M);
  if (!lu.isInvertible()) return false;
  Eigen::Matrix<Scalar, 4, 1> x = lu.solve(rhs);
  // One step of iterative refinement keeps residuals at round-off level.
  x += lu.solve(rhs - M * x);
  out = CubicArc<Scalar>{x(0), x(1), x(2), x(3), t_start, t_end};
  return true;
}

}  // namespace cavcoord
