#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace cavcoord {

/// Polynomial of degree <= 3 in power basis: c[0] + c[1] x + c[2] x^2 + c[3] x^3.
template <typename Scalar>
struct Poly3 {
  std::array<Scalar, 4> c{};

  Scalar operator()(Scalar x) const { return ((c[3] * x + c[2]) * x + c[1]) * x + c[0]; }
  Scalar derivative(Scalar x) const { return (3 * c[3] * x + 2 * c[2]) * x + c[1]; }
};

/// Real roots of a x^2 + b x + c in ascending order (degenerate leading
/// coefficients fall back to the linear case).
template <typename Scalar>
std::vector<Scalar> quadratic_roots(Scalar a, Scalar b, Scalar c) {
  std::vector<Scalar> roots;
  const Scalar scale = std::max({std::abs(a), std::abs(b), std::abs(c), Scalar(1e-300)});
  if (std::abs(a) <= 1e-14 * scale) {
    if (std::abs(b) > 1e-14 * scale) roots.push_back(-c / b);
    return roots;
  }
  const Scalar disc = b * b - 4 * a * c;
  if (disc < 0) return roots;
  const Scalar sq = std::sqrt(disc);
  // Numerically stable pairing.
  const Scalar q = -(b + std::copysign(sq, b)) / 2;
  roots.push_back(q / a);
  if (q != 0) roots.push_back(c / q);
  std::sort(roots.begin(), roots.end());
  return roots;
}

/// Bisection for a root of f on [lo, hi] assuming f(lo) and f(hi) differ in sign.
template <typename Scalar, typename F>
Scalar bisect(F&& f, Scalar lo, Scalar hi, Scalar flo) {
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    const Scalar fm = f(mid);
    if (fm == 0) return mid;
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return lo + (hi - lo) / 2;
}

/// Splits [lo, hi] at the stationary points of `p`, giving sub-intervals on
/// which `p` is monotone.
template <typename Scalar>
std::vector<Scalar> monotone_breakpoints(const Poly3<Scalar>& p, Scalar lo, Scalar hi) {
  std::vector<Scalar> pts{lo};
  for (Scalar r : quadratic_roots<Scalar>(3 * p.c[3], 2 * p.c[2], p.c[1]))
    if (r > lo && r < hi) pts.push_back(r);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  return pts;
}

/// Minimum of `p` on [lo, hi] and its argument.
template <typename Scalar>
std::pair<Scalar, Scalar> poly_min(const Poly3<Scalar>& p, Scalar lo, Scalar hi) {
  Scalar best_x = lo;
  Scalar best = p(lo);
  for (Scalar x : monotone_breakpoints(p, lo, hi)) {
    const Scalar val = p(x);
    if (val < best) {
      best = val;
      best_x = x;
    }
  }
  return {best, best_x};
}

/// Maximal sub-intervals of [lo, hi] on which p < -tol. Endpoints are the
/// roots of p (or lo/hi when the interval touches the boundary).
template <typename Scalar>
std::vector<std::pair<Scalar, Scalar>> negative_intervals(const Poly3<Scalar>& p, Scalar lo, Scalar hi,
                                                          Scalar tol) {
  std::vector<std::pair<Scalar, Scalar>> out;
  if (!(hi > lo)) return out;
  // Roots of p on [lo, hi], one per monotone piece with a sign change.
  const std::vector<Scalar> pts = monotone_breakpoints(p, lo, hi);
  std::vector<Scalar> cuts{lo};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Scalar fa = p(pts[i]);
    const Scalar fb = p(pts[i + 1]);
    if ((fa < 0 && fb > 0) || (fa > 0 && fb < 0))
      cuts.push_back(bisect([&](Scalar x) { return p(x); }, pts[i], pts[i + 1], fa));
  }
  cuts.push_back(hi);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Scalar a = cuts[i];
    const Scalar b = cuts[i + 1];
    if (!(b > a)) continue;
    if (poly_min(p, a, b).first < -tol) {
      if (!out.empty() && out.back().second >= a)
        out.back().second = b;
      else
        out.emplace_back(a, b);
    }
  }
  return out;
}

}  // namespace cavcoord
