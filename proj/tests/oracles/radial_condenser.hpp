#pragma once

// Independent reference for spherical condensers cap_p(B_r, B_R) in R^N.
// The radial Euler-Lagrange equation (|u'|^{p-2} u' s^{N-1})' = 0 gives the
// first integral |u'| = (C / s^{N-1})^{1/(p-1)}; C follows from u(r)-u(R)=1
// by quadrature, and the capacity is the energy integral of that profile.
// Everything here is 1-D adaptive Simpson quadrature; the grid minimizer is
// never consulted.

#include <cmath>
#include <functional>
#include <stdexcept>

namespace oracle {

inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double tol, int depth = 40) {
  struct Rec {
    static double go(const std::function<double(double)>& f, double a, double b,
                     double fa, double fm, double fb, double whole, double tol,
                     int depth) {
      const double m = 0.5 * (a + b);
      const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
      const double flm = f(lm), frm = f(rm);
      const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
      const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
      if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
      return go(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
             go(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
    }
  };
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return Rec::go(f, a, b, fa, fm, fb, whole, tol, depth);
}

inline double unit_sphere_area(int N) {
  switch (N) {
    case 1: return 2.0;                    // two points
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
    default: throw std::invalid_argument("unit_sphere_area: N must be 1..3");
  }
}

/// cap_p(B_r, B_R) via the radial EL profile and quadrature.
inline double ball_capacity(int N, double p, double r, double R,
                            double tol = 1e-12) {
  if (!(p > 1.0 && p < 2.0)) throw std::invalid_argument("need 1 < p < 2");
  if (!(0.0 < r && r < R)) throw std::invalid_argument("need 0 < r < R");
  const double a = (N - 1.0) / (p - 1.0);
  const auto q_integrand = [a](double s) { return std::pow(s, -a); };
  const double Q = adaptive_simpson(q_integrand, r, R, tol);
  const double b = (N - 1.0) - p * (N - 1.0) / (p - 1.0);
  const auto e_integrand = [b](double s) { return std::pow(s, b); };
  const double P = adaptive_simpson(e_integrand, r, R, tol);
  return unit_sphere_area(N) * std::pow(Q, -p) * P;
}

/// Same condenser in closed form: cap = omega_{N-1} |m|^{p-1} |r^m - R^m|^{1-p}
/// with m = (p-N)/(p-1). Used to cross-check the quadrature route.
inline double ball_capacity_closed_form(int N, double p, double r, double R) {
  const double m = (p - N) / (p - 1.0);
  if (m == 0.0) throw std::invalid_argument("closed form needs p != N");
  const double diff = std::abs(std::pow(r, m) - std::pow(R, m));
  return unit_sphere_area(N) * std::pow(std::abs(m), p - 1.0) *
         std::pow(diff, 1.0 - p);
}

}  // namespace oracle
