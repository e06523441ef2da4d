#pragma once

#include <optional>
#include <string>
#include <vector>

#include "caplab/capacity.hpp"

namespace caplab {

/// Parameters of the Harnack-type machinery: r > 1 with
/// lambda_r = N(p-2) + r p > 0, the exponent d (prototype formula
/// d = 1 + lambda_r / (p r (2-p)) unless user-supplied), and
/// q_o = (1/(p-1)) (1 + d p (r-1) / lambda_r).
struct HarnackParams {
  double p = 0.0;
  int N = 0;
  double r = 0.0;
  double lambda_r = 0.0;
  double d = 0.0;
  bool prototype_d = true;
  double q_o = 0.0;
};

/// Derives HarnackParams. Requires 1 < p <= 2N/(N+1) and lambda_r > 0;
/// user_d overrides the prototype d formula.
HarnackParams qo_exponent(double p, int N, double r,
                          std::optional<double> user_d = std::nullopt);

/// Smallest q_o over a logarithmic grid of admissible r (prototype d).
/// Returns the arg-min r; used when a config does not pin r.
double choose_r(double p, int N, double r_max = 16.0, int grid_points = 96);

struct WienerSettings {
  double alpha = 1.0;     // reference-cylinder exponent (1 when uncalibrated)
  double c = 0.1;         // intrinsic time constant
  double fat_tol = 0.02;  // min delta for the p-fat call
  double decay_guard = 0.5;  // deepest delta must keep this fraction of the median
  double slope_tol = 1e-3;   // integral-growth slope for the wiener-point call
};

/// Quadrature of the Wiener-type integral int_tau^1 [delta(s)]^{q_o} ds/s
/// with delta piecewise-constant on the profile's intervals: after rescaling
/// scales to s_j = rho_j/rho_0, delta(s) = delta_j on [s_{j+1}, s_j).
/// tau below the smallest rescaled scale is rejected (no extrapolation).
double wiener_integral(const CapacityProfile& profile, double q_o, double tau);

enum class Classification { wiener_point, p_fat, inconclusive };
std::string to_string(Classification c);

struct WienerReport {
  CapacityProfile profile;
  HarnackParams params;
  double alpha = 1.0;
  double c = 0.1;
  double omega_o = 1.0;
  std::vector<double> s;             // rescaled scales, s_0 = 1
  std::vector<double> integral;      // I(s_j)
  std::vector<double> modulus;       // exp(-I(s_j))
  std::vector<double> r_tilde;       // [modulus(s_j^alpha)]^{1/2}
  std::vector<double> ref_half_edge; // reference cylinder cube: 2 r_tilde
  std::vector<double> ref_duration;  // c omega^{2-p} 2 (2 r_tilde)^p
  Classification classification = Classification::inconclusive;
  double slope_deep = 0.0;  // regression of I vs ln(1/s) over the deepest half
  double fat_min = 0.0;     // min resolved delta
};

/// Tabulates modulus and reference-cylinder geometry over the profiled scales
/// and classifies the point from the finite data (a trend, never a continuum
/// claim): p-fat when delta stays above fat_tol without decaying, wiener-point
/// when the integral keeps growing, inconclusive otherwise.
WienerReport modulus_and_reference(const CapacityProfile& profile,
                                   const HarnackParams& params,
                                   const WienerSettings& settings,
                                   double omega_o);

}  // namespace caplab
