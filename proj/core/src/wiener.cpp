#include "caplab/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "caplab/report.hpp"

namespace caplab {

HarnackParams qo_exponent(double p, int N, double r, std::optional<double> user_d) {
  if (N < 1 || N > 3) throw ConfigError("qo_exponent: N must be 1, 2 or 3");
  const double p_star = 2.0 * N / (N + 1.0);
  if (!(p > 1.0 && p <= p_star + 1e-12))
    throw ConfigError("qo_exponent: requires 1 < p <= 2N/(N+1) = " +
                      std::to_string(p_star));
  HarnackParams hp;
  hp.p = p;
  hp.N = N;
  hp.r = r;
  hp.lambda_r = N * (p - 2.0) + r * p;
  if (!(hp.lambda_r > 0.0))
    throw ConfigError("qo_exponent: lambda_r = N(p-2)+rp = " +
                      std::to_string(hp.lambda_r) +
                      " must be strictly positive (need r > N(2-p)/p = " +
                      std::to_string(N * (2.0 - p) / p) + ")");
  if (user_d.has_value()) {
    hp.d = *user_d;
    hp.prototype_d = false;
    if (hp.d < 0.0) throw ConfigError("qo_exponent: d must be non-negative");
  } else {
    hp.d = 1.0 + hp.lambda_r / (p * r * (2.0 - p));
    hp.prototype_d = true;
  }
  hp.q_o = (1.0 / (p - 1.0)) * (1.0 + hp.d * p * (r - 1.0) / hp.lambda_r);
  return hp;
}

double choose_r(double p, int N, double r_max, int grid_points) {
  const double r_min = std::max(1.0, N * (2.0 - p) / p);
  if (!(r_max > r_min)) throw ConfigError("choose_r: empty admissible range");
  const double lo = r_min * 1.02 + 1e-9;
  double best_r = lo, best_q = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_points; ++k) {
    const double r = lo * std::pow(r_max / lo, double(k) / (grid_points - 1));
    const double lam = N * (p - 2.0) + r * p;
    if (!(lam > 0.0)) continue;
    const double q = qo_exponent(p, N, r).q_o;
    if (q < best_q) {
      best_q = q;
      best_r = r;
    }
  }
  return best_r;
}

namespace {

std::vector<double> rescaled(const CapacityProfile& profile) {
  if (profile.scales.empty()) throw ConfigError("wiener: empty profile");
  std::vector<double> s(profile.scales.size());
  for (std::size_t j = 0; j < s.size(); ++j)
    s[j] = profile.scales[j] / profile.scales.front();
  return s;
}

}  // namespace

double wiener_integral(const CapacityProfile& profile, double q_o, double tau) {
  if (!(q_o > 0.0)) throw ConfigError("wiener_integral: q_o must be positive");
  const auto s = rescaled(profile);
  const double s_min = s.back();
  if (tau < s_min * (1.0 - 1e-12))
    throw ConfigError("wiener_integral: tau = " + std::to_string(tau) +
                      " below the smallest profiled scale " + std::to_string(s_min) +
                      " (no extrapolation)");
  if (tau > 1.0) throw ConfigError("wiener_integral: tau must lie in (0, 1]");

  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < s.size(); ++j) {
    const double hi = s[j];
    const double lo = std::max(s[j + 1], tau);
    if (lo >= hi) continue;
    const double d = profile.delta[j];
    if (!std::isfinite(d))
      throw ConfigError("wiener_integral: profile has a gap at scale " +
                        std::to_string(profile.scales[j]));
    if (d > 0.0) acc += std::pow(d, q_o) * std::log(hi / lo);
  }
  return acc;
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::wiener_point: return "wiener-point";
    case Classification::p_fat: return "p-fat";
    default: return "inconclusive";
  }
}

WienerReport modulus_and_reference(const CapacityProfile& profile,
                                   const HarnackParams& params,
                                   const WienerSettings& settings,
                                   double omega_o) {
  if (!(settings.alpha > 0.0 && settings.alpha <= 1.0))
    throw ConfigError("modulus_and_reference: alpha must lie in (0, 1]");
  if (!(omega_o > 0.0))
    throw ConfigError("modulus_and_reference: omega_o must be positive");

  WienerReport rep;
  rep.profile = profile;
  rep.params = params;
  rep.alpha = settings.alpha;
  rep.c = settings.c;
  rep.omega_o = omega_o;
  rep.s = rescaled(profile);

  const std::size_t K = rep.s.size();
  rep.integral.resize(K);
  rep.modulus.resize(K);
  rep.r_tilde.resize(K);
  rep.ref_half_edge.resize(K);
  rep.ref_duration.resize(K);
  for (std::size_t j = 0; j < K; ++j) {
    rep.integral[j] = wiener_integral(profile, params.q_o, rep.s[j]);
    rep.modulus[j] = std::exp(-rep.integral[j]);
    const double s_alpha = std::pow(rep.s[j], settings.alpha);
    const double mod_alpha = std::exp(-wiener_integral(profile, params.q_o, s_alpha));
    rep.r_tilde[j] = std::sqrt(mod_alpha);
    rep.ref_half_edge[j] = 2.0 * rep.r_tilde[j];
    rep.ref_duration[j] = settings.c * std::pow(omega_o, 2.0 - params.p) * 2.0 *
                          std::pow(2.0 * rep.r_tilde[j], params.p);
  }

  // classification from resolved deltas only
  std::vector<double> res_delta;
  std::vector<double> res_lninv, res_I;
  for (std::size_t j = 0; j < K; ++j) {
    if (!std::isfinite(profile.delta[j])) continue;
    res_delta.push_back(profile.delta[j]);
    res_lninv.push_back(std::log(1.0 / rep.s[j]));
    res_I.push_back(rep.integral[j]);
  }
  if (res_delta.size() >= 2) {
    double mn = res_delta[0];
    for (double d : res_delta) mn = std::min(mn, d);
    rep.fat_min = mn;

    std::vector<double> sorted = res_delta;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double deepest = res_delta.back();

    const std::size_t half = res_delta.size() / 2;
    std::vector<double> xs(res_lninv.begin() + half, res_lninv.end());
    std::vector<double> ys(res_I.begin() + half, res_I.end());
    const LineFit fit = fit_line(xs, ys);
    rep.slope_deep = fit.slope;

    const bool no_decay = deepest >= settings.decay_guard * median;
    if (mn >= settings.fat_tol && no_decay)
      rep.classification = Classification::p_fat;
    else if (fit.points >= 2 && fit.slope > settings.slope_tol)
      rep.classification = Classification::wiener_point;
    else
      rep.classification = Classification::inconclusive;
  }
  return rep;
}

}  // namespace caplab
