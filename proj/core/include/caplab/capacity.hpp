#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "caplab/geometry.hpp"
#include "caplab/grid.hpp"

namespace caplab {

struct CapacitySettings {
  int grid_n = 96;       // condenser resolution used by delta_ratio / profiles
  double tol = 1e-8;     // relative energy decrease per sweep at which to stop
  int settle_sweeps = 5; // consecutive sweeps below tol required
  int max_iters = 20000;
  double eps_factor = 1.0;    // regularization eps = eps_factor * h
  double annulus_ratio = 1.5; // outer cube K_{ratio*rho}; 3/2 unless probing sensitivity
  double clamp_slack = 1e-4;  // tolerated overshoot of delta above 1
  int workers = 1;            // parallel condensers in capacity_profile
};

/// Discrete condenser: grid over the outer cube, obstacle cells clamped to 1,
/// cells outside the open domain clamped to 0, free cells minimized.
struct Condenser {
  Grid grid;
  std::vector<std::uint8_t> obstacle;  // u = 1 here
  std::vector<std::uint8_t> domain;    // open set: u free here (obstacle wins)
  double p = 1.5;
  double eps = 0.0;  // gradient regularization, absolute units

  /// Default open domain: every cell except the outermost layer of the cube.
  static std::vector<std::uint8_t> interior_domain(const Grid& grid);
  void validate() const;
};

struct CapacityResult {
  double value = 0.0;  // regularization-corrected p-Dirichlet energy, length^(N-p)
  int iterations = 0;
  double energy_residual = 0.0;  // relative energy decrease at the stop
  std::vector<double> minimizer; // full-grid field in [0,1]
};

/// Minimizes the regularized p-Dirichlet energy
///   sum_cells h^N (|D+ u|^2 + eps^2)^(p/2)
/// over admissible grid fields (accelerated projected descent with
/// backtracking, warm-started from the p=2 potential). The reported value
/// subtracts the eps baseline cell-by-cell.
CapacityResult p_capacity(const Condenser& condenser, const CapacitySettings& cfg);

struct DeltaBreakdown {
  double rho = 0.0;
  double delta = 0.0;
  double numerator = 0.0;    // cap_p(K_rho \ E, K_{ratio*rho})
  double denominator = 0.0;  // cap_p(K_rho, K_{ratio*rho})
  double residual = 0.0;     // max of the two solver residuals
};

/// Capacity ratio delta(rho) at x_o: both condensers share one grid over
/// K_{ratio*rho}(x_o); complement membership is sampled from the mask.
DeltaBreakdown delta_ratio_detailed(const DomainMask& domain, const Point& x_o,
                                    double rho, double p,
                                    const CapacitySettings& cfg);
double delta_ratio(const DomainMask& domain, const Point& x_o, double rho,
                   double p, const CapacitySettings& cfg);

struct CapacityProfile {
  Point x_o{{0, 0, 0}};
  double p = 0.0;
  std::vector<double> scales;        // strictly decreasing
  std::vector<double> delta;         // NaN where a scale failed
  std::vector<DeltaBreakdown> rows;  // per-scale detail
  std::vector<std::string> gaps;     // error text per failed scale ("" = ok)
  double gamma_o = 0.0;              // min delta over resolved scales
  double rho_bar = 0.0;              // largest profiled scale

  /// Scales with a computed delta (gap-free).
  std::size_t resolved_count() const;
};

/// Geometric profile rho_j = rho_max * scale_ratio^j, j = 0..num_scales-1.
/// rho_max = 0 picks the largest scale whose annulus fits the bounding cube.
CapacityProfile capacity_profile(const DomainMask& domain, const Point& x_o,
                                 double p, int num_scales,
                                 const CapacitySettings& cfg,
                                 double rho_max = 0.0, double scale_ratio = 0.5);

/// Profile at caller-chosen scales (used by the verifier).
CapacityProfile capacity_profile_at(const DomainMask& domain, const Point& x_o,
                                    double p, const std::vector<double>& scales,
                                    const CapacitySettings& cfg);

}  // namespace caplab
