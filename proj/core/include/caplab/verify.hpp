#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "caplab/capacity.hpp"
#include "caplab/pde.hpp"
#include "caplab/report.hpp"
#include "caplab/wiener.hpp"

namespace caplab {

/// Registered pass thresholds. Every check reads its tolerance from here so
/// the whole gate can be tightened in one place as resolutions grow.
struct VerifyCriteria {
  double correlation_min = 0.9;
  double stability_factor = 2.0;      // max drift of fitted constants under refinement
  double backward_centered_tol = 0.10;
  double dt_robustness_tol = 0.05;
  double extinction_rel_threshold = 1e-6;
  std::vector<double> c_sweep{0.05, 0.1, 0.2};
  double frac_min = 0.01;  // positive-average floor in the extinction window
  int min_scales = 3;
};
VerifyCriteria parse_criteria(const Config& cfg, const std::string& prefix);

/// Full description of one boundary-decay experiment.
struct ExperimentConfig {
  DomainSpec domain;        // PDE-resolution mask descriptor
  int capacity_mask_n = 0;  // finer mask for capacity sampling (0 = PDE grid)
  BoundaryDatum datum = BoundaryDatum::zero();
  Point x_o{{0, 0, 0}};
  double t_o = 0.0;
  double R_o = 0.0;
  int num_scales = 4;
  double rho0 = 0.0;  // largest scale; 0 means R_o / 2
  StructureParams structure;
  FluxModel model;
  double r = 2.0;  // Harnack integrability exponent; auto_r picks argmin q_o
  bool auto_r = false;
  std::optional<double> user_d;
  TimeGridSpec timegrid;
  SolveSettings solver;
  CapacitySettings capacity;
  WienerSettings wiener;
  VerifyCriteria criteria;
  std::map<std::string, std::string> resolved_config;
};
ExperimentConfig parse_experiment(const Config& cfg);

struct ScaleRow {
  double rho = 0.0;
  double delta = std::numeric_limits<double>::quiet_NaN();
  double numerator_cap = 0.0;
  double denominator_cap = 0.0;
  double integral = std::numeric_limits<double>::quiet_NaN();   // I(rho_j), exponent q_o
  double integral_conj = std::numeric_limits<double>::quiet_NaN();  // exponent 1/(p-1)
  std::vector<double> omega;  // measured oscillation per swept c
  double bound_shape = std::numeric_limits<double>::quiet_NaN();
  double r_tilde = std::numeric_limits<double>::quiet_NaN();
  bool resolvable = false;
  std::string gap;
};

struct DecayFit {
  double c = 0.0;
  double q_used = 0.0;
  double gamma_fit = 0.0;  // slope of -log omega against the Wiener integral
  double intercept = 0.0;
  double correlation = 0.0;  // of log omega vs integral (negative when decaying)
  int points = 0;
  bool pass = false;
};

struct VerifierReport {
  HarnackParams params;
  double omega_o = 0.0;
  std::vector<ScaleRow> rows;
  std::vector<DecayFit> fits;       // one per swept c, exponent q_o
  std::vector<DecayFit> fits_conj;  // same with the conjectured q = 1/(p-1)
  LineFit alpha_fit;                // log omega (default c) vs log rho
  Classification classification = Classification::inconclusive;
  double slope_deep = 0.0;
  bool insufficient_resolution = false;
  bool pass = false;
  std::map<std::string, std::string> resolved_config;
};

/// Solves the configured problem once, measures oscillations over the
/// intrinsic cylinders at every dyadic scale, computes delta and the
/// cumulative Wiener integral, and regresses log omega against the integral.
/// A fit passes when gamma_fit > 0 with |correlation| >= criteria.correlation_min;
/// the report passes when every swept c passes.
VerifierReport verify_boundary_decay(const ExperimentConfig& cfg);

/// Same run, gated on a uniformly fat complement: rejects when the capacity
/// profile min falls below wiener.fat_tol, and passes when the fitted Hoelder
/// exponent alpha is positive with the required correlation.
VerifierReport check_pfat_holder(const ExperimentConfig& cfg);

void write_verifier_csv(const VerifierReport& rep, const std::string& path);
std::string verifier_report_json(const VerifierReport& rep);

/// ---- checks on an explicit trajectory ----

struct LowerBoundRow {
  double rho = 0.0, eta = 0.0;
  double mu = 0.0, delta = 0.0, avg_v = 0.0, theta = 0.0;
  double ratio = 0.0;  // mu delta^{1/(p-1)} / avg v
  bool window_ok = false;
  bool violation = false;  // avg v == 0 with mu > 0
};
LowerBoundRow check_lower_bound(const Trajectory& traj, const Point& x_o,
                                double level, double eta, double rho, double s,
                                double t_end, double c,
                                const DomainMask& capacity_mask,
                                const CapacitySettings& capacity_cfg);

struct L1HarnackRow {
  double rho = 0.0, s1 = 0.0, t1 = 0.0;
  double lhs = 0.0;       // sup_tau int_{K_rho} u
  double rhs_inf = 0.0;   // inf_tau int_{K_2rho} u
  double rhs_tail = 0.0;  // ((t1-s1)/rho^lambda)^{1/(2-p)}
  double lambda = 0.0;
  double gamma_min = 0.0;
};
L1HarnackRow check_l1_harnack(const Trajectory& traj, const Point& y, double rho,
                              double s1, double t1);

struct HarnackTypeRow {
  double rho = 0.0, s = 0.0;
  double theta = 0.0, sigma = 0.0;
  double inf_val = 0.0, sup_val = 0.0;
  double ratio = 0.0;  // inf / (sigma^d sup)
  bool vacuous = false;
  bool window_ok = false;
};
HarnackTypeRow check_harnack_type(const Trajectory& traj, const Point& y, double s,
                                  double rho, const HarnackParams& hp, double c);

/// ---- auxiliary problem (zero lateral data, bump initial datum) ----

struct AuxExperiment {
  int dim = 2;
  double rho = 1.0 / 32.0;
  Point x_o{{0, 0, 0}};
  int grid_n = 256;  // over the cube K_{32 rho}(x_o)
  double amplitude = 1.0;
  StructureParams structure;
  FluxModel model;
  double horizon_units = 400.0;  // horizon in intrinsic units rho^p avg(u_o)^{2-p}
  double dt_units = 0.02;        // first step, same units
  double r = 2.0;                // Harnack exponent for the FV check
  SolveSettings solver;
  VerifyCriteria criteria;
  std::map<std::string, std::string> resolved_config;
};
AuxExperiment parse_aux(const Config& cfg);
/// Scaled copy for refinement-stability reruns.
AuxExperiment refine_aux(const AuxExperiment& base, double factor);

/// Initial bump amplitude * cos^2(pi |x-x_o| / (4 rho)) supported in the ball
/// of radius 2 rho (inside K_{2 rho}).
std::vector<double> aux_initial(const AuxExperiment& aux, const Grid& grid);
Trajectory solve_auxiliary(const AuxExperiment& aux);

struct ExtinctionReport {
  double sup0 = 0.0;
  double avg0 = 0.0;  // mean of u_o over K_{2 rho}
  double intrinsic_unit = 0.0;
  double horizon = 0.0;
  bool extinct = false;
  double t_ext = -1.0;
  double dimensionless_ratio = -1.0;  // t_ext / intrinsic_unit
  std::vector<double> kappa;          // window fractions probed
  std::vector<double> frac;           // inf of avg_{K_4rho} u / avg0 over each window
  double kappa_star = 0.0;
  double frac_star = 0.0;
};
ExtinctionReport check_extinction_window(const AuxExperiment& aux,
                                         const Trajectory& traj);

/// Oscillation agreement between the backward cylinder
/// K_2rho x [t_o - 2 theta rho^p, t_o] and the centered variant
/// K_2rho x [t_o - theta rho^p, t_o + theta rho^p]; returns the relative gap.
double backward_centered_gap(const Trajectory& traj, const Point& x_o, double t_o,
                             double rho, double theta);

}  // namespace caplab
