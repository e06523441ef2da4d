#include "caplab/verify.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace caplab {

VerifyCriteria parse_criteria(const Config& cfg, const std::string& prefix) {
  VerifyCriteria c;
  c.correlation_min = cfg.get_double(prefix + "correlation_min", c.correlation_min);
  c.stability_factor = cfg.get_double(prefix + "stability_factor", c.stability_factor);
  c.backward_centered_tol =
      cfg.get_double(prefix + "backward_centered_tol", c.backward_centered_tol);
  c.dt_robustness_tol = cfg.get_double(prefix + "dt_robustness_tol", c.dt_robustness_tol);
  c.extinction_rel_threshold =
      cfg.get_double(prefix + "extinction_rel_threshold", c.extinction_rel_threshold);
  c.c_sweep = cfg.get_doubles(prefix + "c_sweep", c.c_sweep);
  c.frac_min = cfg.get_double(prefix + "frac_min", c.frac_min);
  c.min_scales = cfg.get_int(prefix + "min_scales", c.min_scales);
  if (c.c_sweep.empty()) throw ConfigError("criteria: c_sweep must not be empty");
  return c;
}

ExperimentConfig parse_experiment(const Config& cfg) {
  ExperimentConfig e;
  e.domain = parse_domain(cfg, "domain.");
  e.datum = parse_datum(cfg, "datum.");
  e.capacity_mask_n = cfg.get_int("capacity.mask_n", 0);

  const auto xo = cfg.get_doubles("experiment.x_o", {0, 0, 0});
  for (std::size_t d = 0; d < xo.size() && d < 3; ++d) e.x_o[d] = xo[d];
  e.t_o = cfg.get_double("experiment.t_o");
  e.R_o = cfg.get_double("experiment.R_o");
  e.num_scales = cfg.get_int("experiment.scales", 4);
  e.rho0 = cfg.get_double("experiment.rho0", 0.0);

  e.structure.p = cfg.get_double("structure.p");
  e.structure.N = cfg.get_int("structure.N", e.domain.dim);
  e.structure.C_o = cfg.get_double("structure.C_o", 1.0);
  e.structure.C_1 = cfg.get_double("structure.C_1", 1.0);
  e.structure.Lambda = cfg.get_double("structure.Lambda", 0.0);
  e.model = parse_flux_model(cfg, "model.", e.domain.dim);

  const std::string r_str = cfg.get_string("harnack.r", "2");
  if (r_str == "auto") {
    e.auto_r = true;
  } else {
    e.r = cfg.get_double("harnack.r", 2.0);
  }
  if (cfg.has("harnack.d")) e.user_d = cfg.get_double("harnack.d");

  e.timegrid = parse_time_grid(cfg, "time.");
  e.solver = parse_solve_settings(cfg, "solver.");

  e.capacity.grid_n = cfg.get_int("capacity.grid_n", e.capacity.grid_n);
  e.capacity.tol = cfg.get_double("capacity.tol", e.capacity.tol);
  e.capacity.max_iters = cfg.get_int("capacity.max_iters", e.capacity.max_iters);
  e.capacity.eps_factor = cfg.get_double("capacity.eps_factor", e.capacity.eps_factor);
  e.capacity.annulus_ratio =
      cfg.get_double("capacity.annulus_ratio", e.capacity.annulus_ratio);
  e.capacity.workers = cfg.get_int("capacity.workers", e.capacity.workers);

  e.wiener.alpha = cfg.get_double("wiener.alpha", e.wiener.alpha);
  e.wiener.c = cfg.get_double("wiener.c", e.wiener.c);
  e.wiener.fat_tol = cfg.get_double("wiener.fat_tol", e.wiener.fat_tol);
  e.wiener.decay_guard = cfg.get_double("wiener.decay_guard", e.wiener.decay_guard);
  e.wiener.slope_tol = cfg.get_double("wiener.slope_tol", e.wiener.slope_tol);

  e.criteria = parse_criteria(cfg, "criteria.");
  e.resolved_config = cfg.entries();
  return e;
}

namespace {

DomainMask build_capacity_mask(const ExperimentConfig& cfg) {
  if (cfg.capacity_mask_n <= cfg.domain.grid_n) return DomainMask{};
  DomainSpec fine = cfg.domain;
  fine.grid_n = cfg.capacity_mask_n;
  return build_domain(fine, BoundaryDatum::zero());
}

DecayFit fit_decay(double c, double q_used, const std::vector<double>& integrals,
                   const std::vector<double>& omegas, double corr_min) {
  DecayFit f;
  f.c = c;
  f.q_used = q_used;
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < integrals.size(); ++j) {
    if (!std::isfinite(integrals[j]) || !std::isfinite(omegas[j])) continue;
    if (!(omegas[j] > 0.0)) continue;
    xs.push_back(integrals[j]);
    ys.push_back(std::log(omegas[j]));
  }
  const LineFit lf = fit_line(xs, ys);
  f.points = lf.points;
  f.gamma_fit = -lf.slope;
  f.intercept = lf.intercept;
  f.correlation = lf.correlation;
  f.pass = f.points >= 2 && f.gamma_fit > 0.0 && std::abs(f.correlation) >= corr_min;
  return f;
}

VerifierReport run_decay_experiment(const ExperimentConfig& cfg) {
  cfg.structure.validate();
  if (!(cfg.R_o > 0.0 && cfg.R_o < 1.0))
    throw ConfigError("experiment: R_o must lie in (0, 1)");
  const double p = cfg.structure.p;
  if (!(cfg.t_o - 2.0 * std::pow(cfg.R_o, p) >= 0.0))
    throw ConfigError("experiment: (t_o - 2 R_o^p, t_o] must sit inside (0, T]; "
                      "increase t_o or shrink R_o");
  if (cfg.t_o > cfg.timegrid.t_end + 1e-15)
    throw ConfigError("experiment: t_o exceeds the simulated horizon");

  const double rho0 = (cfg.rho0 > 0.0) ? cfg.rho0 : 0.5 * cfg.R_o;
  if (!(rho0 < cfg.R_o))
    throw ConfigError("experiment: largest scale must stay below R_o");
  const Cube working{cfg.x_o, 32.0 * rho0};
  if (!cfg.domain.box.encloses(working, cfg.domain.dim))
    throw ConfigError("experiment: K_{32 rho}(x_o) exceeds the bounding cube at "
                      "the largest scale rho = " +
                      fmt_double(rho0));

  DomainMask mask = build_domain(cfg.domain, cfg.datum);
  const std::size_t near = mask.grid.nearest_cell(cfg.x_o);
  if (!mask.near_interface(near))
    throw ConfigError("experiment: x_o is not a lateral boundary point of the mask");

  DomainMask fine = build_capacity_mask(cfg);
  const DomainMask& cap_mask = fine.inside.empty() ? mask : fine;

  VerifierReport rep;
  rep.resolved_config = cfg.resolved_config;
  const double r = cfg.auto_r ? choose_r(p, cfg.structure.N) : cfg.r;
  rep.params = qo_exponent(p, cfg.structure.N, r, cfg.user_d);

  Trajectory traj =
      solve_cauchy_dirichlet(mask, cfg.model, cfg.structure, cfg.timegrid, cfg.solver);

  const Cylinder base{Cube{cfg.x_o, cfg.R_o}, cfg.t_o, 2.0 * std::pow(cfg.R_o, p)};
  rep.omega_o = ess_osc(traj, base).omega;
  if (!(rep.omega_o > 0.0)) {
    rep.insufficient_resolution = true;
    return rep;
  }

  std::vector<double> scales(cfg.num_scales);
  for (int j = 0; j < cfg.num_scales; ++j) scales[j] = rho0 * std::pow(0.5, j);
  const CapacityProfile prof =
      capacity_profile_at(cap_mask, cfg.x_o, p, scales, cfg.capacity);

  // gap-free prefix feeds the quadrature (no integration across gaps)
  std::size_t usable = 0;
  while (usable < prof.delta.size() && std::isfinite(prof.delta[usable])) ++usable;
  CapacityProfile prefix = prof;
  prefix.scales.resize(usable);
  prefix.delta.resize(usable);

  const double q_conj = 1.0 / (p - 1.0);
  WienerReport wrep;
  if (usable >= 2) {
    wrep = modulus_and_reference(prefix, rep.params, cfg.wiener, rep.omega_o);
    rep.classification = wrep.classification;
    rep.slope_deep = wrep.slope_deep;
  }

  rep.rows.assign(cfg.num_scales, {});
  const std::size_t n_c = cfg.criteria.c_sweep.size();
  for (int j = 0; j < cfg.num_scales; ++j) {
    ScaleRow& row = rep.rows[j];
    row.rho = scales[j];
    row.gap = prof.gaps[j];
    if (std::isfinite(prof.delta[j])) {
      row.delta = prof.delta[j];
      row.numerator_cap = prof.rows[j].numerator;
      row.denominator_cap = prof.rows[j].denominator;
    }
    if (static_cast<std::size_t>(j) < usable) {
      const double tau = scales[j] / scales[0];
      row.integral = wiener_integral(prefix, rep.params.q_o, tau);
      row.integral_conj = wiener_integral(prefix, q_conj, tau);
      if (static_cast<std::size_t>(j) < wrep.r_tilde.size())
        row.r_tilde = wrep.r_tilde[j];
    }
    row.omega.assign(n_c, std::numeric_limits<double>::quiet_NaN());
    bool any_omega = false;
    for (std::size_t ci = 0; ci < n_c; ++ci) {
      try {
        const Cylinder cyl = intrinsic_cylinder(
            cfg.x_o, cfg.t_o, scales[j], rep.omega_o, cfg.criteria.c_sweep[ci], p);
        row.omega[ci] = ess_osc(traj, cyl).omega;
        any_omega = true;
      } catch (const std::exception& e) {
        if (row.gap.empty()) row.gap = e.what();
      }
    }
    const bool pde_resolved = 2.0 * scales[j] >= 4.0 * mask.grid.spacing() - 1e-15;
    row.resolvable = std::isfinite(row.delta) && std::isfinite(row.integral) &&
                     any_omega && pde_resolved;
  }

  std::size_t usable_rows = 0;
  for (const auto& row : rep.rows) usable_rows += row.resolvable ? 1 : 0;
  rep.insufficient_resolution =
      usable_rows < static_cast<std::size_t>(cfg.criteria.min_scales);

  for (std::size_t ci = 0; ci < n_c; ++ci) {
    std::vector<double> I, Iconj, W;
    for (const auto& row : rep.rows) {
      if (!row.resolvable) continue;
      I.push_back(row.integral);
      Iconj.push_back(row.integral_conj);
      W.push_back(row.omega[ci]);
    }
    rep.fits.push_back(fit_decay(cfg.criteria.c_sweep[ci], rep.params.q_o, I, W,
                                 cfg.criteria.correlation_min));
    rep.fits_conj.push_back(fit_decay(cfg.criteria.c_sweep[ci], q_conj, Iconj, W,
                                      cfg.criteria.correlation_min));
  }

  // Hoelder fit at the c closest to the configured default
  std::size_t def_ci = 0;
  for (std::size_t ci = 0; ci < n_c; ++ci)
    if (std::abs(cfg.criteria.c_sweep[ci] - cfg.wiener.c) <
        std::abs(cfg.criteria.c_sweep[def_ci] - cfg.wiener.c))
      def_ci = ci;
  {
    std::vector<double> xs, ys;
    for (const auto& row : rep.rows) {
      if (!row.resolvable || !(row.omega[def_ci] > 0.0)) continue;
      xs.push_back(std::log(row.rho));
      ys.push_back(std::log(row.omega[def_ci]));
    }
    rep.alpha_fit = fit_line(xs, ys);
  }

  if (!rep.fits.empty()) {
    const DecayFit& def_fit = rep.fits[def_ci];
    for (auto& row : rep.rows) {
      if (!std::isfinite(row.integral)) continue;
      double g_osc = 0.0;
      if (cfg.datum.modulus_bound && std::isfinite(row.r_tilde))
        g_osc = (*cfg.datum.modulus_bound)(2.0 * row.r_tilde);
      row.bound_shape =
          rep.omega_o * std::exp(-def_fit.gamma_fit * row.integral) + 2.0 * g_osc;
    }
  }

  rep.pass = !rep.insufficient_resolution;
  for (const auto& f : rep.fits) rep.pass = rep.pass && f.pass;
  return rep;
}

}  // namespace

VerifierReport verify_boundary_decay(const ExperimentConfig& cfg) {
  return run_decay_experiment(cfg);
}

VerifierReport check_pfat_holder(const ExperimentConfig& cfg) {
  VerifierReport rep = run_decay_experiment(cfg);
  double gamma_o = std::numeric_limits<double>::infinity();
  std::size_t resolved = 0;
  for (const auto& row : rep.rows)
    if (std::isfinite(row.delta)) {
      gamma_o = std::min(gamma_o, row.delta);
      ++resolved;
    }
  if (resolved == 0 || !(gamma_o >= cfg.wiener.fat_tol))
    throw ConfigError("check_pfat_holder: complement is not uniformly fat at the "
                      "profiled depth (min delta = " +
                      fmt_double(resolved ? gamma_o : 0.0) + " < fat_tol = " +
                      fmt_double(cfg.wiener.fat_tol) + ")");
  rep.pass = !rep.insufficient_resolution && rep.alpha_fit.slope > 0.0 &&
             std::abs(rep.alpha_fit.correlation) >= cfg.criteria.correlation_min;
  return rep;
}

void write_verifier_csv(const VerifierReport& rep, const std::string& path) {
  std::vector<std::string> header = {"rho",           "delta",
                                     "numerator_cap", "denominator_cap",
                                     "integral",      "integral_qconj",
                                     "r_tilde",       "bound_shape"};
  for (const auto& f : rep.fits) header.push_back("omega_c" + fmt_double(f.c));
  header.push_back("resolvable");
  header.push_back("gap");
  CsvWriter csv(path, header);
  for (const auto& row : rep.rows) {
    std::vector<std::string> cells = {
        fmt_double(row.rho),           fmt_double(row.delta),
        fmt_double(row.numerator_cap), fmt_double(row.denominator_cap),
        fmt_double(row.integral),      fmt_double(row.integral_conj),
        fmt_double(row.r_tilde),       fmt_double(row.bound_shape)};
    for (double w : row.omega) cells.push_back(fmt_double(w));
    cells.push_back(row.resolvable ? "1" : "0");
    cells.push_back(row.gap.empty() ? "" : "\"" + row.gap + "\"");
    csv.row(cells);
  }
}

std::string verifier_report_json(const VerifierReport& rep) {
  nlohmann::ordered_json j;
  j["q_o"] = rep.params.q_o;
  j["r"] = rep.params.r;
  j["d"] = rep.params.d;
  j["lambda_r"] = rep.params.lambda_r;
  j["prototype_d"] = rep.params.prototype_d;
  j["omega_o"] = rep.omega_o;
  j["classification"] = to_string(rep.classification);
  j["slope_deep"] = rep.slope_deep;
  j["alpha_fit"] = rep.alpha_fit.slope;
  j["alpha_correlation"] = rep.alpha_fit.correlation;
  j["insufficient_resolution"] = rep.insufficient_resolution;
  j["pass"] = rep.pass;
  auto fits = nlohmann::ordered_json::array();
  for (const auto& f : rep.fits)
    fits.push_back({{"c", f.c},
                    {"q_used", f.q_used},
                    {"gamma_fit", f.gamma_fit},
                    {"correlation", f.correlation},
                    {"points", f.points},
                    {"pass", f.pass}});
  j["fits"] = fits;
  auto fits_conj = nlohmann::ordered_json::array();
  for (const auto& f : rep.fits_conj)
    fits_conj.push_back({{"c", f.c},
                         {"q_used", f.q_used},
                         {"gamma_fit", f.gamma_fit},
                         {"correlation", f.correlation},
                         {"points", f.points},
                         {"pass", f.pass}});
  j["fits_conjectured_qo"] = fits_conj;
  return j.dump(2);
}

LowerBoundRow check_lower_bound(const Trajectory& traj, const Point& x_o,
                                double level, double eta, double rho, double s,
                                double t_end, double c,
                                const DomainMask& capacity_mask,
                                const CapacitySettings& capacity_cfg) {
  LowerBoundRow row;
  row.rho = rho;
  row.eta = eta;
  const Cube working{x_o, 32.0 * rho};
  const auto ext =
      truncate_and_extend(traj, level, working, s, t_end, TruncationMode::upper);
  row.mu = ext.mu;
  row.delta = delta_ratio(capacity_mask, x_o, rho, traj.p, capacity_cfg);

  const std::size_t snap = ext.v.snapshot_at(eta);
  row.avg_v = ext.v.cube_average(snap, Cube{x_o, 2.0 * rho});
  row.theta = c * std::pow(std::max(row.avg_v, 0.0), 2.0 - traj.p);
  row.window_ok = (s <= eta - row.theta * std::pow(rho, traj.p)) && (eta <= t_end);

  const double lhs = row.mu * std::pow(row.delta, 1.0 / (traj.p - 1.0));
  if (row.avg_v <= 0.0) {
    row.violation = row.mu > 0.0 && row.delta > 0.0;
    row.ratio = row.violation ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    row.ratio = lhs / row.avg_v;
  }
  return row;
}

L1HarnackRow check_l1_harnack(const Trajectory& traj, const Point& y, double rho,
                              double s1, double t1) {
  if (!(s1 < t1)) throw ConfigError("check_l1_harnack: need s1 < t1");
  L1HarnackRow row;
  row.rho = rho;
  row.s1 = s1;
  row.t1 = t1;
  const int N = traj.domain.grid.dim();
  const double p = traj.p;
  row.lambda = N * (p - 2.0) + p;

  const Cube inner{y, rho};
  const Cube outer{y, 2.0 * rho};
  {
    const auto ib = traj.domain.grid.cells_in_cube(outer);
    std::array<int, 3> m;
    for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
      for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
        for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0])
          if (!traj.domain.inside[traj.domain.grid.ravel(m)])
            throw ConfigError("check_l1_harnack: K_{2 rho}(y) leaves the domain");
  }

  const auto snaps = traj.snapshots_in(s1, t1);
  if (snaps.empty())
    throw ConfigError("check_l1_harnack: no stored snapshots in (s1, t1)");
  const double cell = std::pow(traj.domain.grid.spacing(), N);

  auto cube_integral = [&](std::size_t snap, const Cube& cube) {
    const auto ib = traj.domain.grid.cells_in_cube(cube);
    double acc = 0.0;
    std::array<int, 3> m;
    for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
      for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
        for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
          const double v = traj.fields[snap][traj.domain.grid.ravel(m)];
          if (v < -1e-9)
            throw ConfigError("check_l1_harnack: negative u encountered");
          acc += v;
        }
    return acc * cell;
  };

  double lhs = -std::numeric_limits<double>::infinity();
  double inf2 = std::numeric_limits<double>::infinity();
  for (std::size_t k : snaps) {
    lhs = std::max(lhs, cube_integral(k, inner));
    inf2 = std::min(inf2, cube_integral(k, outer));
  }
  row.lhs = lhs;
  row.rhs_inf = inf2;
  row.rhs_tail = std::pow((t1 - s1) / std::pow(rho, row.lambda), 1.0 / (2.0 - p));
  row.gamma_min = lhs / (inf2 + row.rhs_tail);
  return row;
}

HarnackTypeRow check_harnack_type(const Trajectory& traj, const Point& y, double s,
                                  double rho, const HarnackParams& hp, double c) {
  HarnackTypeRow row;
  row.rho = rho;
  row.s = s;
  const double p = traj.p;
  const std::size_t snap_s = traj.snapshot_at(s);

  const Cube k2{y, 2.0 * rho};
  const double avg = traj.cube_average(snap_s, k2);
  if (avg < -1e-9) throw ConfigError("check_harnack_type: negative slice average");
  row.theta = c * std::pow(std::max(avg, 0.0), 2.0 - p);

  {
    const auto ib = traj.domain.grid.cells_in_cube(k2);
    double acc_r = 0.0;
    std::size_t count = 0;
    std::array<int, 3> m;
    for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
      for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
        for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
          const double v = std::max(
              0.0, (double)traj.fields[snap_s][traj.domain.grid.ravel(m)]);
          acc_r += std::pow(v, hp.r);
          ++count;
        }
    const double mean_r = std::pow(acc_r / count, 1.0 / hp.r);
    row.sigma =
        (mean_r > 0.0) ? std::pow(avg / mean_r, hp.p * hp.r / hp.lambda_r) : 0.0;
  }

  const double window = row.theta * std::pow(rho, p);
  const Cube k16{y, 16.0 * rho};
  row.window_ok = traj.domain.grid.box().encloses(k16, traj.domain.grid.dim()) &&
                  (s + window <= traj.times.back() + 1e-15);

  const Cylinder inf_cyl{Cube{y, 2.0 * rho}, s + window, 0.25 * window};
  const Cylinder sup_cyl{Cube{y, rho}, s + window, 0.5 * window};
  const OscStats inf_st = ess_osc(traj, inf_cyl);
  const OscStats sup_st = ess_osc(traj, sup_cyl);
  row.inf_val = inf_st.mu_minus;
  row.sup_val = sup_st.mu_plus;
  if (!(row.sup_val > 0.0)) {
    row.vacuous = true;  // solution extinct in the window
    row.ratio = std::numeric_limits<double>::infinity();
    return row;
  }
  const double denom = std::pow(row.sigma, hp.d) * row.sup_val;
  row.ratio =
      (denom > 0.0) ? row.inf_val / denom : std::numeric_limits<double>::infinity();
  return row;
}

AuxExperiment parse_aux(const Config& cfg) {
  AuxExperiment a;
  a.dim = cfg.get_int("aux.dim", a.dim);
  a.rho = cfg.get_double("aux.rho", a.rho);
  const auto xo = cfg.get_doubles("aux.x_o", {0, 0, 0});
  for (std::size_t d = 0; d < xo.size() && d < 3; ++d) a.x_o[d] = xo[d];
  a.grid_n = cfg.get_int("aux.grid_n", a.grid_n);
  a.amplitude = cfg.get_double("aux.amplitude", a.amplitude);
  a.structure.p = cfg.get_double("structure.p");
  a.structure.N = a.dim;
  a.structure.C_o = cfg.get_double("structure.C_o", 1.0);
  a.structure.C_1 = cfg.get_double("structure.C_1", 1.0);
  a.model = parse_flux_model(cfg, "model.", a.dim);
  a.horizon_units = cfg.get_double("aux.horizon_units", a.horizon_units);
  a.dt_units = cfg.get_double("aux.dt_units", a.dt_units);
  const std::string r_str = cfg.get_string("harnack.r", "2");
  a.r = (r_str == "auto") ? choose_r(a.structure.p, a.dim)
                          : cfg.get_double("harnack.r", 2.0);
  a.solver = parse_solve_settings(cfg, "solver.");
  a.criteria = parse_criteria(cfg, "criteria.");
  a.resolved_config = cfg.entries();
  return a;
}

AuxExperiment refine_aux(const AuxExperiment& base, double factor) {
  AuxExperiment r = base;
  r.grid_n = static_cast<int>(std::lround(base.grid_n * factor));
  r.dt_units = base.dt_units / factor;
  return r;
}

std::vector<double> aux_initial(const AuxExperiment& aux, const Grid& grid) {
  std::vector<double> u0(grid.cell_count(), 0.0);
  const double w = 2.0 * aux.rho;
  for (std::size_t i = 0; i < u0.size(); ++i) {
    const Point x = grid.center(i);
    double rr = 0.0;
    for (int d = 0; d < grid.dim(); ++d)
      rr += (x[d] - aux.x_o[d]) * (x[d] - aux.x_o[d]);
    const double dist = std::sqrt(rr);
    if (dist < w) {
      const double c = std::cos(0.5 * M_PI * dist / w);
      u0[i] = aux.amplitude * c * c;
    }
  }
  return u0;
}

Trajectory solve_auxiliary(const AuxExperiment& aux) {
  DomainSpec spec;
  spec.kind = "full-cube";
  spec.dim = aux.dim;
  spec.grid_n = aux.grid_n;
  spec.box = Cube{aux.x_o, 32.0 * aux.rho};
  DomainMask mask = build_domain(spec, BoundaryDatum::zero());

  const auto u0 = aux_initial(aux, mask.grid);
  double avg0 = 0.0;
  {
    const auto ib = mask.grid.cells_in_cube(Cube{aux.x_o, 2.0 * aux.rho});
    std::array<int, 3> m;
    std::size_t count = 0;
    for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
      for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
        for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
          avg0 += u0[mask.grid.ravel(m)];
          ++count;
        }
    avg0 /= count;
  }
  const double unit =
      std::pow(aux.rho, aux.structure.p) * std::pow(avg0, 2.0 - aux.structure.p);

  TimeGridSpec tg;
  tg.kind = "graded";
  tg.t_end = aux.horizon_units * unit;
  tg.dt_min = aux.dt_units * unit;
  tg.dt_max = 64.0 * tg.dt_min;
  tg.growth = 1.1;
  tg.anchor = tg.dt_min;  // fine steps at the start, growing later
  tg.store_from = 0.0;
  return solve_cauchy_dirichlet(mask, aux.model, aux.structure, tg, aux.solver, u0);
}

ExtinctionReport check_extinction_window(const AuxExperiment& aux,
                                         const Trajectory& traj) {
  ExtinctionReport rep;
  rep.horizon = traj.times.back();
  rep.sup0 = traj.sup_at(0);
  rep.avg0 = traj.cube_average(0, Cube{aux.x_o, 2.0 * aux.rho});
  rep.intrinsic_unit =
      std::pow(aux.rho, aux.structure.p) * std::pow(rep.avg0, 2.0 - aux.structure.p);

  if (rep.sup0 <= 0.0) {  // u_o == 0 is extinct at t = 0
    rep.extinct = true;
    rep.t_ext = 0.0;
    rep.dimensionless_ratio = 0.0;
    return rep;
  }

  const double threshold = aux.criteria.extinction_rel_threshold * rep.sup0;
  for (std::size_t k = 1; k < traj.snapshot_count(); ++k) {
    if (traj.sup_at(k) < threshold) {
      rep.extinct = true;
      rep.t_ext = traj.times[k];
      rep.dimensionless_ratio = rep.t_ext / rep.intrinsic_unit;
      break;
    }
  }

  const Cube k4{aux.x_o, 4.0 * aux.rho};
  rep.kappa = {0.05, 0.1, 0.2, 0.4, 0.8};
  rep.frac.assign(rep.kappa.size(), std::numeric_limits<double>::infinity());
  for (std::size_t ki = 0; ki < rep.kappa.size(); ++ki) {
    const double t_hi = rep.kappa[ki] * rep.intrinsic_unit;
    double frac = std::numeric_limits<double>::infinity();
    bool seen = false;
    for (std::size_t k = 1; k < traj.snapshot_count(); ++k) {
      if (traj.times[k] > t_hi + 1e-15) break;
      frac = std::min(frac, traj.cube_average(k, k4) / rep.avg0);
      seen = true;
    }
    rep.frac[ki] = seen ? frac : std::numeric_limits<double>::quiet_NaN();
    if (seen && frac >= aux.criteria.frac_min && rep.kappa[ki] > rep.kappa_star) {
      rep.kappa_star = rep.kappa[ki];
      rep.frac_star = frac;
    }
  }
  return rep;
}

double backward_centered_gap(const Trajectory& traj, const Point& x_o, double t_o,
                             double rho, double theta) {
  const double p = traj.p;
  const double len = theta * std::pow(rho, p);
  const Cylinder backward{Cube{x_o, 2.0 * rho}, t_o, 2.0 * len};
  const Cylinder centered{Cube{x_o, 2.0 * rho}, t_o + len, 2.0 * len};
  const double wb = ess_osc(traj, backward).omega;
  const double wc = ess_osc(traj, centered).omega;
  const double scale = std::max(std::abs(wb), std::abs(wc));
  return scale > 0.0 ? std::abs(wb - wc) / scale : 0.0;
}

}  // namespace caplab
