// caplab command-line front end: capacities, delta profiles, Wiener reports,
// PDE runs and the boundary-decay verification harness. Every command reads
// one plain-text config, writes CSV/JSON artifacts plus a run manifest into
// --out-dir, and exits 0 on pass, 1 on check failure, 2 on config/usage
// errors, 3 on numerical failures.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "caplab/capacity.hpp"
#include "caplab/config.hpp"
#include "caplab/geometry.hpp"
#include "caplab/pde.hpp"
#include "caplab/report.hpp"
#include "caplab/verify.hpp"
#include "caplab/version.hpp"
#include "caplab/wiener.hpp"

namespace fs = std::filesystem;
using namespace caplab;
using nlohmann::ordered_json;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = "out";
  int workers = 0;  // 0 -> CAPLAB_WORKERS or 1
  std::uint64_t seed = 0;
  bool svg = false;
  std::vector<std::string> overrides;
};

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CAPLAB_WORKERS")) {
    const int w = std::atoi(env);
    if (w > 0) return w;
  }
  return 1;
}

Config load_config(const GlobalOpts& g) {
  Config cfg = Config::parse_file(g.config_path);
  for (const auto& ov : g.overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw ConfigError("--set expects key=value, got: " + ov);
    cfg.override_value(ov.substr(0, eq), ov.substr(eq + 1));
  }
  return cfg;
}

RunManifest start_manifest(const GlobalOpts& g, const Config& cfg,
                           const std::string& command) {
  fs::create_directories(g.out_dir);
  RunManifest m;
  m.command = command;
  m.version = CAPLAB_VERSION;
  m.config_path = g.config_path;
  m.config_hash = fnv1a64_file(g.config_path);
  m.resolved_config = cfg.entries();
  m.workers = resolve_workers(g.workers);
  m.seed = g.seed;
  return m;
}

void finish_manifest(RunManifest& m, const GlobalOpts& g) {
  const std::string path = (fs::path(g.out_dir) / "manifest.json").string();
  write_manifest(m, path);
}

std::string out_path(const GlobalOpts& g, const std::string& name) {
  return (fs::path(g.out_dir) / name).string();
}

void write_json(const std::string& path, const ordered_json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

CapacitySettings capacity_settings(const Config& cfg, int workers) {
  CapacitySettings s;
  s.grid_n = cfg.get_int("capacity.grid_n", s.grid_n);
  s.tol = cfg.get_double("capacity.tol", s.tol);
  s.max_iters = cfg.get_int("capacity.max_iters", s.max_iters);
  s.eps_factor = cfg.get_double("capacity.eps_factor", s.eps_factor);
  s.annulus_ratio = cfg.get_double("capacity.annulus_ratio", s.annulus_ratio);
  s.workers = workers;
  return s;
}

// ---------------------------------------------------------------- capacity
int cmd_capacity(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "capacity");

  Condenser c;
  const int dim = cfg.get_int("condenser.dim", 2);
  const int n = cfg.get_int("condenser.grid_n", 128);
  Cube box;
  const auto center = cfg.get_doubles("condenser.center", {0, 0, 0});
  for (std::size_t d = 0; d < center.size() && d < 3; ++d) box.center[d] = center[d];
  box.half_edge = cfg.get_double("condenser.half_edge", 1.0);
  c.grid = Grid(dim, n, box);
  c.p = cfg.get_double("condenser.p");
  const CapacitySettings settings = capacity_settings(cfg, resolve_workers(g.workers));
  c.eps = settings.eps_factor * c.grid.spacing();

  const std::string obstacle_kind = cfg.get_string("condenser.obstacle_kind", "ball");
  const double obstacle_size = cfg.get_double("condenser.obstacle_size");
  const std::string outer_kind = cfg.get_string("condenser.outer_kind", "cube");
  const double outer_size = cfg.get_double("condenser.outer_size", 0.0);
  cfg.check_consumed();

  c.domain = Condenser::interior_domain(c.grid);
  c.obstacle.assign(c.grid.cell_count(), 0);
  for (std::size_t i = 0; i < c.grid.cell_count(); ++i) {
    const Point x = c.grid.center(i);
    double rr = 0.0, linf = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double off = x[d] - box.center[d];
      rr += off * off;
      linf = std::max(linf, std::abs(off));
    }
    const double r = std::sqrt(rr);
    if (obstacle_size > 0.0) {
      if (obstacle_kind == "ball" && r <= obstacle_size) c.obstacle[i] = 1;
      if (obstacle_kind == "cube" && linf <= obstacle_size) c.obstacle[i] = 1;
    }
    if (outer_kind == "ball" && r >= outer_size) c.domain[i] = 0;
  }

  const CapacityResult res = p_capacity(c, settings);

  ordered_json j;
  j["value"] = res.value;
  j["iterations"] = res.iterations;
  j["energy_residual"] = res.energy_residual;
  j["p"] = c.p;
  j["dim"] = dim;
  j["grid_n"] = n;
  j["eps"] = c.eps;
  write_json(out_path(g, "capacity.json"), j);
  manifest.outputs.push_back(out_path(g, "capacity.json"));

  CsvWriter csv(out_path(g, "capacity.csv"),
                {"value", "iterations", "energy_residual", "p", "grid_n"});
  csv.row({fmt_double(res.value), std::to_string(res.iterations),
           fmt_double(res.energy_residual), fmt_double(c.p), std::to_string(n)});
  manifest.outputs.push_back(out_path(g, "capacity.csv"));

  finish_manifest(manifest, g);
  std::cout << "capacity value = " << fmt_double(res.value) << " ("
            << res.iterations << " iterations)\n";
  return 0;
}

// ------------------------------------------------------------ delta-profile
int cmd_delta_profile(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "delta-profile");

  const DomainMask mask = build_domain(cfg, "domain.");
  Point x_o{{0, 0, 0}};
  const auto xo = cfg.get_doubles("profile.x_o", {0, 0, 0});
  for (std::size_t d = 0; d < xo.size() && d < 3; ++d) x_o[d] = xo[d];
  const double p = cfg.get_double("profile.p");
  const int num_scales = cfg.get_int("profile.scales", 6);
  const double rho_max = cfg.get_double("profile.rho_max", 0.0);
  const double ratio = cfg.get_double("profile.scale_ratio", 0.5);
  const CapacitySettings settings = capacity_settings(cfg, resolve_workers(g.workers));
  cfg.check_consumed();

  const CapacityProfile prof =
      capacity_profile(mask, x_o, p, num_scales, settings, rho_max, ratio);

  CsvWriter csv(out_path(g, "profile.csv"),
                {"scale", "delta", "numerator_cap", "denominator_cap", "residual"});
  for (std::size_t j = 0; j < prof.scales.size(); ++j)
    csv.row_values({prof.scales[j], prof.delta[j], prof.rows[j].numerator,
                    prof.rows[j].denominator, prof.rows[j].residual});
  manifest.outputs.push_back(out_path(g, "profile.csv"));

  ordered_json j;
  j["gamma_o"] = prof.gamma_o;
  j["rho_bar"] = prof.rho_bar;
  j["p"] = p;
  j["resolved_scales"] = prof.resolved_count();
  auto gaps = ordered_json::array();
  for (std::size_t k = 0; k < prof.gaps.size(); ++k)
    if (!prof.gaps[k].empty())
      gaps.push_back({{"scale", prof.scales[k]}, {"error", prof.gaps[k]}});
  j["gaps"] = gaps;
  write_json(out_path(g, "profile.json"), j);
  manifest.outputs.push_back(out_path(g, "profile.json"));

  if (g.svg) {
    SvgSeries s;
    s.label = "delta(rho)";
    for (std::size_t k = 0; k < prof.scales.size(); ++k) {
      if (!std::isfinite(prof.delta[k])) continue;
      s.x.push_back(std::log2(prof.scales[k]));
      s.y.push_back(prof.delta[k]);
    }
    write_svg_chart(out_path(g, "profile.svg"), "capacity ratio profile",
                    "log2 scale", "delta", {s});
    manifest.outputs.push_back(out_path(g, "profile.svg"));
  }

  finish_manifest(manifest, g);
  std::cout << "gamma_o = " << fmt_double(prof.gamma_o) << " over "
            << prof.resolved_count() << " resolved scales\n";
  return 0;
}

// --------------------------------------------------------------------- qo
int cmd_qo(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "qo");

  const double p = cfg.get_double("structure.p");
  const int N = cfg.get_int("structure.N");
  const std::string r_str = cfg.get_string("harnack.r", "auto");
  std::optional<double> user_d;
  if (cfg.has("harnack.d")) user_d = cfg.get_double("harnack.d");
  cfg.check_consumed();

  const double r = (r_str == "auto") ? choose_r(p, N) : std::stod(r_str);
  const HarnackParams hp = qo_exponent(p, N, r, user_d);

  ordered_json j;
  j["p"] = hp.p;
  j["N"] = hp.N;
  j["p_star"] = 2.0 * N / (N + 1.0);
  j["r"] = hp.r;
  j["r_mode"] = (r_str == "auto") ? "auto" : "explicit";
  j["lambda_r"] = hp.lambda_r;
  j["d"] = hp.d;
  j["d_mode"] = hp.prototype_d ? "prototype-formula" : "user-supplied";
  j["q_o"] = hp.q_o;
  j["q_conjectured"] = 1.0 / (p - 1.0);
  write_json(out_path(g, "qo.json"), j);
  manifest.outputs.push_back(out_path(g, "qo.json"));
  finish_manifest(manifest, g);
  std::cout << "q_o = " << fmt_double(hp.q_o) << " (r = " << fmt_double(hp.r)
            << ", d = " << fmt_double(hp.d)
            << ", lambda_r = " << fmt_double(hp.lambda_r) << ")\n";
  return 0;
}

// ------------------------------------------------------------------ wiener
CapacityProfile profile_from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open profile csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty profile csv: " + path);
  CapacityProfile prof;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 2) throw ConfigError("bad profile row: " + line);
    prof.scales.push_back(std::stod(cells[0]));
    prof.delta.push_back(std::stod(cells[1]));
    prof.rows.push_back({});
    prof.gaps.push_back("");
  }
  if (prof.scales.empty()) throw ConfigError("profile csv has no rows: " + path);
  prof.rho_bar = prof.scales.front();
  double gmin = std::numeric_limits<double>::infinity();
  for (double d : prof.delta)
    if (std::isfinite(d)) gmin = std::min(gmin, d);
  prof.gamma_o = std::isfinite(gmin) ? gmin : 0.0;
  return prof;
}

int cmd_wiener(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "wiener");

  const double p = cfg.get_double("structure.p");
  const int N = cfg.get_int("structure.N");
  const std::string r_str = cfg.get_string("harnack.r", "auto");
  std::optional<double> user_d;
  if (cfg.has("harnack.d")) user_d = cfg.get_double("harnack.d");
  const double r = (r_str == "auto") ? choose_r(p, N) : std::stod(r_str);
  const HarnackParams hp = qo_exponent(p, N, r, user_d);

  WienerSettings ws;
  ws.alpha = cfg.get_double("wiener.alpha", ws.alpha);
  ws.c = cfg.get_double("wiener.c", ws.c);
  ws.fat_tol = cfg.get_double("wiener.fat_tol", ws.fat_tol);
  ws.decay_guard = cfg.get_double("wiener.decay_guard", ws.decay_guard);
  ws.slope_tol = cfg.get_double("wiener.slope_tol", ws.slope_tol);
  const double omega_o = cfg.get_double("wiener.omega_o", 1.0);

  CapacityProfile prof;
  if (cfg.has("wiener.profile_csv")) {
    prof = profile_from_csv(cfg.get_string("wiener.profile_csv"));
    cfg.check_consumed();
  } else {
    const DomainMask mask = build_domain(cfg, "domain.");
    Point x_o{{0, 0, 0}};
    const auto xo = cfg.get_doubles("profile.x_o", {0, 0, 0});
    for (std::size_t d = 0; d < xo.size() && d < 3; ++d) x_o[d] = xo[d];
    const int num_scales = cfg.get_int("profile.scales", 6);
    const double rho_max = cfg.get_double("profile.rho_max", 0.0);
    const double ratio = cfg.get_double("profile.scale_ratio", 0.5);
    const CapacitySettings settings =
        capacity_settings(cfg, resolve_workers(g.workers));
    cfg.check_consumed();
    prof = capacity_profile(mask, x_o, p, num_scales, settings, rho_max, ratio);
  }

  // drop trailing gaps; quadrature needs a contiguous profile
  std::size_t usable = 0;
  while (usable < prof.delta.size() && std::isfinite(prof.delta[usable])) ++usable;
  prof.scales.resize(usable);
  prof.delta.resize(usable);
  if (usable < 2) throw NumericsError("wiener: fewer than 2 resolved scales");

  const WienerReport rep = modulus_and_reference(prof, hp, ws, omega_o);

  CsvWriter csv(out_path(g, "wiener.csv"),
                {"scale", "delta", "integral", "modulus", "r_tilde"});
  for (std::size_t j = 0; j < rep.s.size(); ++j)
    csv.row_values({prof.scales[j], prof.delta[j], rep.integral[j], rep.modulus[j],
                    rep.r_tilde[j]});
  manifest.outputs.push_back(out_path(g, "wiener.csv"));

  ordered_json j;
  j["q_o"] = hp.q_o;
  j["r"] = hp.r;
  j["d"] = hp.d;
  j["lambda_r"] = hp.lambda_r;
  j["alpha"] = rep.alpha;
  j["c"] = rep.c;
  j["omega_o"] = rep.omega_o;
  j["classification"] = to_string(rep.classification);
  j["slope_deep"] = rep.slope_deep;
  j["fat_min"] = rep.fat_min;
  write_json(out_path(g, "wiener.json"), j);
  manifest.outputs.push_back(out_path(g, "wiener.json"));

  if (g.svg) {
    SvgSeries si, sm;
    si.label = "integral";
    sm.label = "modulus";
    for (std::size_t k = 0; k < rep.s.size(); ++k) {
      si.x.push_back(std::log(1.0 / rep.s[k]));
      si.y.push_back(rep.integral[k]);
      sm.x.push_back(std::log(1.0 / rep.s[k]));
      sm.y.push_back(rep.modulus[k]);
    }
    write_svg_chart(out_path(g, "wiener.svg"), "Wiener integral and modulus",
                    "ln(1/s)", "value", {si, sm});
    manifest.outputs.push_back(out_path(g, "wiener.svg"));
  }

  finish_manifest(manifest, g);
  std::cout << "classification: " << to_string(rep.classification)
            << " (q_o = " << fmt_double(hp.q_o) << ")\n";
  return 0;
}

// ------------------------------------------------------------------- solve
int cmd_solve(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "solve");

  const DomainMask mask = build_domain(cfg, "domain.");
  StructureParams sp;
  sp.p = cfg.get_double("structure.p");
  sp.N = mask.grid.dim();
  sp.C_o = cfg.get_double("structure.C_o", 1.0);
  sp.C_1 = cfg.get_double("structure.C_1", 1.0);
  sp.Lambda = cfg.get_double("structure.Lambda", 0.0);
  const FluxModel model = parse_flux_model(cfg, "model.", mask.grid.dim());
  const TimeGridSpec tg = parse_time_grid(cfg, "time.");
  const SolveSettings ss = parse_solve_settings(cfg, "solver.");
  const int slice_every = cfg.get_int("output.slice_every", 0);
  cfg.check_consumed();

  const Trajectory traj = solve_cauchy_dirichlet(mask, model, sp, tg, ss);

  const std::string ckpt = out_path(g, "trajectory.bin");
  save_trajectory(traj, ckpt);
  manifest.outputs.push_back(ckpt);

  if (slice_every > 0) {
    for (std::size_t k = 0; k < traj.snapshot_count();
         k += static_cast<std::size_t>(slice_every)) {
      const std::string path = out_path(g, "slice_" + std::to_string(k) + ".csv");
      export_slice_csv(traj, k, path);
      manifest.outputs.push_back(path);
    }
  }
  const std::string final_slice = out_path(g, "slice_final.csv");
  export_slice_csv(traj, traj.snapshot_count() - 1, final_slice);
  manifest.outputs.push_back(final_slice);

  ordered_json j;
  j["snapshots"] = traj.snapshot_count();
  j["t_end"] = traj.times.back();
  j["final_sup"] = traj.sup_at(traj.snapshot_count() - 1);
  j["final_mass"] = inside_mass(traj, traj.snapshot_count() - 1);
  j["eps"] = traj.eps;
  write_json(out_path(g, "solve.json"), j);
  manifest.outputs.push_back(out_path(g, "solve.json"));

  finish_manifest(manifest, g);
  std::cout << "stored " << traj.snapshot_count() << " snapshots, final sup = "
            << fmt_double(traj.sup_at(traj.snapshot_count() - 1)) << "\n";
  return 0;
}

// ------------------------------------------------------------------ verify
int cmd_verify(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "verify");
  const std::string mode = cfg.get_string("verify.mode", "decay");

  ExperimentConfig ec = parse_experiment(cfg);
  ec.capacity.workers = resolve_workers(g.workers);
  cfg.check_consumed();

  const VerifierReport rep =
      (mode == "pfat-holder") ? check_pfat_holder(ec) : verify_boundary_decay(ec);

  write_verifier_csv(rep, out_path(g, "verifier.csv"));
  manifest.outputs.push_back(out_path(g, "verifier.csv"));
  std::ofstream js(out_path(g, "verifier.json"));
  js << verifier_report_json(rep) << '\n';
  js.close();
  manifest.outputs.push_back(out_path(g, "verifier.json"));

  if (g.svg) {
    SvgSeries s;
    s.label = "log omega vs integral";
    for (const auto& row : rep.rows) {
      if (!row.resolvable || row.omega.empty() || !(row.omega.back() > 0)) continue;
      s.x.push_back(row.integral);
      s.y.push_back(std::log(row.omega.back()));
    }
    write_svg_chart(out_path(g, "verifier.svg"), "boundary decay", "I(rho)",
                    "log omega", {s});
    manifest.outputs.push_back(out_path(g, "verifier.svg"));
  }

  finish_manifest(manifest, g);
  for (const auto& f : rep.fits)
    std::cout << "c = " << fmt_double(f.c) << ": gamma_fit = "
              << fmt_double(f.gamma_fit) << ", corr = " << fmt_double(f.correlation)
              << (f.pass ? " [pass]" : " [fail]") << "\n";
  std::cout << "alpha_fit = " << fmt_double(rep.alpha_fit.slope)
            << ", classification = " << to_string(rep.classification)
            << (rep.pass ? " => PASS" : " => FAIL") << "\n";
  return rep.pass ? 0 : 1;
}

// ----------------------------------------------------------- harnack-check
int run_harnack_sweeps(const AuxExperiment& aux, const Trajectory& traj,
                       std::vector<L1HarnackRow>& l1_rows,
                       std::vector<HarnackTypeRow>& fv_rows) {
  const double unit = std::pow(aux.rho, aux.structure.p);
  const double avg0 = traj.cube_average(0, Cube{aux.x_o, 2.0 * aux.rho});
  const double intrinsic = unit * std::pow(avg0, 2.0 - aux.structure.p);
  for (double frac : {0.25, 0.5, 1.0})
    l1_rows.push_back(
        check_l1_harnack(traj, aux.x_o, aux.rho, 0.0, frac * intrinsic));
  const HarnackParams hp = qo_exponent(aux.structure.p, aux.dim, aux.r);
  for (double sf : {0.5, 1.0, 2.0})
    fv_rows.push_back(
        check_harnack_type(traj, aux.x_o, 0.0, sf * aux.rho, hp, 0.1));
  return 0;
}

int cmd_harnack_check(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "harnack-check");
  AuxExperiment aux = parse_aux(cfg);
  const double refine_factor = cfg.get_double("aux.refine_factor", 1.5);
  cfg.check_consumed();

  const Trajectory traj = solve_auxiliary(aux);
  std::vector<L1HarnackRow> l1, l1_ref;
  std::vector<HarnackTypeRow> fv, fv_ref;
  run_harnack_sweeps(aux, traj, l1, fv);

  bool pass = true;
  double l1_max = 0.0, fv_min = std::numeric_limits<double>::infinity();
  for (const auto& row : l1) {
    pass = pass && row.gamma_min > 0.0;
    l1_max = std::max(l1_max, row.gamma_min);
  }
  for (const auto& row : fv) {
    if (row.vacuous || !row.window_ok) continue;
    fv_min = std::min(fv_min, row.ratio);
  }
  pass = pass && fv_min > 0.0 && std::isfinite(fv_min);

  double l1_drift = 1.0, fv_drift = 1.0;
  if (refine_factor > 1.0) {
    const AuxExperiment fine = refine_aux(aux, refine_factor);
    const Trajectory traj_ref = solve_auxiliary(fine);
    run_harnack_sweeps(fine, traj_ref, l1_ref, fv_ref);
    double l1_max_ref = 0.0, fv_min_ref = std::numeric_limits<double>::infinity();
    for (const auto& row : l1_ref) l1_max_ref = std::max(l1_max_ref, row.gamma_min);
    for (const auto& row : fv_ref) {
      if (row.vacuous || !row.window_ok) continue;
      fv_min_ref = std::min(fv_min_ref, row.ratio);
    }
    l1_drift = l1_max_ref / l1_max;
    fv_drift = fv_min_ref / fv_min;
    const double sf = aux.criteria.stability_factor;
    pass = pass && l1_drift < sf && l1_drift > 1.0 / sf && fv_drift < sf &&
           fv_drift > 1.0 / sf;
  }

  CsvWriter csv(out_path(g, "harnack.csv"),
                {"check", "rho", "window_lo", "window_hi", "value", "extra"});
  for (const auto& row : l1)
    csv.row({"l1", fmt_double(row.rho), fmt_double(row.s1), fmt_double(row.t1),
             fmt_double(row.gamma_min), fmt_double(row.rhs_tail)});
  for (const auto& row : fv)
    csv.row({"fv", fmt_double(row.rho), fmt_double(row.s),
             fmt_double(row.s + row.theta * std::pow(row.rho, aux.structure.p)),
             fmt_double(row.ratio), fmt_double(row.sigma)});
  manifest.outputs.push_back(out_path(g, "harnack.csv"));

  ordered_json j;
  j["l1_gamma_max"] = l1_max;
  j["fv_ratio_min"] = fv_min;
  j["l1_drift"] = l1_drift;
  j["fv_drift"] = fv_drift;
  j["refine_factor"] = refine_factor;
  j["pass"] = pass;
  write_json(out_path(g, "harnack.json"), j);
  manifest.outputs.push_back(out_path(g, "harnack.json"));

  finish_manifest(manifest, g);
  std::cout << "l1 gamma_max = " << fmt_double(l1_max) << " (drift "
            << fmt_double(l1_drift) << "), fv ratio_min = " << fmt_double(fv_min)
            << " (drift " << fmt_double(fv_drift) << ")"
            << (pass ? " => PASS" : " => FAIL") << "\n";
  return pass ? 0 : 1;
}

// -------------------------------------------------------- extinction-check
int cmd_extinction_check(const GlobalOpts& g) {
  Config cfg = load_config(g);
  RunManifest manifest = start_manifest(g, cfg, "extinction-check");
  AuxExperiment aux = parse_aux(cfg);
  const double refine_factor = cfg.get_double("aux.refine_factor", 1.5);
  cfg.check_consumed();

  const Trajectory traj = solve_auxiliary(aux);
  const ExtinctionReport rep = check_extinction_window(aux, traj);

  bool pass = rep.extinct && rep.kappa_star > 0.0;
  double frac_drift = 1.0;
  if (refine_factor > 1.0) {
    const Trajectory traj_ref = solve_auxiliary(refine_aux(aux, refine_factor));
    const ExtinctionReport rep_ref =
        check_extinction_window(refine_aux(aux, refine_factor), traj_ref);
    if (rep.frac_star > 0.0 && rep_ref.frac_star > 0.0)
      frac_drift = rep_ref.frac_star / rep.frac_star;
    const double sf = aux.criteria.stability_factor;
    pass = pass && rep_ref.extinct && frac_drift < sf && frac_drift > 1.0 / sf;
  }

  CsvWriter csv(out_path(g, "extinction.csv"), {"kappa", "frac"});
  for (std::size_t k = 0; k < rep.kappa.size(); ++k)
    csv.row_values({rep.kappa[k], rep.frac[k]});
  manifest.outputs.push_back(out_path(g, "extinction.csv"));

  ordered_json j;
  j["extinct"] = rep.extinct;
  j["t_ext"] = rep.t_ext;
  j["horizon"] = rep.horizon;
  j["sup0"] = rep.sup0;
  j["avg0"] = rep.avg0;
  j["intrinsic_unit"] = rep.intrinsic_unit;
  j["dimensionless_ratio"] = rep.dimensionless_ratio;
  j["kappa_star"] = rep.kappa_star;
  j["frac_star"] = rep.frac_star;
  j["frac_drift"] = frac_drift;
  j["pass"] = pass;
  write_json(out_path(g, "extinction.json"), j);
  manifest.outputs.push_back(out_path(g, "extinction.json"));

  finish_manifest(manifest, g);
  if (!rep.extinct)
    std::cout << "no extinction within horizon " << fmt_double(rep.horizon)
              << " (not a failure by itself; horizon may be short)\n";
  std::cout << "t_ext = " << fmt_double(rep.t_ext) << ", kappa_star = "
            << fmt_double(rep.kappa_star) << ", frac_star = "
            << fmt_double(rep.frac_star) << (pass ? " => PASS" : " => FAIL")
            << "\n";
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"caplab: elliptic p-capacities, Wiener-type integrals and "
               "singular parabolic p-laplacian experiments on rough domains"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "path to the plain-text config")
      ->required();
  app.add_option("--out-dir", g.out_dir, "output directory (default: out)");
  app.add_option("--workers", g.workers,
                 "parallel workers (default: $CAPLAB_WORKERS or 1)");
  app.add_option("--seed", g.seed, "rng seed recorded in the manifest");
  app.add_flag("--svg", g.svg, "emit self-contained SVG charts");
  app.add_option("--set", g.overrides, "override a config key (key=value)");

  auto* c1 = app.add_subcommand("capacity", "p-capacity of one condenser");
  auto* c2 = app.add_subcommand("delta-profile", "capacity-ratio profile delta(rho)");
  auto* c3 = app.add_subcommand("qo", "Harnack exponent q_o arithmetic");
  auto* c4 = app.add_subcommand("wiener", "Wiener integral, modulus, classification");
  auto* c5 = app.add_subcommand("solve", "Cauchy-Dirichlet solve with checkpoint");
  auto* c6 = app.add_subcommand("verify", "boundary decay verification report");
  auto* c7 = app.add_subcommand("harnack-check", "L1 and Harnack-type inequality sweeps");
  auto* c8 = app.add_subcommand("extinction-check", "finite extinction window report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (c1->parsed()) return cmd_capacity(g);
    if (c2->parsed()) return cmd_delta_profile(g);
    if (c3->parsed()) return cmd_qo(g);
    if (c4->parsed()) return cmd_wiener(g);
    if (c5->parsed()) return cmd_solve(g);
    if (c6->parsed()) return cmd_verify(g);
    if (c7->parsed()) return cmd_harnack_check(g);
    if (c8->parsed()) return cmd_extinction_check(g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
