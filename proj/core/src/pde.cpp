#include "caplab/pde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "caplab/report.hpp"

namespace caplab {

void StructureParams::validate() const {
  if (!(p > 1.0 && p < 2.0)) throw ConfigError("structure: requires 1 < p < 2");
  if (N < 1 || N > 3) throw ConfigError("structure: N must be 1, 2 or 3");
  if (!(C_o > 0.0 && C_1 > 0.0)) throw ConfigError("structure: C_o, C_1 must be positive");
  if (C_o > C_1) throw ConfigError("structure: C_o must not exceed C_1");
  if (Lambda < 0.0) throw ConfigError("structure: Lambda must be non-negative");
}

double FluxModel::lower_bound(int dim) const {
  if (kind == Kind::prototype) return 1.0;
  double m = diag[0];
  for (int d = 1; d < dim; ++d) m = std::min(m, diag[d]);
  return m;
}

double FluxModel::upper_bound(int dim) const {
  if (kind == Kind::prototype) return 1.0;
  double m = diag[0];
  for (int d = 1; d < dim; ++d) m = std::max(m, diag[d]);
  return m;
}

void FluxModel::validate(const StructureParams& sp) const {
  if (kind == Kind::diagonal) {
    for (int d = 0; d < sp.N; ++d)
      if (!(diag[d] > 0.0))
        throw ConfigError("flux model: diagonal entries must be positive");
  }
  const double tol = 1e-12;
  if (lower_bound(sp.N) < sp.C_o - tol || upper_bound(sp.N) > sp.C_1 + tol)
    throw ConfigError("flux model: ellipticity bounds [" +
                      std::to_string(lower_bound(sp.N)) + ", " +
                      std::to_string(upper_bound(sp.N)) +
                      "] violate the declared structure constants");
}

FluxModel parse_flux_model(const Config& cfg, const std::string& prefix, int dim) {
  FluxModel m;
  const std::string kind = cfg.get_string(prefix + "kind", "prototype");
  if (kind == "prototype") {
    m.kind = FluxModel::Kind::prototype;
  } else if (kind == "diagonal-matrix" || kind == "diagonal") {
    m.kind = FluxModel::Kind::diagonal;
    const auto d = cfg.get_doubles(prefix + "diag");
    if (d.size() != static_cast<std::size_t>(dim))
      throw ConfigError("field `" + prefix + "diag`: expected " +
                        std::to_string(dim) + " entries");
    for (int i = 0; i < dim; ++i) m.diag[i] = d[i];
  } else {
    throw ConfigError("unknown flux model kind `" + kind +
                      "` (expected prototype|diagonal-matrix)");
  }
  return m;
}

double min_monotonicity(const FluxModel& model, double p, int dim, int samples,
                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  auto flux = [&](const std::array<double, 3>& xi, std::array<double, 3>& out) {
    double norm2 = 0.0;
    for (int d = 0; d < dim; ++d) norm2 += xi[d] * xi[d];
    const double w = std::pow(norm2, 0.5 * (p - 2.0));
    for (int d = 0; d < dim; ++d) out[d] = model.axis_coefficient(d) * w * xi[d];
  };
  double worst = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    std::array<double, 3> a{{0, 0, 0}}, b{{0, 0, 0}}, fa{}, fb{};
    double na = 0, nb = 0, dd = 0;
    for (int d = 0; d < dim; ++d) {
      a[d] = uni(rng);
      b[d] = uni(rng);
      na += a[d] * a[d];
      nb += b[d] * b[d];
      const double e = a[d] - b[d];
      dd += e * e;
    }
    if (na < 1e-12 || nb < 1e-12 || dd < 1e-12) continue;
    flux(a, fa);
    flux(b, fb);
    double val = 0.0;
    for (int d = 0; d < dim; ++d) val += (fa[d] - fb[d]) * (a[d] - b[d]);
    worst = std::min(worst, val / dd);
  }
  return worst;
}

std::vector<double> make_time_grid(const TimeGridSpec& spec) {
  if (!(spec.t_end > 0.0)) throw ConfigError("time grid: t_end must be positive");
  std::vector<double> times;
  if (spec.kind == "fixed") {
    if (!(spec.dt > 0.0)) throw ConfigError("time grid: dt must be positive");
    const int steps = static_cast<int>(std::ceil(spec.t_end / spec.dt - 1e-12));
    times.reserve(steps);
    for (int k = 1; k <= steps; ++k)
      times.push_back(std::min(k * spec.dt, spec.t_end));
    times.back() = spec.t_end;
  } else if (spec.kind == "graded") {
    if (!(spec.dt_min > 0.0 && spec.dt_max >= spec.dt_min && spec.growth > 1.0))
      throw ConfigError("time grid: need 0 < dt_min <= dt_max and growth > 1");
    const double anchor =
        (spec.anchor > 0.0 && spec.anchor <= spec.t_end) ? spec.anchor : spec.t_end;
    // Backward from the anchor. This half never looks at t_end, so anchored
    // times are unchanged when the horizon is extended.
    std::vector<double> back;
    double t = anchor, dt = spec.dt_min;
    while (t > 0.0) {
      back.push_back(t);
      t -= dt;
      dt = std::min(dt * spec.growth, spec.dt_max);
    }
    times.assign(back.rbegin(), back.rend());
    t = anchor;
    dt = spec.dt_min;
    while (t < spec.t_end - 1e-15 * spec.t_end) {
      t = std::min(t + dt, spec.t_end);
      times.push_back(t);
      dt = std::min(dt * spec.growth, spec.dt_max);
    }
  } else {
    throw ConfigError("time grid: unknown kind `" + spec.kind +
                      "` (expected fixed|graded)");
  }
  return times;
}

TimeGridSpec parse_time_grid(const Config& cfg, const std::string& prefix) {
  TimeGridSpec s;
  s.kind = cfg.get_string(prefix + "kind", "fixed");
  s.t_end = cfg.get_double(prefix + "t_end");
  s.dt = cfg.get_double(prefix + "dt", s.dt);
  s.anchor = cfg.get_double(prefix + "anchor", s.anchor);
  s.dt_min = cfg.get_double(prefix + "dt_min", s.dt_min);
  s.dt_max = cfg.get_double(prefix + "dt_max", s.dt_max);
  s.growth = cfg.get_double(prefix + "growth", s.growth);
  s.store_from = cfg.get_double(prefix + "store_from", s.store_from);
  s.store_stride = cfg.get_int(prefix + "store_stride", s.store_stride);
  return s;
}

SolveSettings parse_solve_settings(const Config& cfg, const std::string& prefix) {
  SolveSettings s;
  s.tol = cfg.get_double(prefix + "tol", s.tol);
  s.max_picard = cfg.get_int(prefix + "max_picard", s.max_picard);
  s.max_halvings = cfg.get_int(prefix + "max_halvings", s.max_halvings);
  s.cg_rtol = cfg.get_double(prefix + "cg_rtol", s.cg_rtol);
  s.cg_max_iters = cfg.get_int(prefix + "cg_max_iters", s.cg_max_iters);
  s.eps_factor = cfg.get_double(prefix + "eps_factor", s.eps_factor);
  s.verbosity = cfg.get_int(prefix + "verbosity", s.verbosity);
  return s;
}

namespace {

/// Implicit-Euler workhorse: lagged-diffusivity (damped Picard) iterations on
/// the regularized flux with CG inner solves. Face conductivities live on
/// forward faces; tangential gradient components are face-averaged.
class ImplicitSolver {
public:
  ImplicitSolver(const DomainMask& mask, const FluxModel& model, double p,
                 double eps, const SolveSettings& cfg, const SourceFn& source)
      : mask_(mask), model_(model), p_(p), eps_(eps), cfg_(cfg), source_(source),
        grid_(mask.grid) {
    dim_ = grid_.dim();
    n_ = grid_.n();
    h_ = grid_.spacing();
    const std::size_t total = grid_.cell_count();
    active_.assign(total, 0);
    for (std::size_t i = 0; i < total; ++i) {
      if (!mask_.inside[i]) continue;
      const auto m = grid_.unravel(i);
      bool interior = true;
      for (int d = 0; d < dim_; ++d)
        if (m[d] == 0 || m[d] == n_ - 1) interior = false;
      if (interior) {
        active_[i] = 1;
        active_list_.push_back(i);
      }
    }
    for (int d = 0; d < dim_; ++d) {
      stride_[d] = grid_.stride(d);
      kappa_[d].assign(total, 0.0);
    }
    build_face_lists();
    diag_.assign(total, 1.0);
    b_.assign(total, 0.0);
    r_.assign(total, 0.0);
    z_.assign(total, 0.0);
    pv_.assign(total, 0.0);
    Ap_.assign(total, 0.0);
    cand_.assign(total, 0.0);
  }

  /// Sets Dirichlet values g(x, t) on every non-active cell of u.
  void impose_data(std::vector<double>& u, double t) const {
    const auto& g = mask_.datum;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (!active_[i]) u[i] = g(grid_.center(i), t);
  }

  /// One implicit step from (u_old, t_old) to t_old + dt; returns Picard
  /// iterations used, or -1 on non-convergence.
  int try_step(const std::vector<double>& u_old, double t_old, double dt,
               std::vector<double>& u, StepStats* stats) {
    const double t_new = t_old + dt;
    dt_over_h2_ = dt / (h_ * h_);
    u = u_old;
    impose_data(u, t_new);
    if (active_list_.empty()) return 0;

    double lambda = 1.0;
    double prev_res = std::numeric_limits<double>::infinity();
    for (int m = 0; m < cfg_.max_picard; ++m) {
      compute_kappa(u);
      const double res = residual_max(u, u_old, t_new, dt);
      if (stats) stats->residual = res;
      if (res < cfg_.tol) return m;
      if (res > prev_res)
        lambda = std::max(0.25, 0.5 * lambda);
      else if (res < 0.5 * prev_res)
        lambda = std::min(1.0, 1.3 * lambda);
      prev_res = res;

      build_system(u, u_old, t_new, dt);
      const int cg = solve_cg(u);
      if (stats) {
        stats->cg_iters += cg;
        stats->picard_iters = m + 1;
      }
      if (lambda < 1.0)
        for (std::size_t idx : active_list_)
          u[idx] += lambda * (cand_[idx] - u[idx]);
      else
        for (std::size_t idx : active_list_) u[idx] = cand_[idx];
    }
    compute_kappa(u);
    const double res = residual_max(u, u_old, t_new, dt);
    if (stats) stats->residual = res;
    return res < cfg_.tol ? cfg_.max_picard : -1;
  }

  /// Step with recursive dt splitting.
  void advance(std::vector<double>& u, double t_old, double dt, int depth,
               StepStats* stats) {
    std::vector<double> next;
    if (try_step(u, t_old, dt, next, stats) >= 0) {
      u.swap(next);
      return;
    }
    if (depth >= cfg_.max_halvings)
      throw NumericsError("implicit step did not converge at t = " +
                          fmt_double(t_old) + ", dt = " + fmt_double(dt) +
                          " (residual " +
                          fmt_double(stats ? stats->residual : -1.0) + " after " +
                          std::to_string(cfg_.max_picard) + " iterations, depth " +
                          std::to_string(depth) + ")");
    if (stats) ++stats->halvings;
    advance(u, t_old, 0.5 * dt, depth + 1, stats);
    advance(u, t_old + 0.5 * dt, 0.5 * dt, depth + 1, stats);
  }

private:
  void build_face_lists() {
    // faces (i, i+e_d) adjacent to an active cell; active cells are interior,
    // so the tangential stencil of every listed face stays in bounds
    for (int d = 0; d < dim_; ++d) {
      auto& list = faces_[d];
      for (std::size_t i = 0; i < grid_.cell_count(); ++i) {
        const auto m = grid_.unravel(i);
        if (m[d] + 1 >= n_) continue;
        auto nb = m;
        nb[d] += 1;
        if (!active_[i] && !active_[grid_.ravel(nb)]) continue;
        list.push_back(static_cast<std::uint32_t>(i));
      }
    }
  }

  void compute_kappa(const std::vector<double>& u) {
    const double inv_h = 1.0 / h_;
    const double inv_4h = 0.25 / h_;
    const double e2 = eps_ * eps_;
    const double expo = 0.5 * (p_ - 2.0);
    for (int d = 0; d < dim_; ++d) {
      const double coef = model_.axis_coefficient(d);
      const std::size_t sd = stride_[d];
      auto& K = kappa_[d];
      for (const std::uint32_t fi : faces_[d]) {
        const std::size_t i = fi;
        const double dn = (u[i + sd] - u[i]) * inv_h;
        double g2 = dn * dn;
        for (int t = 0; t < dim_; ++t) {
          if (t == d) continue;
          const std::size_t st = stride_[t];
          const double dtv =
              (u[i + st] + u[i + sd + st] - u[i - st] - u[i + sd - st]) * inv_4h;
          g2 += dtv * dtv;
        }
        K[i] = coef * std::pow(g2 + e2, expo);
      }
    }
  }

  double divergence_at(const std::vector<double>& u, std::size_t i) const {
    double acc = 0.0;
    for (int d = 0; d < dim_; ++d) {
      const std::size_t sd = stride_[d];
      acc += kappa_[d][i] * (u[i + sd] - u[i]) -
             kappa_[d][i - sd] * (u[i] - u[i - sd]);
    }
    return acc / (h_ * h_);
  }

  double residual_max(const std::vector<double>& u,
                      const std::vector<double>& u_old, double t_new,
                      double dt) const {
    double worst = 0.0;
    for (std::size_t i : active_list_) {
      double res = u[i] - u_old[i] - dt * divergence_at(u, i);
      if (source_) res -= dt * source_(grid_.center(i), t_new);
      worst = std::max(worst, std::abs(res));
    }
    return worst;
  }

  void build_system(const std::vector<double>& u, const std::vector<double>& u_old,
                    double t_new, double dt) {
    const double w = dt_over_h2_;
    for (std::size_t i : active_list_) {
      double diag = 1.0;
      double rhs = u_old[i];
      if (source_) rhs += dt * source_(grid_.center(i), t_new);
      for (int d = 0; d < dim_; ++d) {
        const std::size_t sd = stride_[d];
        const double kp = kappa_[d][i];
        const double km = kappa_[d][i - sd];
        diag += w * (kp + km);
        if (!active_[i + sd]) rhs += w * kp * u[i + sd];
        if (!active_[i - sd]) rhs += w * km * u[i - sd];
      }
      diag_[i] = diag;
      b_[i] = rhs;
    }
  }

  /// y = A x on active cells; x reads as 0 at non-active cells.
  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    const double w = dt_over_h2_;
    for (std::size_t i : active_list_) {
      double acc = diag_[i] * x[i];
      for (int d = 0; d < dim_; ++d) {
        const std::size_t sd = stride_[d];
        if (active_[i + sd]) acc -= w * kappa_[d][i] * x[i + sd];
        if (active_[i - sd]) acc -= w * kappa_[d][i - sd] * x[i - sd];
      }
      y[i] = acc;
    }
  }

  /// Jacobi-preconditioned CG; result in cand_, warm-started from u.
  int solve_cg(const std::vector<double>& u) {
    for (std::size_t i : active_list_) cand_[i] = u[i];
    apply(cand_, Ap_);
    double rz = 0.0, r2 = 0.0;
    for (std::size_t i : active_list_) {
      r_[i] = b_[i] - Ap_[i];
      z_[i] = r_[i] / diag_[i];
      pv_[i] = z_[i];
      rz += r_[i] * z_[i];
      r2 += r_[i] * r_[i];
    }
    const double stop2 = std::max(cfg_.cg_rtol * cfg_.cg_rtol * r2, 1e-300);
    int it = 0;
    for (; it < cfg_.cg_max_iters && r2 > stop2; ++it) {
      apply(pv_, Ap_);
      double pAp = 0.0;
      for (std::size_t i : active_list_) pAp += pv_[i] * Ap_[i];
      if (!(pAp > 0.0)) break;
      const double alpha = rz / pAp;
      r2 = 0.0;
      for (std::size_t i : active_list_) {
        cand_[i] += alpha * pv_[i];
        r_[i] -= alpha * Ap_[i];
        r2 += r_[i] * r_[i];
      }
      double rz_new = 0.0;
      for (std::size_t i : active_list_) {
        z_[i] = r_[i] / diag_[i];
        rz_new += r_[i] * z_[i];
      }
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i : active_list_) pv_[i] = z_[i] + beta * pv_[i];
    }
    return it;
  }

  const DomainMask& mask_;
  const FluxModel& model_;
  double p_, eps_;
  SolveSettings cfg_;
  const SourceFn& source_;
  Grid grid_;
  int dim_ = 0, n_ = 0;
  double h_ = 0.0;
  double dt_over_h2_ = 0.0;
  std::vector<std::uint8_t> active_;
  std::vector<std::size_t> active_list_;
  std::array<std::size_t, 3> stride_{{0, 0, 0}};
  std::array<std::vector<std::uint32_t>, 3> faces_;
  std::array<std::vector<double>, 3> kappa_;
  std::vector<double> diag_, b_, r_, z_, pv_, Ap_, cand_;
};

}  // namespace

std::vector<double> step(const DomainMask& domain, const FluxModel& model,
                         double p, double eps, const std::vector<double>& u_old,
                         double t_old, double dt, const SolveSettings& settings,
                         const SourceFn& source, StepStats* stats) {
  if (!(dt > 0.0)) throw ConfigError("step: dt must be positive");
  if (u_old.size() != domain.grid.cell_count())
    throw ConfigError("step: field size mismatch");
  ImplicitSolver solver(domain, model, p, eps, settings, source);
  StepStats local;
  std::vector<double> u = u_old;
  solver.advance(u, t_old, dt, 0, stats ? stats : &local);
  return u;
}

Trajectory solve_cauchy_dirichlet(const DomainMask& domain, const FluxModel& model,
                                  const StructureParams& sp,
                                  const TimeGridSpec& timegrid,
                                  const SolveSettings& settings,
                                  std::optional<std::vector<double>> initial,
                                  const SourceFn& source) {
  sp.validate();
  model.validate(sp);
  if (sp.N != domain.grid.dim())
    throw ConfigError("solve: structure dimension differs from the mask dimension");

  Trajectory traj;
  traj.domain = domain;
  traj.model = model;
  traj.p = sp.p;
  traj.eps = settings.eps_factor * domain.grid.spacing();
  traj.timegrid = timegrid;

  const auto targets = make_time_grid(timegrid);
  ImplicitSolver solver(domain, model, sp.p, traj.eps, settings, source);

  std::vector<double> u(domain.grid.cell_count(), 0.0);
  if (initial.has_value()) {
    if (initial->size() != u.size())
      throw ConfigError("solve: initial field size mismatch");
    u = *initial;
    solver.impose_data(u, 0.0);
  } else {
    for (std::size_t i = 0; i < u.size(); ++i)
      u[i] = domain.datum(domain.grid.center(i), 0.0);
  }

  auto store = [&](double t) {
    traj.times.push_back(t);
    std::vector<float> f(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) f[i] = static_cast<float>(u[i]);
    traj.fields.push_back(std::move(f));
  };
  store(0.0);

  StepStats total;
  double t_prev = 0.0;
  int step_index = 0;
  for (double t : targets) {
    const double dt = t - t_prev;
    if (dt <= 0.0) continue;
    StepStats st;
    solver.advance(u, t_prev, dt, 0, &st);
    total.picard_iters += st.picard_iters;
    total.cg_iters += st.cg_iters;
    total.halvings += st.halvings;
    ++step_index;
    const bool in_window = t >= timegrid.store_from - 1e-15;
    const bool stride_hit = (step_index % std::max(1, timegrid.store_stride)) == 0;
    if (in_window || stride_hit || t == targets.back()) store(t);
    if (settings.verbosity > 1)
      std::fprintf(stderr, "[solve] t=%.6g dt=%.3g picard=%d cg=%d res=%.3g\n", t,
                   dt, st.picard_iters, st.cg_iters, st.residual);
    t_prev = t;
  }
  if (settings.verbosity > 0)
    std::fprintf(stderr, "[solve] %d steps, picard %d, cg %d, halvings %d\n",
                 step_index, total.picard_iters, total.cg_iters, total.halvings);
  return traj;
}

std::vector<std::size_t> Trajectory::snapshots_in(double t0, double t1) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < times.size(); ++k)
    if (times[k] > t0 && times[k] <= t1) out.push_back(k);
  return out;
}

std::size_t Trajectory::snapshot_at(double t) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  for (std::size_t k = 0; k < times.size(); ++k)
    if (std::abs(times[k] - t) <= tol) return k;
  throw ConfigError("no stored snapshot at t = " + fmt_double(t));
}

double Trajectory::cube_average(std::size_t snap, const Cube& cube) const {
  const auto ib = domain.grid.cells_in_cube(cube);
  if (ib.empty(domain.grid.dim()))
    throw ConfigError("cube_average: cube contains no cell centers");
  double acc = 0.0;
  std::size_t count = 0;
  std::array<int, 3> m;
  for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
    for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
      for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
        acc += fields[snap][domain.grid.ravel(m)];
        ++count;
      }
  return acc / count;
}

double Trajectory::sup_at(std::size_t snap) const {
  double s = -std::numeric_limits<double>::infinity();
  for (float v : fields[snap]) s = std::max(s, static_cast<double>(v));
  return s;
}

OscStats ess_osc(const Trajectory& traj, const Cylinder& cyl) {
  const auto snaps = traj.snapshots_in(cyl.t_start(), cyl.t_end);
  if (snaps.empty())
    throw ConfigError("ess_osc: cylinder time window contains no stored snapshot");
  const auto ib = traj.domain.grid.cells_in_cube(cyl.cube);
  OscStats st;
  st.mu_plus = -std::numeric_limits<double>::infinity();
  st.mu_minus = std::numeric_limits<double>::infinity();
  std::array<int, 3> m;
  std::vector<std::size_t> cells;
  for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
    for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
      for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
        const std::size_t idx = traj.domain.grid.ravel(m);
        if (traj.domain.inside[idx]) cells.push_back(idx);
      }
  if (cells.empty()) throw ConfigError("ess_osc: cylinder contains no cells of E");
  for (std::size_t k : snaps)
    for (std::size_t idx : cells) {
      const double v = traj.fields[k][idx];
      st.mu_plus = std::max(st.mu_plus, v);
      st.mu_minus = std::min(st.mu_minus, v);
    }
  st.omega = st.mu_plus - st.mu_minus;
  st.cells = cells.size();
  st.snapshots = snaps.size();
  return st;
}

TruncationExtension truncate_and_extend(const Trajectory& traj, double level,
                                        const Cube& working_cube, double s,
                                        double t_end, TruncationMode mode) {
  if (!(s < t_end)) throw ConfigError("truncate_and_extend: need s < t_end");
  std::vector<std::size_t> snaps;
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    if (traj.times[k] >= s - 1e-15 && traj.times[k] <= t_end + 1e-15)
      snaps.push_back(k);
  if (snaps.empty())
    throw ConfigError("truncate_and_extend: no stored snapshots in [s, t_end]");

  // Sigma = discrete lateral boundary inside the working cube at stored times
  const auto& grid = traj.domain.grid;
  double sup_g = -std::numeric_limits<double>::infinity();
  double inf_g = std::numeric_limits<double>::infinity();
  bool sigma_seen = false;
  const auto ib = grid.cells_in_cube(working_cube);
  std::array<int, 3> m;
  for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
    for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
      for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
        const std::size_t idx = grid.ravel(m);
        if (!traj.domain.is_boundary_cell(idx)) continue;
        sigma_seen = true;
        const Point x = grid.center(idx);
        if (traj.domain.datum.time_dependent) {
          for (std::size_t k : snaps) {
            const double g = traj.domain.datum(x, traj.times[k]);
            sup_g = std::max(sup_g, g);
            inf_g = std::min(inf_g, g);
          }
        } else {
          const double g = traj.domain.datum(x, 0.0);
          sup_g = std::max(sup_g, g);
          inf_g = std::min(inf_g, g);
        }
      }
  if (!sigma_seen)
    throw ConfigError("truncate_and_extend: working cube meets no lateral boundary");
  if (mode == TruncationMode::upper && level < sup_g - 1e-12)
    throw ConfigError("truncate_and_extend: level k = " + fmt_double(level) +
                      " below sup_Sigma g = " + fmt_double(sup_g) +
                      "; the zero extension would not be a sub-solution");
  if (mode == TruncationMode::lower && level > inf_g + 1e-12)
    throw ConfigError("truncate_and_extend: level h = " + fmt_double(level) +
                      " above inf_Sigma g = " + fmt_double(inf_g));

  TruncationExtension ext;
  ext.level = level;
  ext.cube = working_cube;
  ext.s = s;
  ext.t_end = t_end;
  ext.u_k.domain = traj.domain;
  ext.u_k.model = traj.model;
  ext.u_k.p = traj.p;
  ext.u_k.eps = traj.eps;
  ext.u_k.timegrid = traj.timegrid;

  const std::size_t total = grid.cell_count();
  for (std::size_t k : snaps) {
    ext.u_k.times.push_back(traj.times[k]);
    std::vector<float> f(total, 0.0f);
    for (std::size_t i = 0; i < total; ++i) {
      if (!traj.domain.inside[i]) continue;  // zero extension outside E
      const double u = traj.fields[k][i];
      const double t = (mode == TruncationMode::upper) ? u - level : level - u;
      f[i] = static_cast<float>(std::max(t, 0.0));
    }
    ext.u_k.fields.push_back(std::move(f));
  }

  double mu = 0.0;
  const auto wb = grid.cells_in_cube(working_cube);
  for (const auto& f : ext.u_k.fields)
    for (m[2] = wb.lo[2]; m[2] < wb.hi[2]; ++m[2])
      for (m[1] = wb.lo[1]; m[1] < wb.hi[1]; ++m[1])
        for (m[0] = wb.lo[0]; m[0] < wb.hi[0]; ++m[0])
          mu = std::max(mu, static_cast<double>(f[grid.ravel(m)]));
  ext.mu = mu;

  ext.v = ext.u_k;
  for (auto& f : ext.v.fields)
    for (auto& v : f) v = static_cast<float>(mu - v);
  return ext;
}

void save_trajectory(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const char magic[8] = {'C', 'P', 'L', 'T', 'R', 'J', '0', '1'};
  out.write(magic, 8);
  const std::int32_t dim = traj.domain.grid.dim();
  const std::int32_t n = traj.domain.grid.n();
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  const auto& box = traj.domain.grid.box();
  out.write(reinterpret_cast<const char*>(box.center.data()), 24);
  out.write(reinterpret_cast<const char*>(&box.half_edge), 8);
  out.write(reinterpret_cast<const char*>(&traj.p), 8);
  out.write(reinterpret_cast<const char*>(&traj.eps), 8);
  const std::int64_t nt = static_cast<std::int64_t>(traj.times.size());
  out.write(reinterpret_cast<const char*>(&nt), 8);
  out.write(reinterpret_cast<const char*>(traj.times.data()), 8 * nt);
  out.write(reinterpret_cast<const char*>(traj.domain.inside.data()),
            static_cast<std::streamsize>(traj.domain.inside.size()));
  for (const auto& f : traj.fields)
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(4 * f.size()));
}

Trajectory load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "CPLTRJ01", 8) != 0)
    throw std::runtime_error("not a trajectory checkpoint: " + path);
  std::int32_t dim = 0, n = 0;
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  Cube box;
  in.read(reinterpret_cast<char*>(box.center.data()), 24);
  in.read(reinterpret_cast<char*>(&box.half_edge), 8);
  Trajectory traj;
  in.read(reinterpret_cast<char*>(&traj.p), 8);
  in.read(reinterpret_cast<char*>(&traj.eps), 8);
  std::int64_t nt = 0;
  in.read(reinterpret_cast<char*>(&nt), 8);
  traj.times.resize(nt);
  in.read(reinterpret_cast<char*>(traj.times.data()), 8 * nt);
  traj.domain.grid = Grid(dim, n, box);
  traj.domain.kind = "checkpoint";
  traj.domain.datum = BoundaryDatum::zero();
  traj.domain.inside.resize(traj.domain.grid.cell_count());
  in.read(reinterpret_cast<char*>(traj.domain.inside.data()),
          static_cast<std::streamsize>(traj.domain.inside.size()));
  traj.fields.assign(nt, {});
  for (auto& f : traj.fields) {
    f.resize(traj.domain.grid.cell_count());
    in.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(4 * f.size()));
  }
  if (!in) throw std::runtime_error("truncated trajectory checkpoint: " + path);
  return traj;
}

void export_slice_csv(const Trajectory& traj, std::size_t snap,
                      const std::string& path) {
  if (snap >= traj.snapshot_count())
    throw ConfigError("export_slice_csv: snapshot index out of range");
  const auto& grid = traj.domain.grid;
  CsvWriter csv(path, {"i0", "i1", "i2", "x0", "x1", "x2", "inside", "u"});
  for (std::size_t i = 0; i < grid.cell_count(); ++i) {
    const auto m = grid.unravel(i);
    const Point x = grid.center(i);
    csv.row({std::to_string(m[0]), std::to_string(m[1]), std::to_string(m[2]),
             fmt_double(x[0]), fmt_double(x[1]), fmt_double(x[2]),
             traj.domain.inside[i] ? "1" : "0", fmt_double(traj.fields[snap][i])});
  }
}

double inside_mass(const Trajectory& traj, std::size_t snap) {
  const double cell = std::pow(traj.domain.grid.spacing(), traj.domain.grid.dim());
  double acc = 0.0;
  for (std::size_t i = 0; i < traj.domain.grid.cell_count(); ++i)
    if (traj.domain.inside[i]) acc += traj.fields[snap][i];
  return acc * cell;
}

}  // namespace caplab
