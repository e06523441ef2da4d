#include "caplab/capacity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>

namespace caplab {

namespace {

constexpr std::uint8_t kFree = 0, kFix0 = 1, kFix1 = 2;

/// Cell roles from obstacle/domain masks; obstacle wins over domain.
std::vector<std::uint8_t> classify(const Condenser& c) {
  std::vector<std::uint8_t> role(c.grid.cell_count(), kFix0);
  for (std::size_t i = 0; i < role.size(); ++i) {
    if (c.obstacle[i])
      role[i] = kFix1;
    else if (c.domain[i])
      role[i] = kFree;
  }
  return role;
}

struct EnergyWorkspace {
  const Grid* grid;
  const std::vector<std::uint8_t>* role;
  double p, eps;
  double h, cell;  // spacing, h^N quadrature weight
  double eps2, eps_p;
  int dim;
  std::array<std::size_t, 3> stride;
  int n;

  explicit EnergyWorkspace(const Condenser& c, const std::vector<std::uint8_t>& r)
      : grid(&c.grid), role(&r), p(c.p), eps(c.eps) {
    dim = c.grid.dim();
    n = c.grid.n();
    h = c.grid.spacing();
    cell = std::pow(h, dim);
    eps2 = eps * eps;
    eps_p = std::pow(eps2, 0.5 * p);
    for (int d = 0; d < dim; ++d) stride[d] = c.grid.stride(d);
  }

  /// Quadrature runs over cells with a forward neighbor on every axis; the
  /// trimmed layers lie outside the open set anyway.
  int upper(int axis) const { return (axis < dim) ? n - 1 : 1; }

  double energy(const std::vector<double>& u, bool subtract_eps) const {
    double acc = 0.0;
    const double inv_h2 = 1.0 / (h * h);
    const std::size_t s1 = (dim > 1) ? stride[1] : 0;
    const std::size_t s2 = (dim > 2) ? stride[2] : 0;
    for (int i2 = 0; i2 < upper(2); ++i2)
      for (int i1 = 0; i1 < upper(1); ++i1) {
        std::size_t i = i2 * s2 + i1 * s1;
        for (int i0 = 0; i0 < n - 1; ++i0, ++i) {
          double g2 = 0.0;
          {
            const double d0 = u[i + 1] - u[i];
            g2 = d0 * d0;
          }
          if (dim > 1) {
            const double d1 = u[i + s1] - u[i];
            g2 += d1 * d1;
          }
          if (dim > 2) {
            const double d2 = u[i + s2] - u[i];
            g2 += d2 * d2;
          }
          if (g2 == 0.0) {
            if (!subtract_eps) acc += eps_p;
            continue;
          }
          double w = std::pow(g2 * inv_h2 + eps2, 0.5 * p);
          if (subtract_eps) w -= eps_p;
          acc += w;
        }
      }
    return acc * cell;
  }

  /// grad <- dE/du (zero rows at fixed cells); returns E(u) (unsubtracted).
  double gradient(const std::vector<double>& u, std::vector<double>& grad) const {
    std::fill(grad.begin(), grad.end(), 0.0);
    double acc = 0.0;
    const double scale = cell * p / (h * h);
    const double inv_h2 = 1.0 / (h * h);
    const std::size_t s1 = (dim > 1) ? stride[1] : 0;
    const std::size_t s2 = (dim > 2) ? stride[2] : 0;
    for (int i2 = 0; i2 < upper(2); ++i2)
      for (int i1 = 0; i1 < upper(1); ++i1) {
        std::size_t i = i2 * s2 + i1 * s1;
        for (int i0 = 0; i0 < n - 1; ++i0, ++i) {
          double diff[3] = {0.0, 0.0, 0.0};
          diff[0] = u[i + 1] - u[i];
          double g2 = diff[0] * diff[0];
          if (dim > 1) {
            diff[1] = u[i + s1] - u[i];
            g2 += diff[1] * diff[1];
          }
          if (dim > 2) {
            diff[2] = u[i + s2] - u[i];
            g2 += diff[2] * diff[2];
          }
          if (g2 == 0.0) {
            acc += eps_p;
            continue;
          }
          const double base = g2 * inv_h2 + eps2;
          acc += std::pow(base, 0.5 * p);
          const double w = std::pow(base, 0.5 * p - 1.0) * scale;
          const double t0 = w * diff[0];
          grad[i + 1] += t0;
          grad[i] -= t0;
          if (dim > 1) {
            const double t1 = w * diff[1];
            grad[i + s1] += t1;
            grad[i] -= t1;
          }
          if (dim > 2) {
            const double t2 = w * diff[2];
            grad[i + s2] += t2;
            grad[i] -= t2;
          }
        }
      }
    const std::size_t total = grid->cell_count();
    for (std::size_t i = 0; i < total; ++i)
      if ((*role)[i] != kFree) grad[i] = 0.0;
    return acc * cell;
  }
};

/// Warm start: solve the 2-Laplace problem with the same constraints by
/// Jacobi-preconditioned CG. The linear potential is an excellent initial
/// iterate for the p < 2 minimization.
void linear_init(const EnergyWorkspace& ws, std::vector<double>& u) {
  const Grid& grid = *ws.grid;
  const auto& role = *ws.role;
  const std::size_t total = grid.cell_count();
  const int dim = ws.dim;

  std::vector<std::size_t> free;
  free.reserve(total / 2);
  for (std::size_t i = 0; i < total; ++i)
    if (role[i] == kFree) free.push_back(i);
  if (free.empty()) return;

  // 2N+1-point Laplacian with Dirichlet cells folded into the RHS.
  std::vector<double> r(total, 0.0), z(total, 0.0), pdir(total, 0.0), Ap(total, 0.0);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t idx : free) {
      const auto m = grid.unravel(idx);
      double acc = 0.0;
      double diag = 0.0;
      for (int d = 0; d < dim; ++d) {
        for (int s = -1; s <= 1; s += 2) {
          auto nb = m;
          nb[d] += s;
          if (!grid.in_bounds(nb)) continue;
          diag += 1.0;
          const std::size_t j = grid.ravel(nb);
          if (role[j] == kFree) acc -= x[j];
        }
      }
      y[idx] = diag * x[idx] + acc;
    }
  };
  // rhs = contributions of fixed neighbors
  std::vector<double> b(total, 0.0);
  for (std::size_t idx : free) {
    const auto m = grid.unravel(idx);
    double acc = 0.0;
    for (int d = 0; d < dim; ++d)
      for (int s = -1; s <= 1; s += 2) {
        auto nb = m;
        nb[d] += s;
        if (!grid.in_bounds(nb)) continue;
        const std::size_t j = grid.ravel(nb);
        if (role[j] != kFree) acc += u[j];
      }
    b[idx] = acc;
  }

  apply(u, Ap);
  double rr = 0.0;
  for (std::size_t idx : free) {
    r[idx] = b[idx] - Ap[idx];
    rr += r[idx] * r[idx];
  }
  const double rr0 = rr;
  if (rr0 == 0.0) return;
  pdir = r;
  const int maxit = 400;
  for (int it = 0; it < maxit && rr > 1e-12 * rr0; ++it) {
    apply(pdir, Ap);
    double pAp = 0.0;
    for (std::size_t idx : free) pAp += pdir[idx] * Ap[idx];
    if (pAp <= 0.0) break;
    const double alpha = rr / pAp;
    double rr_new = 0.0;
    for (std::size_t idx : free) {
      u[idx] += alpha * pdir[idx];
      r[idx] -= alpha * Ap[idx];
      rr_new += r[idx] * r[idx];
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t idx : free) pdir[idx] = r[idx] + beta * pdir[idx];
  }
  for (std::size_t idx : free) u[idx] = std::clamp(u[idx], 0.0, 1.0);
}

}  // namespace

std::vector<std::uint8_t> Condenser::interior_domain(const Grid& grid) {
  std::vector<std::uint8_t> dom(grid.cell_count(), 0);
  const int n = grid.n();
  for (std::size_t i = 0; i < dom.size(); ++i) {
    const auto m = grid.unravel(i);
    bool interior = true;
    for (int d = 0; d < grid.dim(); ++d)
      if (m[d] == 0 || m[d] == n - 1) interior = false;
    dom[i] = interior ? 1 : 0;
  }
  return dom;
}

void Condenser::validate() const {
  if (!(p > 1.0)) throw ConfigError("condenser requires p > 1");
  if (obstacle.size() != grid.cell_count() || domain.size() != grid.cell_count())
    throw ConfigError("condenser mask size mismatch");
  // K must stay strictly inside the open set: no obstacle cell may touch a
  // cell outside it.
  for (std::size_t i = 0; i < obstacle.size(); ++i) {
    if (!obstacle[i]) continue;
    if (!domain[i])
      throw ConfigError("condenser obstacle touches the boundary of the open set");
    const auto m = grid.unravel(i);
    for (int d = 0; d < grid.dim(); ++d)
      for (int s = -1; s <= 1; s += 2) {
        auto nb = m;
        nb[d] += s;
        if (!grid.in_bounds(nb))
          throw ConfigError("condenser obstacle touches the outer cube face");
        if (!domain[grid.ravel(nb)] && !obstacle[grid.ravel(nb)])
          throw ConfigError("condenser obstacle touches the boundary of the open set");
      }
  }
}

CapacityResult p_capacity(const Condenser& condenser, const CapacitySettings& cfg) {
  condenser.validate();
  const Grid& grid = condenser.grid;
  const std::size_t total = grid.cell_count();

  CapacityResult result;
  result.minimizer.assign(total, 0.0);

  bool any_obstacle = false;
  for (auto v : condenser.obstacle)
    if (v) {
      any_obstacle = true;
      break;
    }
  if (!any_obstacle) return result;  // u == 0 admissible with zero energy

  const auto role = classify(condenser);
  EnergyWorkspace ws(condenser, role);

  std::vector<double>& x = result.minimizer;
  for (std::size_t i = 0; i < total; ++i) x[i] = (role[i] == kFix1) ? 1.0 : 0.0;
  linear_init(ws, x);

  std::vector<double> y = x, grad(total, 0.0), cand(total, 0.0), x_prev = x;

  double L = ws.p * std::pow(ws.eps2, 0.5 * ws.p - 1.0) * 4.0 * ws.dim *
             std::pow(ws.h, ws.dim - 2);
  if (!(L > 0) || !std::isfinite(L)) L = 1.0;

  double Ex = ws.energy(x, false);
  double t = 1.0;
  int settled = 0;
  double last_rel = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const double Ey = ws.gradient(y, grad);
    // backtracking proximal step from y
    double Ec = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      const double step = 1.0 / L;
      double q_lin = 0.0, q_quad = 0.0;
      for (std::size_t i = 0; i < total; ++i) {
        if (role[i] != kFree) {
          cand[i] = x[i];
          continue;
        }
        double v = y[i] - step * grad[i];
        v = std::clamp(v, 0.0, 1.0);
        cand[i] = v;
        const double dvi = v - y[i];
        q_lin += grad[i] * dvi;
        q_quad += dvi * dvi;
      }
      Ec = ws.energy(cand, false);
      if (Ec <= Ey + q_lin + 0.5 * L * q_quad + 1e-14 * std::abs(Ey)) break;
      L *= 2.0;
    }

    if (Ec > Ex) {
      // momentum overshoot: restart from the best iterate
      t = 1.0;
      y = x;
      continue;
    }

    x_prev.swap(x);
    x = cand;
    const double rel = (Ex - Ec) / std::max(std::abs(Ec), 1e-300);
    last_rel = rel;
    Ex = Ec;

    if (rel < cfg.tol) {
      if (++settled >= cfg.settle_sweeps) {
        ++it;
        break;
      }
    } else {
      settled = 0;
    }

    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_new;
    for (std::size_t i = 0; i < total; ++i) y[i] = x[i] + beta * (x[i] - x_prev[i]);
    t = t_new;
    L *= 0.97;
  }

  if (settled < cfg.settle_sweeps)
    throw NumericsError("p_capacity did not converge in " +
                        std::to_string(cfg.max_iters) +
                        " iterations (last relative decrease " +
                        std::to_string(last_rel) + ")");

  result.iterations = it;
  result.energy_residual = std::max(last_rel, 0.0);
  result.value = ws.energy(x, true);
  return result;
}

namespace {

Condenser make_delta_condenser(const DomainMask& domain, const Point& x_o,
                               double rho, double p, const CapacitySettings& cfg,
                               bool subtract_E) {
  Condenser c;
  const Cube outer{x_o, cfg.annulus_ratio * rho};
  c.grid = Grid(domain.grid.dim(), cfg.grid_n, outer);
  c.p = p;
  c.eps = cfg.eps_factor * c.grid.spacing();
  c.domain = Condenser::interior_domain(c.grid);
  c.obstacle.assign(c.grid.cell_count(), 0);
  const Cube inner{x_o, rho};
  const auto ib = c.grid.cells_in_cube(inner);
  std::array<int, 3> m;
  for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
    for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
      for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
        const std::size_t idx = c.grid.ravel(m);
        if (subtract_E) {
          const Point x = c.grid.center(idx);
          if (domain.inside[domain.grid.nearest_cell(x)]) continue;
        }
        c.obstacle[idx] = 1;
      }
  return c;
}

}  // namespace

DeltaBreakdown delta_ratio_detailed(const DomainMask& domain, const Point& x_o,
                                    double rho, double p,
                                    const CapacitySettings& cfg) {
  if (!(rho > 0.0)) throw ConfigError("delta_ratio requires rho > 0");
  const Cube outer{x_o, cfg.annulus_ratio * rho};
  if (!domain.grid.box().encloses(outer, domain.grid.dim(), 1e-12))
    throw ConfigError("delta_ratio: K_{" + std::to_string(cfg.annulus_ratio) +
                      " rho}(x_o) exceeds the bounding cube at rho = " +
                      std::to_string(rho));
  if (2.0 * rho < 4.0 * domain.grid.spacing())
    throw ConfigError("delta_ratio: unresolvable scale rho = " + std::to_string(rho) +
                      " (< 4 mask cells across; refine the domain mask)");

  DeltaBreakdown out;
  out.rho = rho;
  const Condenser num = make_delta_condenser(domain, x_o, rho, p, cfg, true);
  const Condenser den = make_delta_condenser(domain, x_o, rho, p, cfg, false);
  const CapacityResult rn = p_capacity(num, cfg);
  const CapacityResult rd = p_capacity(den, cfg);
  out.numerator = rn.value;
  out.denominator = rd.value;
  out.residual = std::max(rn.energy_residual, rd.energy_residual);
  if (rd.value <= 0.0) throw NumericsError("delta_ratio: zero denominator capacity");
  double q = rn.value / rd.value;
  if (q > 1.0) {
    if (q > 1.0 + cfg.clamp_slack)
      throw NumericsError("delta_ratio: quotient " + std::to_string(q) +
                          " exceeds 1 beyond solver tolerance");
    q = 1.0;
  }
  out.delta = std::max(q, 0.0);
  return out;
}

double delta_ratio(const DomainMask& domain, const Point& x_o, double rho,
                   double p, const CapacitySettings& cfg) {
  return delta_ratio_detailed(domain, x_o, rho, p, cfg).delta;
}

std::size_t CapacityProfile::resolved_count() const {
  std::size_t c = 0;
  for (double d : delta) c += std::isfinite(d) ? 1 : 0;
  return c;
}

CapacityProfile capacity_profile_at(const DomainMask& domain, const Point& x_o,
                                    double p, const std::vector<double>& scales,
                                    const CapacitySettings& cfg) {
  if (scales.size() < 1) throw ConfigError("capacity_profile: no scales");
  for (std::size_t j = 1; j < scales.size(); ++j)
    if (!(scales[j] < scales[j - 1]))
      throw ConfigError("capacity_profile: scales must be strictly decreasing");

  CapacityProfile prof;
  prof.x_o = x_o;
  prof.p = p;
  prof.scales = scales;
  prof.delta.assign(scales.size(), std::numeric_limits<double>::quiet_NaN());
  prof.rows.assign(scales.size(), {});
  prof.gaps.assign(scales.size(), "");
  prof.rho_bar = scales.front();

  const int workers = std::max(1, cfg.workers);
  std::vector<std::future<void>> tasks;
  std::atomic<std::size_t> next{0};
  auto run = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= scales.size()) return;
      try {
        prof.rows[j] = delta_ratio_detailed(domain, x_o, scales[j], p, cfg);
        prof.delta[j] = prof.rows[j].delta;
      } catch (const std::exception& e) {
        prof.gaps[j] = e.what();
      }
    }
  };
  if (workers == 1) {
    run();
  } else {
    for (int w = 0; w < workers; ++w)
      tasks.push_back(std::async(std::launch::async, run));
    for (auto& t : tasks) t.get();
  }

  double gmin = std::numeric_limits<double>::infinity();
  for (double d : prof.delta)
    if (std::isfinite(d)) gmin = std::min(gmin, d);
  prof.gamma_o = std::isfinite(gmin) ? gmin : 0.0;
  return prof;
}

CapacityProfile capacity_profile(const DomainMask& domain, const Point& x_o,
                                 double p, int num_scales,
                                 const CapacitySettings& cfg, double rho_max,
                                 double scale_ratio) {
  if (num_scales < 3) throw ConfigError("capacity_profile requires num_scales >= 3");
  if (!(scale_ratio > 0.0 && scale_ratio < 1.0))
    throw ConfigError("capacity_profile: scale ratio must lie in (0,1)");
  if (rho_max <= 0.0) {
    // largest rho whose annulus fits the bounding cube
    double slack = std::numeric_limits<double>::infinity();
    for (int d = 0; d < domain.grid.dim(); ++d) {
      const double off = std::abs(x_o[d] - domain.grid.box().center[d]);
      slack = std::min(slack, domain.grid.box().half_edge - off);
    }
    rho_max = slack / cfg.annulus_ratio * (1.0 - 1e-9);
  }
  const Cube outer{x_o, cfg.annulus_ratio * rho_max};
  if (!domain.grid.box().encloses(outer, domain.grid.dim(), 1e-12))
    throw ConfigError("capacity_profile: largest scale does not fit the bounding cube");
  std::vector<double> scales(num_scales);
  for (int j = 0; j < num_scales; ++j)
    scales[j] = rho_max * std::pow(scale_ratio, j);
  return capacity_profile_at(domain, x_o, p, scales, cfg);
}

}  // namespace caplab
