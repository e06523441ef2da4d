#include "caplab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace caplab {

namespace {

double dot3(const Point& a, const Point& b, int dim) {
  double s = 0;
  for (int d = 0; d < dim; ++d) s += a[d] * b[d];
  return s;
}

double norm3(const Point& a, int dim) { return std::sqrt(dot3(a, a, dim)); }

Point normalized(const Point& a, int dim) {
  const double n = norm3(a, dim);
  if (n <= 0) throw ConfigError("axis must be a non-zero vector");
  Point out{{0, 0, 0}};
  for (int d = 0; d < dim; ++d) out[d] = a[d] / n;
  return out;
}

Point sub(const Point& a, const Point& b, int dim) {
  Point out{{0, 0, 0}};
  for (int d = 0; d < dim; ++d) out[d] = a[d] - b[d];
  return out;
}

/// Orthonormal transversal frame for `axis` (dim 2 or 3).
void transversal_frame(const Point& axis, int dim, Point& t1, Point& t2) {
  if (dim == 2) {
    t1 = {{-axis[1], axis[0], 0.0}};
    t2 = {{0.0, 0.0, 0.0}};
    return;
  }
  // pick the coordinate axis least aligned with `axis`
  int k = 0;
  for (int d = 1; d < 3; ++d)
    if (std::abs(axis[d]) < std::abs(axis[k])) k = d;
  Point e{{0, 0, 0}};
  e[k] = 1.0;
  // t1 = normalize(e - (e.axis) axis)
  const double proj = dot3(e, axis, 3);
  for (int d = 0; d < 3; ++d) t1[d] = e[d] - proj * axis[d];
  t1 = normalized(t1, 3);
  t2 = {{axis[1] * t1[2] - axis[2] * t1[1], axis[2] * t1[0] - axis[0] * t1[2],
         axis[0] * t1[1] - axis[1] * t1[0]}};
}

}  // namespace

BoundaryDatum BoundaryDatum::zero() {
  BoundaryDatum g;
  g.evaluator = [](const Point&, double) { return 0.0; };
  g.time_dependent = false;
  g.holder_exponent = 1.0;
  g.holder_constant = 0.0;
  g.modulus_bound = [](double) { return 0.0; };
  return g;
}

BoundaryDatum BoundaryDatum::constant(double value) {
  BoundaryDatum g;
  g.evaluator = [value](const Point&, double) { return value; };
  g.time_dependent = false;
  g.holder_exponent = 1.0;
  g.holder_constant = 0.0;
  g.modulus_bound = [](double) { return 0.0; };
  return g;
}

BoundaryDatum BoundaryDatum::radial_ramp(const Point& anchor, double r0,
                                         double r1, double amplitude) {
  if (!(r0 >= 0.0) || !(r1 > r0)) throw ConfigError("radial-ramp needs 0 <= r0 < r1");
  BoundaryDatum g;
  g.evaluator = [anchor, r0, r1, amplitude](const Point& x, double) {
    double rr = 0;
    for (int d = 0; d < 3; ++d) {
      const double dd = x[d] - anchor[d];
      rr += dd * dd;
    }
    const double r = std::sqrt(rr);
    if (r <= r0) return 0.0;
    if (r >= r1) return amplitude;
    const double s = (r - r0) / (r1 - r0);
    return amplitude * s * s * (3.0 - 2.0 * s);  // smoothstep
  };
  g.time_dependent = false;
  g.holder_exponent = 1.0;  // Lipschitz
  const double lip = std::abs(amplitude) * 1.5 / (r1 - r0);
  g.holder_constant = lip;
  g.modulus_bound = [lip, amplitude](double rho) {
    return std::min(std::abs(amplitude), lip * rho);
  };
  return g;
}

BoundaryDatum parse_datum(const Config& cfg, const std::string& prefix) {
  const std::string kind = cfg.get_string(prefix + "kind", "zero");
  if (kind == "zero") return BoundaryDatum::zero();
  if (kind == "constant") return BoundaryDatum::constant(cfg.get_double(prefix + "value"));
  if (kind == "radial-ramp") {
    Point anchor{{0, 0, 0}};
    const auto a = cfg.get_doubles(prefix + "anchor", {0, 0, 0});
    for (std::size_t d = 0; d < a.size() && d < 3; ++d) anchor[d] = a[d];
    return BoundaryDatum::radial_ramp(anchor, cfg.get_double(prefix + "r0"),
                                      cfg.get_double(prefix + "r1"),
                                      cfg.get_double(prefix + "amplitude", 1.0));
  }
  throw ConfigError("unknown datum kind `" + kind +
                    "` (expected zero|constant|radial-ramp)");
}

std::size_t DomainMask::inside_count() const {
  std::size_t c = 0;
  for (auto v : inside) c += v != 0;
  return c;
}

std::vector<std::size_t> DomainMask::boundary_cells() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < inside.size(); ++i)
    if (inside[i] && is_boundary_cell(i)) out.push_back(i);
  return out;
}

bool DomainMask::is_boundary_cell(std::size_t cell) const {
  if (!inside[cell]) return false;
  const auto m = grid.unravel(cell);
  for (int d = 0; d < grid.dim(); ++d) {
    for (int s = -1; s <= 1; s += 2) {
      auto nb = m;
      nb[d] += s;
      if (!grid.in_bounds(nb)) continue;
      if (!inside[grid.ravel(nb)]) return true;
    }
  }
  return false;
}

bool DomainMask::near_interface(std::size_t cell) const {
  const auto m = grid.unravel(cell);
  bool has_in = false, has_out = false;
  std::array<int, 3> off{{0, 0, 0}};
  const int dim = grid.dim();
  for (off[0] = -1; off[0] <= 1; ++off[0])
    for (off[1] = (dim > 1 ? -1 : 0); off[1] <= (dim > 1 ? 1 : 0); ++off[1])
      for (off[2] = (dim > 2 ? -1 : 0); off[2] <= (dim > 2 ? 1 : 0); ++off[2]) {
        std::array<int, 3> nb{{m[0] + off[0], m[1] + off[1], m[2] + off[2]}};
        if (!grid.in_bounds(nb)) continue;
        (inside[grid.ravel(nb)] ? has_in : has_out) = true;
      }
  return has_in && has_out;
}

DomainSpec parse_domain(const Config& cfg, const std::string& prefix) {
  DomainSpec spec;
  spec.kind = cfg.get_string(prefix + "kind");
  spec.dim = cfg.get_int(prefix + "dim", 2);
  spec.grid_n = cfg.get_int(prefix + "grid_n", 64);
  const auto c = cfg.get_doubles(prefix + "center", {0, 0, 0});
  for (std::size_t d = 0; d < c.size() && d < 3; ++d) spec.box.center[d] = c[d];
  spec.box.half_edge = cfg.get_double(prefix + "half_edge", 1.0);
  const auto pt = cfg.get_doubles(prefix + "point", {0, 0, 0});
  for (std::size_t d = 0; d < pt.size() && d < 3; ++d) spec.point[d] = pt[d];
  const auto ax = cfg.get_doubles(prefix + "axis", {1, 0, 0});
  for (std::size_t d = 0; d < ax.size() && d < 3; ++d) spec.axis[d] = ax[d];
  spec.beta = cfg.get_double(prefix + "beta", spec.beta);
  spec.M = cfg.get_double(prefix + "M", spec.M);
  spec.r_o = cfg.get_double(prefix + "r_o", spec.r_o);
  spec.cusp_coeff = cfg.get_double(prefix + "cusp_coeff", spec.cusp_coeff);
  spec.cusp_power = cfg.get_double(prefix + "cusp_power", spec.cusp_power);
  spec.cusp_len = cfg.get_double(prefix + "cusp_len", spec.cusp_len);
  const int nballs = cfg.get_int(prefix + "balls", 0);
  for (int b = 0; b < nballs; ++b) {
    const auto v = cfg.get_doubles(prefix + "ball" + std::to_string(b));
    if (v.size() != static_cast<std::size_t>(spec.dim) + 1)
      throw ConfigError("field `" + prefix + "ball" + std::to_string(b) +
                        "`: expected center (dim values) + radius");
    DomainSpec::Ball ball;
    ball.center = {{0, 0, 0}};
    for (int d = 0; d < spec.dim; ++d) ball.center[d] = v[d];
    ball.radius = v[spec.dim];
    spec.balls.push_back(ball);
  }
  const int ncubes = cfg.get_int(prefix + "cubes", 0);
  for (int b = 0; b < ncubes; ++b) {
    const auto v = cfg.get_doubles(prefix + "cube" + std::to_string(b));
    if (v.size() != static_cast<std::size_t>(spec.dim) + 1)
      throw ConfigError("field `" + prefix + "cube" + std::to_string(b) +
                        "`: expected center (dim values) + half_edge");
    Cube cube;
    for (int d = 0; d < spec.dim; ++d) cube.center[d] = v[d];
    cube.half_edge = v[spec.dim];
    spec.cubes.push_back(cube);
  }
  return spec;
}

DomainMask build_domain(const Config& cfg, const std::string& prefix) {
  return build_domain(parse_domain(cfg, prefix), parse_datum(cfg, "datum."));
}

DomainMask build_domain(const DomainSpec& spec, BoundaryDatum datum) {
  if (spec.grid_n < 8) throw ConfigError("grid_n must be >= 8");
  if (spec.dim < 1 || spec.dim > 3) throw ConfigError("dim must be 1, 2 or 3");
  const int dim = spec.dim;

  // Complement membership predicate (continuum descriptor).
  std::function<bool(const Point&)> in_complement;
  bool promises_complement = true;

  if (spec.kind == "full-cube") {
    in_complement = [](const Point&) { return false; };
    promises_complement = false;
  } else if (spec.kind == "half-space") {
    const Point axis = normalized(spec.axis, dim);
    const Point p = spec.point;
    in_complement = [axis, p, dim](const Point& x) {
      return dot3(sub(x, p, dim), axis, dim) >= 0.0;
    };
  } else if (spec.kind == "spike") {
    if (!(spec.beta > 0.0 && spec.beta < 3.14159265358979323846))
      throw ConfigError("spike opening angle beta must lie in (0, pi)");
    if (dim < 2) throw ConfigError("spike requires dim >= 2");
    const Point axis = normalized(spec.axis, dim);
    const Point p = spec.point;
    const double cos_half = std::cos(spec.beta / 2.0);
    in_complement = [axis, p, dim, cos_half](const Point& x) {
      const Point r = sub(x, p, dim);
      const double n = norm3(r, dim);
      if (n == 0.0) return true;  // apex belongs to the complement closure
      return dot3(r, axis, dim) / n <= cos_half;
    };
  } else if (spec.kind == "corkscrew") {
    if (!(spec.M >= 2.0)) throw ConfigError("corkscrew constant M must be >= 2");
    if (!(spec.r_o > 0.0)) throw ConfigError("corkscrew r_o must be positive");
    if (dim < 2) throw ConfigError("corkscrew requires dim >= 2");
    // Ball chain at dyadic scales r_k: centers at r_k/2 along the axis,
    // radius 2.5*r_k/M_eff. The chain verifies the outer corkscrew condition
    // with constant M_eff = max(M, 6); smaller requested M keeps the same set.
    const double M_eff = std::max(spec.M, 6.0);
    const Point axis = normalized(spec.axis, dim);
    const Point p = spec.point;
    const double r_o = spec.r_o;
    in_complement = [axis, p, dim, M_eff, r_o](const Point& x) {
      const Point rel = sub(x, p, dim);
      const double n = norm3(rel, dim);
      if (n == 0.0 || n > r_o) return false;
      // ball k reaches at most (1/2 + 2.5/M_eff) r_k < r_k from the anchor
      for (double rk = r_o; rk > 0.9 * n; rk *= 0.5) {
        double dd = 0;
        for (int d = 0; d < dim; ++d) {
          const double c = 0.5 * rk * axis[d];
          dd += (rel[d] - c) * (rel[d] - c);
        }
        const double s = 2.5 * rk / M_eff;
        if (dd < s * s) return true;
      }
      return false;
    };
  } else if (spec.kind == "cusp") {
    if (!(spec.cusp_power >= 1.0)) throw ConfigError("cusp_power must be >= 1");
    if (!(spec.cusp_coeff > 0.0)) throw ConfigError("cusp_coeff must be positive");
    if (dim < 2) throw ConfigError("cusp requires dim >= 2");
    const Point axis = normalized(spec.axis, dim);
    Point t1, t2;
    transversal_frame(axis, dim, t1, t2);
    const Point p = spec.point;
    const double coeff = spec.cusp_coeff, power = spec.cusp_power, len = spec.cusp_len;
    in_complement = [axis, t1, p, dim, coeff, power, len](const Point& x) {
      const Point rel = sub(x, p, dim);
      const double s = dot3(rel, axis, dim);
      if (s < 0.0 || s > len) return false;
      const double w = std::abs(dot3(rel, t1, dim));
      return w <= coeff * std::pow(s, power);
    };
  } else if (spec.kind == "union") {
    if (spec.balls.empty() && spec.cubes.empty())
      throw ConfigError("union descriptor needs at least one ball or cube");
    const auto balls = spec.balls;
    const auto cubes = spec.cubes;
    in_complement = [balls, cubes, dim](const Point& x) {
      for (const auto& b : balls) {
        double dd = 0;
        for (int d = 0; d < dim; ++d)
          dd += (x[d] - b.center[d]) * (x[d] - b.center[d]);
        if (dd <= b.radius * b.radius) return true;
      }
      for (const auto& c : cubes)
        if (c.contains(x, dim)) return true;
      return false;
    };
  } else {
    throw ConfigError("unknown domain kind `" + spec.kind +
                      "` (expected full-cube|half-space|spike|corkscrew|cusp|union)");
  }

  DomainMask mask;
  mask.grid = Grid(dim, spec.grid_n, spec.box);
  mask.kind = spec.kind;
  mask.datum = std::move(datum);
  mask.inside.assign(mask.grid.cell_count(), 0);
  for (std::size_t i = 0; i < mask.inside.size(); ++i)
    mask.inside[i] = in_complement(mask.grid.center(i)) ? 0 : 1;

  const std::size_t nin = mask.inside_count();
  if (nin == 0)
    throw ConfigError("degenerate descriptor `" + spec.kind +
                      "`: no cell center lies in E at grid_n=" +
                      std::to_string(spec.grid_n));
  if (promises_complement && nin == mask.grid.cell_count())
    throw ConfigError("degenerate descriptor `" + spec.kind +
                      "`: complement misses every cell center at grid_n=" +
                      std::to_string(spec.grid_n) +
                      " (feature smaller than one cell?)");
  return mask;
}

std::vector<double> distance_to_marked(const Grid& grid,
                                       const std::vector<std::uint8_t>& mark) {
  const double INF = std::numeric_limits<double>::infinity();
  const int n = grid.n();
  const int dim = grid.dim();
  std::vector<double> f(grid.cell_count());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = mark[i] ? 0.0 : INF;

  // 1-D squared-distance transform (lower envelope of parabolas).
  std::vector<double> line(n), out(n), z(n + 1);
  std::vector<int> v(n);
  auto transform_line = [&](auto&& get, auto&& set) {
    for (int q = 0; q < n; ++q) line[q] = get(q);
    int k = 0;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    for (int q = 1; q < n; ++q) {
      if (line[q] == INF) continue;
      if (line[v[0]] == INF && k == 0) {
        v[0] = q;
        continue;
      }
      double s;
      while (true) {
        const int p = v[k];
        s = ((line[q] + q * q) - (line[p] + p * p)) / (2.0 * (q - p));
        if (s > z[k]) break;
        --k;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = INF;
    }
    if (line[v[0]] == INF) {
      for (int q = 0; q < n; ++q) set(q, INF);
      return;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
      while (z[k + 1] < q) ++k;
      const int p = v[k];
      set(q, (q - p) * (double)(q - p) + line[p]);
    }
  };

  for (int axis = 0; axis < dim; ++axis) {
    const std::size_t stride = grid.stride(axis);
    const std::size_t lines = grid.cell_count() / n;
    for (std::size_t li = 0; li < lines; ++li) {
      // base index of this line: distribute li over the other axes
      std::size_t rem = li, base = 0;
      for (int d = 0; d < dim; ++d) {
        if (d == axis) continue;
        const std::size_t coord = rem % n;
        rem /= n;
        base += coord * grid.stride(d);
      }
      transform_line([&](int q) { return f[base + q * stride]; },
                     [&](int q, double val) { f[base + q * stride] = val; });
    }
  }

  const double h = grid.spacing();
  for (auto& val : f) val = std::isfinite(val) ? std::sqrt(val) * h : INF;
  return f;
}

bool CorkscrewReport::all_passed() const {
  for (const auto& r : rows)
    if (!r.passed) return false;
  return !rows.empty();
}

CorkscrewReport corkscrew_check(const DomainMask& domain, const Point& x_o,
                                double M, double r_o,
                                const std::vector<double>& scales, bool strict) {
  if (!(M >= 2.0)) throw ConfigError("corkscrew check requires M >= 2");
  if (!(r_o > 0.0)) throw ConfigError("corkscrew check requires r_o > 0");
  const std::size_t c0 = domain.grid.nearest_cell(x_o);
  if (strict && !domain.near_interface(c0))
    throw ConfigError("corkscrew check: x_o does not lie on the discrete boundary");

  const auto dist_to_E = distance_to_marked(domain.grid, domain.inside);

  CorkscrewReport report;
  report.x_o = x_o;
  report.M = M;
  const int dim = domain.grid.dim();
  for (double r : scales) {
    if (!(r > 0.0) || r >= r_o)
      throw ConfigError("corkscrew scales must lie in (0, r_o)");
    CorkscrewRow row;
    row.r = r;
    const Cube search{{x_o}, r};
    const auto ib = domain.grid.cells_in_cube(search);
    double best = r / M;
    std::array<int, 3> m;
    for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
      for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
        for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0]) {
          const std::size_t idx = domain.grid.ravel(m);
          if (domain.inside[idx]) continue;
          const Point a = domain.grid.center(idx);
          const double d = norm3(sub(a, x_o, dim), dim);
          if (d <= r / M || d >= r) continue;
          ++row.annulus_cells;
          if (dist_to_E[idx] > best) {
            best = dist_to_E[idx];
            row.witness = a;
            row.witness_clearance = dist_to_E[idx];
          }
        }
    row.passed = row.witness.has_value();
    report.rows.push_back(row);
  }
  return report;
}

Cylinder intrinsic_cylinder(const Point& x_o, double t_o, double rho,
                            double omega_o, double c, double p) {
  if (!(p > 1.0 && p < 2.0)) throw ConfigError("intrinsic cylinder requires 1 < p < 2");
  if (!(rho > 0.0)) throw ConfigError("intrinsic cylinder requires rho > 0");
  if (!(omega_o > 0.0)) throw ConfigError("intrinsic cylinder requires omega_o > 0");
  if (!(c > 0.0 && c < 1.0)) throw ConfigError("intrinsic cylinder requires c in (0,1)");
  Cylinder cyl;
  cyl.cube = Cube{x_o, rho};
  cyl.t_end = t_o;
  cyl.duration = 0.5 * c * std::pow(omega_o, 2.0 - p) * std::pow(rho, p);
  return cyl;
}

void write_pgm(const DomainMask& mask, const std::string& path, int slice_axis,
               int slice_index) {
  const int n = mask.grid.n();
  const int dim = mask.grid.dim();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  const int w = n;
  const int h = (dim >= 2) ? n : 1;
  out << "P5\n" << w << " " << h << "\n255\n";
  std::array<int, 3> m{{0, 0, 0}};
  if (dim == 3) {
    if (slice_axis < 0 || slice_axis > 2) slice_axis = 2;
    m[slice_axis] = (slice_index < 0 || slice_index >= n) ? n / 2 : slice_index;
  }
  const int ax = (dim == 3 && slice_axis == 0) ? 1 : 0;
  const int ay = (dim == 3) ? ((slice_axis == 2) ? 1 : 2) : 1;
  for (int j = h - 1; j >= 0; --j) {  // top row = highest coordinate
    for (int i = 0; i < w; ++i) {
      m[ax] = i;
      if (dim >= 2) m[ay] = j;
      const unsigned char v = mask.inside[mask.grid.ravel(m)] ? 255 : 0;
      out.put(static_cast<char>(v));
    }
  }
}

}  // namespace caplab
