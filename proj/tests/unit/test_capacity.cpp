#include <doctest.h>

#include <cmath>

#include "caplab/capacity.hpp"
#include "../oracles/radial_condenser.hpp"

using namespace caplab;

namespace {

Condenser ball_condenser(int N, int n, double p, double r, double R,
                         double eps_factor = 1.0) {
  Condenser c;
  c.grid = Grid(N, n, Cube{{{0, 0, 0}}, 1.0});
  c.p = p;
  c.eps = eps_factor * c.grid.spacing();
  c.obstacle.assign(c.grid.cell_count(), 0);
  c.domain.assign(c.grid.cell_count(), 0);
  const auto interior = Condenser::interior_domain(c.grid);
  for (std::size_t i = 0; i < c.grid.cell_count(); ++i) {
    const Point x = c.grid.center(i);
    double rr = 0;
    for (int d = 0; d < N; ++d) rr += x[d] * x[d];
    rr = std::sqrt(rr);
    if (rr <= r) c.obstacle[i] = 1;
    if (rr < R && interior[i]) c.domain[i] = 1;
  }
  return c;
}

Condenser cube_condenser(int N, int n, double p, double rho, double ratio = 1.5) {
  Condenser c;
  c.grid = Grid(N, n, Cube{{{0, 0, 0}}, ratio * rho});
  c.p = p;
  c.eps = c.grid.spacing();
  c.domain = Condenser::interior_domain(c.grid);
  c.obstacle.assign(c.grid.cell_count(), 0);
  const auto ib = c.grid.cells_in_cube(Cube{{{0, 0, 0}}, rho});
  std::array<int, 3> m;
  for (m[2] = ib.lo[2]; m[2] < ib.hi[2]; ++m[2])
    for (m[1] = ib.lo[1]; m[1] < ib.hi[1]; ++m[1])
      for (m[0] = ib.lo[0]; m[0] < ib.hi[0]; ++m[0])
        c.obstacle[c.grid.ravel(m)] = 1;
  return c;
}

}  // namespace

TEST_CASE("empty obstacle has zero capacity") {
  Condenser c;
  c.grid = Grid(2, 32, Cube{{{0, 0, 0}}, 1.0});
  c.p = 1.4;
  c.eps = c.grid.spacing();
  c.domain = Condenser::interior_domain(c.grid);
  c.obstacle.assign(c.grid.cell_count(), 0);
  const auto res = p_capacity(c, {});
  CHECK(res.value == 0.0);
  CHECK(res.iterations == 0);
}

TEST_CASE("radial oracle: quadrature route agrees with the closed form") {
  for (int N : {2, 3}) {
    for (double p : {1.2, 1.3, 1.4, 1.5}) {
      const double q = oracle::ball_capacity(N, p, 0.5, 0.95);
      const double cf = oracle::ball_capacity_closed_form(N, p, 0.5, 0.95);
      INFO("N = " << N << ", p = " << p);
      CHECK(std::abs(q - cf) / cf < 1e-10);
    }
  }
}

TEST_CASE("ball condenser approaches the radial oracle (smoke resolution)") {
  CapacitySettings cfg;
  const auto cond = ball_condenser(2, 64, 1.3, 0.5, 0.95);
  const auto res = p_capacity(cond, cfg);
  const double expect = oracle::ball_capacity(2, 1.3, 0.5, 0.95);
  CHECK(std::abs(res.value - expect) / expect < 0.05);
  CHECK(res.energy_residual <= cfg.tol);
}

TEST_CASE("cube condenser scaling law at two scales") {
  CapacitySettings cfg;
  const auto c1 = p_capacity(cube_condenser(2, 96, 1.3, 0.4), cfg);
  const auto c2 = p_capacity(cube_condenser(2, 96, 1.3, 0.2), cfg);
  const double ratio = c2.value / c1.value;
  const double expect = std::pow(0.5, 2.0 - 1.3);
  CHECK(std::abs(ratio - expect) / expect < 0.03);
}

TEST_CASE("capacity is monotone in the obstacle") {
  CapacitySettings cfg;
  const auto small = p_capacity(ball_condenser(2, 64, 1.4, 0.3, 0.95), cfg);
  const auto large = p_capacity(ball_condenser(2, 64, 1.4, 0.45, 0.95), cfg);
  CHECK(small.value <= large.value + 1e-6);
}

TEST_CASE("capacity is monotone in the annulus") {
  CapacitySettings cfg;
  const auto wide = p_capacity(ball_condenser(2, 64, 1.4, 0.3, 0.95), cfg);
  const auto tight = p_capacity(ball_condenser(2, 64, 1.4, 0.3, 0.7), cfg);
  CHECK(wide.value <= tight.value + 1e-6);
}

TEST_CASE("minimizer stays in [0,1]") {
  CapacitySettings cfg;
  const auto res = p_capacity(ball_condenser(2, 48, 1.25, 0.35, 0.9), cfg);
  for (double v : res.minimizer) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("halving the regularization moves the value below the bundled tolerance") {
  CapacitySettings cfg;
  const auto full = p_capacity(ball_condenser(2, 64, 1.3, 0.5, 0.95, 1.0), cfg);
  const auto half = p_capacity(ball_condenser(2, 64, 1.3, 0.5, 0.95, 0.5), cfg);
  CHECK(std::abs(full.value - half.value) / full.value < 1e-3);
}

TEST_CASE("condenser validation rejects obstacles touching the boundary") {
  Condenser c;
  c.grid = Grid(2, 32, Cube{{{0, 0, 0}}, 1.0});
  c.p = 1.4;
  c.eps = c.grid.spacing();
  c.domain = Condenser::interior_domain(c.grid);
  c.obstacle.assign(c.grid.cell_count(), 0);
  c.obstacle[c.grid.ravel({1, 16, 0})] = 1;  // adjacent to the clamped layer
  CHECK_THROWS_AS(p_capacity(c, {}), ConfigError);
}

TEST_CASE("delta ratio trivial geometries") {
  CapacitySettings cfg;
  cfg.grid_n = 48;
  SUBCASE("empty complement gives 0") {
    DomainSpec spec;
    spec.kind = "full-cube";
    spec.grid_n = 128;
    const auto mask = build_domain(spec);
    CHECK(delta_ratio(mask, {{0, 0, 0}}, 0.2, 1.3, cfg) == 0.0);
  }
  SUBCASE("complement covering K_rho gives 1") {
    DomainSpec spec;
    spec.kind = "half-space";
    spec.grid_n = 128;
    const auto mask = build_domain(spec);
    // K_rho(x_o) entirely in the complement {x0 >= 0}
    CHECK(delta_ratio(mask, {{0.5, 0, 0}}, 0.2, 1.3, cfg) == 1.0);
  }
}

TEST_CASE("half-space delta is scale invariant") {
  CapacitySettings cfg;
  cfg.grid_n = 64;
  DomainSpec spec;
  spec.kind = "half-space";
  spec.grid_n = 512;
  const auto mask = build_domain(spec);
  const double d1 = delta_ratio(mask, {{0, 0, 0}}, 0.2, 1.3, cfg);
  const double d2 = delta_ratio(mask, {{0, 0, 0}}, 0.1, 1.3, cfg);
  CHECK(d1 > 0.1);
  CHECK(std::abs(d1 - d2) < 0.02);
}

TEST_CASE("delta ratio rejections") {
  CapacitySettings cfg;
  DomainSpec spec;
  spec.kind = "half-space";
  spec.grid_n = 64;
  const auto mask = build_domain(spec);
  // unresolvable: fewer than 4 mask cells across 2*rho
  CHECK_THROWS_WITH_AS(delta_ratio(mask, {{0, 0, 0}}, 0.03, 1.3, cfg),
                       doctest::Contains("unresolvable"), ConfigError);
  // annulus outside the bounding cube
  CHECK_THROWS_AS(delta_ratio(mask, {{0, 0, 0}}, 0.9, 1.3, cfg), ConfigError);
}

TEST_CASE("capacity profile on trivial and graded geometries") {
  CapacitySettings cfg;
  cfg.grid_n = 48;
  cfg.workers = 2;
  SUBCASE("full cube: all deltas vanish") {
    DomainSpec spec;
    spec.kind = "full-cube";
    spec.grid_n = 256;
    const auto mask = build_domain(spec);
    const auto prof = capacity_profile(mask, {{0, 0, 0}}, 1.3, 4, cfg);
    for (double d : prof.delta) CHECK(d == 0.0);
    CHECK(prof.gamma_o == 0.0);
    CHECK(prof.rho_bar == prof.scales.front());
  }
  SUBCASE("cusp complement: delta decreases with depth") {
    DomainSpec spec;
    spec.kind = "cusp";
    spec.grid_n = 1024;
    spec.cusp_coeff = 1.2;
    spec.cusp_power = 2.0;
    spec.cusp_len = 0.9;
    const auto mask = build_domain(spec);
    const auto prof = capacity_profile(mask, {{0, 0, 0}}, 1.3, 4, cfg);
    REQUIRE(prof.resolved_count() == 4);
    for (std::size_t j = 1; j < prof.delta.size(); ++j)
      CHECK(prof.delta[j] < prof.delta[j - 1] + 1e-3);
    CHECK(prof.delta.back() < 0.6 * prof.delta.front());
  }
  SUBCASE("profiles need at least 3 scales") {
    DomainSpec spec;
    spec.kind = "half-space";
    spec.grid_n = 128;
    const auto mask = build_domain(spec);
    CHECK_THROWS_AS(capacity_profile(mask, {{0, 0, 0}}, 1.3, 2, cfg), ConfigError);
  }
}
