#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "caplab/geometry.hpp"
#include "../oracles/mc_membership.hpp"

using namespace caplab;

namespace {

DomainSpec base_spec(const std::string& kind, int n = 64, int dim = 2) {
  DomainSpec s;
  s.kind = kind;
  s.dim = dim;
  s.grid_n = n;
  return s;
}

double inside_fraction(const DomainMask& m) {
  return static_cast<double>(m.inside_count()) /
         static_cast<double>(m.grid.cell_count());
}

}  // namespace

TEST_CASE("full-cube descriptor marks every cell inside") {
  const auto mask = build_domain(base_spec("full-cube"));
  CHECK(mask.inside_count() == mask.grid.cell_count());
  CHECK_FALSE(mask.has_outside());
}

TEST_CASE("half-space membership is the cell-center sign test") {
  auto spec = base_spec("half-space");
  const auto mask = build_domain(spec);
  for (std::size_t i = 0; i < mask.grid.cell_count(); ++i) {
    const Point x = mask.grid.center(i);
    CHECK(mask.is_inside(i) == (x[0] < 0.0));
  }
}

TEST_CASE("spike inside fraction matches the Monte-Carlo area oracle") {
  auto spec = base_spec("spike", 128);
  spec.beta = 1.1;
  const auto mask = build_domain(spec);
  // independent continuum membership via atan2
  const double frac_mc = oracle::mc_inside_fraction(
      spec.box, 2,
      [&](const Point& x) {
        const double r = std::hypot(x[0], x[1]);
        if (r == 0.0) return false;
        const double ang = std::atan2(x[1], x[0]);  // axis = +x
        return std::abs(ang) < 0.5 * spec.beta;
      },
      400000, 20240517ull);
  const double frac_grid = inside_fraction(mask);
  CHECK(std::abs(frac_grid - frac_mc) / frac_mc < 0.02);
}

TEST_CASE("degenerate descriptors are rejected with an explanation") {
  auto spec = base_spec("spike", 8);
  spec.beta = 1e-4;  // thinner than a cell: E empty on the grid
  CHECK_THROWS_AS(build_domain(spec), ConfigError);
  auto tiny = base_spec("union", 8);
  tiny.balls.push_back({{{0.9, 0.9, 0.0}}, 1e-6});  // complement misses all centers
  CHECK_THROWS_WITH_AS(build_domain(tiny), doctest::Contains("degenerate"),
                       ConfigError);
  auto bad = base_spec("nonsense");
  CHECK_THROWS_AS(build_domain(bad), ConfigError);
  auto coarse = base_spec("half-space", 4);
  CHECK_THROWS_WITH_AS(build_domain(coarse), doctest::Contains("grid_n"),
                       ConfigError);
}

TEST_CASE("membership is deterministic") {
  auto spec = base_spec("cusp", 96);
  spec.cusp_power = 2.0;
  spec.cusp_coeff = 0.8;
  const auto a = build_domain(spec);
  const auto b = build_domain(spec);
  CHECK(a.inside == b.inside);
}

TEST_CASE("refinement consistency: volume drift below the coarse surface fraction") {
  for (const char* kind : {"half-space", "spike", "cusp"}) {
    auto coarse = base_spec(kind, 64);
    auto fine = base_spec(kind, 128);
    const auto mc = build_domain(coarse);
    const auto mf = build_domain(fine);
    const double drift = std::abs(inside_fraction(mf) - inside_fraction(mc));
    const double surface = static_cast<double>(mc.boundary_cells().size()) /
                           static_cast<double>(mc.grid.cell_count());
    INFO("kind = " << kind);
    CHECK(drift < surface);
  }
}

TEST_CASE("corkscrew check passes on the half-space boundary") {
  const auto mask = build_domain(base_spec("half-space", 128));
  const auto rep = corkscrew_check(mask, {{0, 0, 0}}, 4.0, 0.6,
                                   {0.4, 0.2, 0.1, 0.05});
  for (const auto& row : rep.rows) {
    INFO("scale " << row.r);
    CHECK(row.passed);
    // the witness must sit in the complement annulus with clearance > r/M
    REQUIRE(row.witness.has_value());
    CHECK(row.witness_clearance > row.r / 4.0);
  }
  CHECK(rep.all_passed());
}

TEST_CASE("corkscrew check rejects interior points, fails them when non-strict") {
  const auto mask = build_domain(base_spec("half-space", 64));
  const Point interior{{-0.5, 0.0, 0.0}};
  CHECK_THROWS_WITH_AS(
      corkscrew_check(mask, interior, 4.0, 0.4, {0.1, 0.05}),
      doctest::Contains("discrete boundary"), ConfigError);
  const auto rep =
      corkscrew_check(mask, interior, 4.0, 0.4, {0.1, 0.05}, /*strict=*/false);
  for (const auto& row : rep.rows) CHECK_FALSE(row.passed);
}

TEST_CASE("corkscrew check passes at the tip of an outward spike") {
  auto spec = base_spec("spike", 192);
  spec.beta = 0.9;
  const auto mask = build_domain(spec);
  const auto rep = corkscrew_check(mask, {{0, 0, 0}}, 8.0, 0.6, {0.3, 0.15, 0.075});
  CHECK(rep.all_passed());
}

TEST_CASE("corkscrew descriptor realizes its own condition") {
  auto spec = base_spec("corkscrew", 256);
  spec.M = 8.0;
  spec.r_o = 0.5;
  const auto mask = build_domain(spec);
  const auto rep = corkscrew_check(mask, {{0, 0, 0}}, 8.0, 0.5, {0.25, 0.125});
  CHECK(rep.all_passed());
}

TEST_CASE("corkscrew check validates scales") {
  const auto mask = build_domain(base_spec("half-space", 64));
  CHECK_THROWS_AS(corkscrew_check(mask, {{0, 0, 0}}, 4.0, 0.2, {0.3}), ConfigError);
  CHECK_THROWS_AS(corkscrew_check(mask, {{0, 0, 0}}, 1.5, 0.2, {0.1}), ConfigError);
}

TEST_CASE("intrinsic cylinder arithmetic") {
  const Point x{{0, 0, 0}};
  SUBCASE("omega = 1 removes the intrinsic factor") {
    const auto cyl = intrinsic_cylinder(x, 1.0, 0.3, 1.0, 0.2, 1.5);
    CHECK(cyl.duration == doctest::Approx(0.5 * 0.2 * std::pow(0.3, 1.5)));
  }
  SUBCASE("worked value at c=0.1, omega=0.5, p=4/3, rho=0.25") {
    const auto cyl = intrinsic_cylinder(x, 1.0, 0.25, 0.5, 0.1, 4.0 / 3.0);
    const double expect =
        0.5 * 0.1 * std::pow(0.5, 2.0 - 4.0 / 3.0) * std::pow(0.25, 4.0 / 3.0);
    CHECK(cyl.duration == doctest::Approx(expect));
    CHECK(cyl.duration == doctest::Approx(4.96e-3).epsilon(2e-3));
  }
  SUBCASE("halving rho divides the duration by 2^p") {
    const double p = 4.0 / 3.0;
    const auto c1 = intrinsic_cylinder(x, 1.0, 0.2, 0.7, 0.1, p);
    const auto c2 = intrinsic_cylinder(x, 1.0, 0.1, 0.7, 0.1, p);
    CHECK(c1.duration / c2.duration == doctest::Approx(std::pow(2.0, p)));
  }
  SUBCASE("duration decreases in omega and increases in rho") {
    const double p = 1.25;
    const double d1 = intrinsic_cylinder(x, 1, 0.2, 0.5, 0.1, p).duration;
    const double d2 = intrinsic_cylinder(x, 1, 0.2, 1.5, 0.1, p).duration;
    const double d3 = intrinsic_cylinder(x, 1, 0.3, 0.5, 0.1, p).duration;
    CHECK(d2 < d1);
    CHECK(d3 > d1);
  }
  SUBCASE("invalid inputs are rejected") {
    CHECK_THROWS_AS(intrinsic_cylinder(x, 1, -0.1, 1, 0.1, 1.5), ConfigError);
    CHECK_THROWS_AS(intrinsic_cylinder(x, 1, 0.1, 0.0, 0.1, 1.5), ConfigError);
    CHECK_THROWS_AS(intrinsic_cylinder(x, 1, 0.1, 1.0, 0.1, 2.5), ConfigError);
    CHECK_THROWS_AS(intrinsic_cylinder(x, 1, 0.1, 1.0, 1.5, 1.5), ConfigError);
  }
}

TEST_CASE("distance transform matches brute force on a random mask") {
  const Grid grid(2, 24, Cube{{{0, 0, 0}}, 1.0});
  std::vector<std::uint8_t> mark(grid.cell_count(), 0);
  // deterministic scatter
  for (std::size_t i = 0; i < mark.size(); i += 37) mark[i] = 1;
  const auto dist = distance_to_marked(grid, mark);
  for (std::size_t i = 0; i < mark.size(); i += 11) {
    double best = 1e30;
    for (std::size_t j = 0; j < mark.size(); ++j) {
      if (!mark[j]) continue;
      const auto a = grid.center(i);
      const auto b = grid.center(j);
      best = std::min(best, std::hypot(a[0] - b[0], a[1] - b[1]));
    }
    CHECK(dist[i] == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("radial ramp datum satisfies its recorded modulus") {
  const auto g = BoundaryDatum::radial_ramp({{0, 0, 0}}, 0.2, 0.8, 1.0);
  REQUIRE(g.holder_exponent.has_value());
  REQUIRE(g.modulus_bound.has_value());
  // sampled oscillation over balls of radius rho stays below the bound
  for (double rho : {0.05, 0.1, 0.2}) {
    double worst = 0.0;
    for (double cx = -0.9; cx <= 0.9; cx += 0.15) {
      for (double cy = -0.9; cy <= 0.9; cy += 0.15) {
        double lo = 1e300, hi = -1e300;
        for (int k = 0; k < 16; ++k) {
          const double ang = 2.0 * M_PI * k / 16;
          const Point x{{cx + rho * std::cos(ang), cy + rho * std::sin(ang), 0}};
          const double v = g(x, 0.0);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        worst = std::max(worst, hi - lo);
      }
    }
    CHECK(worst <= (*g.modulus_bound)(2.0 * rho) + 1e-12);
  }
}

TEST_CASE("pgm dump writes a valid grey map") {
  const auto mask = build_domain(base_spec("half-space", 16));
  const std::string path = "test_mask.pgm";
  write_pgm(mask, path);
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  CHECK(magic == "P5");
  CHECK(w == 16);
  CHECK(h == 16);
  CHECK(maxv == 255);
  in.get();
  std::vector<char> body(16 * 16);
  in.read(body.data(), body.size());
  CHECK(in.gcount() == 256);
  std::remove(path.c_str());
}
