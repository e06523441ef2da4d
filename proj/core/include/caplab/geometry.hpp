#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "caplab/config.hpp"
#include "caplab/grid.hpp"

namespace caplab {

/// Lateral/initial datum g(x, t). The evaluator must be defined on the whole
/// bounding cube for all t in the run horizon.
struct BoundaryDatum {
  std::function<double(const Point&, double)> evaluator;
  bool time_dependent = true;
  std::optional<double> holder_exponent;  // datum is C^0,alpha with this alpha
  std::optional<double> holder_constant;
  /// Oscillation bound omega_g(rho), when known.
  std::optional<std::function<double(double)>> modulus_bound;

  double operator()(const Point& x, double t) const { return evaluator(x, t); }

  static BoundaryDatum zero();
  static BoundaryDatum constant(double value);
  /// 0 inside |x-anchor| <= r0, ramping smoothly to `amplitude` at r1.
  static BoundaryDatum radial_ramp(const Point& anchor, double r0, double r1,
                                   double amplitude);
};

BoundaryDatum parse_datum(const Config& cfg, const std::string& prefix);

/// Geometry descriptor. `kind` selects how the complement of E is carved out
/// of the bounding cube:
///   full-cube   : empty complement (E is the whole cube)
///   half-space  : E = { (x-point).axis < 0 }
///   spike       : E is the open wedge/cone of opening angle beta around
///                 `axis` with apex `point` (the complement is everything
///                 else, so the apex sees a fat exterior)
///   corkscrew   : complement is a chain of balls of geometrically shrinking
///                 radius accumulating at `point` along `axis` (parameters M,
///                 r_o); certified for effective constants M >= 6
///   cusp        : complement = { s in [0, cusp_len], |w| <= cusp_coeff * s^cusp_power }
///                 where s is the coordinate along `axis` from `point` and w
///                 the transversal offset; relative width shrinks when
///                 cusp_power > 1 (slab-with-cusp in 3-D: extruded along the
///                 second transversal)
///   union       : complement is a union of listed balls and cubes
struct DomainSpec {
  int dim = 2;
  int grid_n = 64;
  Cube box{{{0.0, 0.0, 0.0}}, 1.0};
  std::string kind = "full-cube";
  Point point{{0.0, 0.0, 0.0}};
  Point axis{{1.0, 0.0, 0.0}};
  double beta = 1.5707963267948966;  // spike opening angle
  double M = 8.0;                    // corkscrew constant
  double r_o = 0.5;                  // corkscrew top scale
  double cusp_coeff = 1.0;
  double cusp_power = 2.0;
  double cusp_len = 0.5;
  struct Ball {
    Point center;
    double radius;
  };
  std::vector<Ball> balls;
  std::vector<Cube> cubes;
};

DomainSpec parse_domain(const Config& cfg, const std::string& prefix);

/// Discretized spatial domain E inside a bounding cube. Membership is decided
/// at cell centers; the discrete boundary is the set of inside cells with an
/// outside face-neighbor.
class DomainMask {
public:
  Grid grid;
  std::vector<std::uint8_t> inside;  // 1 = cell center in E
  BoundaryDatum datum = BoundaryDatum::zero();
  std::string kind;  // descriptor kind used to build the mask

  bool is_inside(std::size_t cell) const { return inside[cell] != 0; }
  std::size_t inside_count() const;
  bool has_outside() const { return inside_count() < grid.cell_count(); }

  /// Inside cells adjacent (face) to an outside cell.
  std::vector<std::size_t> boundary_cells() const;
  bool is_boundary_cell(std::size_t cell) const;
  /// True when the 3^N neighborhood of `cell` contains both phases.
  bool near_interface(std::size_t cell) const;
};

/// Builds the mask from a descriptor. Rejects descriptors that promise both
/// phases but produce an empty E or an empty complement at this resolution.
DomainMask build_domain(const DomainSpec& spec,
                        BoundaryDatum datum = BoundaryDatum::zero());
DomainMask build_domain(const Config& cfg, const std::string& prefix);

/// Exact Euclidean distance transform: for every cell, the distance (in
/// physical units) to the nearest cell with mark != 0. Cells with mark != 0
/// get 0. Felzenszwalb-Huttenlocher, separable per axis.
std::vector<double> distance_to_marked(const Grid& grid,
                                       const std::vector<std::uint8_t>& mark);

struct CorkscrewRow {
  double r = 0.0;
  bool passed = false;
  std::size_t annulus_cells = 0;  // complement cells in the annulus r/M..r
  std::optional<Point> witness;
  double witness_clearance = 0.0;  // distance of witness to E
};

struct CorkscrewReport {
  Point x_o;
  double M = 0.0;
  std::vector<CorkscrewRow> rows;
  bool all_passed() const;
};

/// Checks the outer corkscrew condition at x_o against the grid geometry:
/// for each scale r it searches a complement cell a_r with
/// r/M < |a_r - x_o| < r and dist(a_r, E) > r/M (distance transform metric).
/// With strict=true (default), x_o must sit on the discrete interface,
/// otherwise the call is rejected; strict=false evaluates the scales anyway
/// (an interior point then simply fails every small scale).
CorkscrewReport corkscrew_check(const DomainMask& domain, const Point& x_o,
                                double M, double r_o,
                                const std::vector<double>& scales,
                                bool strict = true);

/// Intrinsic backward cylinder K_rho(x_o) x (t_o - 0.5*c*omega^(2-p)*rho^p, t_o].
Cylinder intrinsic_cylinder(const Point& x_o, double t_o, double rho,
                            double omega_o, double c, double p);

/// Dumps a mask slice as a binary portable grey-map (inside=255, outside=0).
/// For dim < 3 the slice arguments are ignored. slice_index < 0 selects the
/// middle slice.
void write_pgm(const DomainMask& mask, const std::string& path,
               int slice_axis = 2, int slice_index = -1);

}  // namespace caplab
