#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

namespace caplab {

using Point = std::array<double, 3>;

/// Axis-aligned cube K_rho(x_o): edge length 2*half_edge, faces parallel to
/// the coordinate planes. Coordinates beyond the active dimension are ignored.
struct Cube {
  Point center{{0.0, 0.0, 0.0}};
  double half_edge = 1.0;

  bool contains(const Point& x, int dim) const {
    for (int d = 0; d < dim; ++d) {
      const double r = x[d] - center[d];
      if (r < -half_edge || r > half_edge) return false;
    }
    return true;
  }
  /// True when `inner` (as a cube in `dim` dimensions) lies inside *this.
  bool encloses(const Cube& inner, int dim, double slack = 0.0) const {
    for (int d = 0; d < dim; ++d) {
      const double off = inner.center[d] - center[d];
      if (off - inner.half_edge < -half_edge - slack) return false;
      if (off + inner.half_edge > half_edge + slack) return false;
    }
    return true;
  }
};

/// Backward space-time cylinder cube x (t_end - duration, t_end].
struct Cylinder {
  Cube cube;
  double t_end = 0.0;
  double duration = 0.0;

  double t_start() const { return t_end - duration; }
  bool contains_time(double t) const { return t > t_start() && t <= t_end; }
};

/// Per-axis index ranges [lo, hi) of grid cells, used for cube queries.
struct IndexBox {
  std::array<int, 3> lo{{0, 0, 0}};
  std::array<int, 3> hi{{0, 0, 0}};
  bool empty(int dim) const {
    for (int d = 0; d < dim; ++d)
      if (lo[d] >= hi[d]) return true;
    return false;
  }
};

/// Uniform cell-centered grid over a bounding cube, dim in {1,2,3}.
/// Cells are indexed row-major with axis 0 fastest.
class Grid {
public:
  Grid() = default;
  Grid(int dim, int n, const Cube& box);

  int dim() const { return dim_; }
  int n() const { return n_; }
  const Cube& box() const { return box_; }
  double spacing() const { return 2.0 * box_.half_edge / n_; }
  std::size_t cell_count() const { return cells_; }
  std::size_t stride(int axis) const { return strides_[axis]; }

  std::array<int, 3> unravel(std::size_t idx) const {
    std::array<int, 3> m{{0, 0, 0}};
    for (int d = 0; d < dim_; ++d) {
      m[d] = static_cast<int>(idx % n_);
      idx /= n_;
    }
    return m;
  }
  std::size_t ravel(const std::array<int, 3>& m) const {
    std::size_t idx = 0;
    for (int d = dim_ - 1; d >= 0; --d) idx = idx * n_ + m[d];
    return idx;
  }
  bool in_bounds(const std::array<int, 3>& m) const {
    for (int d = 0; d < dim_; ++d)
      if (m[d] < 0 || m[d] >= n_) return false;
    return true;
  }

  Point center(const std::array<int, 3>& m) const {
    Point x{{0.0, 0.0, 0.0}};
    const double h = spacing();
    for (int d = 0; d < dim_; ++d)
      x[d] = box_.center[d] - box_.half_edge + (m[d] + 0.5) * h;
    return x;
  }
  Point center(std::size_t idx) const { return center(unravel(idx)); }

  /// Cell whose center is nearest to x (coordinates clamped to the grid).
  std::size_t nearest_cell(const Point& x) const;

  /// Index ranges of cells whose centers lie in `cube` (clamped to bounds).
  IndexBox cells_in_cube(const Cube& cube) const;

  /// True when this grid covers the same cube at the same resolution.
  bool same_layout(const Grid& other) const {
    return dim_ == other.dim_ && n_ == other.n_ &&
           box_.half_edge == other.box_.half_edge &&
           box_.center == other.box_.center;
  }

private:
  int dim_ = 0;
  int n_ = 0;
  Cube box_;
  std::size_t cells_ = 0;
  std::array<std::size_t, 3> strides_{{0, 0, 0}};
};

}  // namespace caplab
