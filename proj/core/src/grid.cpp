#include "caplab/grid.hpp"

#include <cmath>

namespace caplab {

Grid::Grid(int dim, int n, const Cube& box) : dim_(dim), n_(n), box_(box) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid dim must be 1, 2 or 3");
  if (n < 1) throw std::invalid_argument("grid resolution must be positive");
  if (box.half_edge <= 0.0) throw std::invalid_argument("cube half_edge must be positive");
  cells_ = 1;
  for (int d = 0; d < dim_; ++d) {
    strides_[d] = cells_;
    cells_ *= static_cast<std::size_t>(n_);
  }
}

std::size_t Grid::nearest_cell(const Point& x) const {
  const double h = spacing();
  std::array<int, 3> m{{0, 0, 0}};
  for (int d = 0; d < dim_; ++d) {
    const double lo = box_.center[d] - box_.half_edge;
    int i = static_cast<int>(std::floor((x[d] - lo) / h));
    if (i < 0) i = 0;
    if (i >= n_) i = n_ - 1;
    m[d] = i;
  }
  return ravel(m);
}

IndexBox Grid::cells_in_cube(const Cube& cube) const {
  IndexBox ib;
  ib.lo = {0, 0, 0};
  ib.hi = {1, 1, 1};
  const double h = spacing();
  for (int d = 0; d < dim_ && d < 3; ++d) {
    const double lo = box_.center[d] - box_.half_edge;
    const double a = cube.center[d] - cube.half_edge;
    const double b = cube.center[d] + cube.half_edge;
    // first cell whose center >= a, last cell whose center <= b
    int ia = static_cast<int>(std::ceil((a - lo) / h - 0.5));
    int ibx = static_cast<int>(std::floor((b - lo) / h - 0.5));
    if (ia < 0) ia = 0;
    if (ibx > n_ - 1) ibx = n_ - 1;
    ib.lo[d] = ia;
    ib.hi[d] = ibx + 1;
  }
  return ib;
}

}  // namespace caplab
