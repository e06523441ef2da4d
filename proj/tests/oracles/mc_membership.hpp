#pragma once

// Monte-Carlo volume-fraction reference for domain masks: samples points
// uniformly in the bounding cube and evaluates a caller-supplied continuum
// membership predicate. Deterministic for a fixed seed.

#include <cstdint>
#include <functional>
#include <random>

#include "caplab/grid.hpp"

namespace oracle {

inline double mc_inside_fraction(const caplab::Cube& box, int dim,
                                 const std::function<bool(const caplab::Point&)>& inside,
                                 std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < samples; ++s) {
    caplab::Point x{{0, 0, 0}};
    for (int d = 0; d < dim; ++d) x[d] = box.center[d] + box.half_edge * uni(rng);
    if (inside(x)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(samples);
}

}  // namespace oracle
