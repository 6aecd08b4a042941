#pragma once

// Cubic Hermite interpolation with centred-difference slopes (Catmull-Rom) in
// space and time. At the ends of non-periodic ranges the slope falls back to the
// second-order one-sided difference, so the interpolant stays C1 everywhere.

#include <array>
#include <cstddef>
#include <span>

#include "bohmlab/grid.hpp"

namespace bohmlab {

/// Weights over at most four samples of a uniformly spaced 1D sequence.
struct LineStencil {
  std::array<std::size_t, 4> index{};
  std::array<double, 4> weight{};
  std::size_t count = 0;
};

/// Stencil for fractional position u (in units of the spacing) on a sequence of
/// n samples. Periodic sequences wrap; otherwise u must lie in [0, n-1].
LineStencil line_stencil(double u, std::size_t n, bool periodic);

struct SpatialStencil {
  std::array<std::size_t, 16> index{};
  std::array<double, 16> weight{};
  std::size_t count = 0;
};

/// Throws an out-of-domain error when q lies outside a Box grid.
SpatialStencil spatial_stencil(const Grid& grid, const Point& q);

template <typename T>
T apply_stencil(std::span<const T> values, const SpatialStencil& s) {
  T acc{};
  for (std::size_t k = 0; k < s.count; ++k) acc += s.weight[k] * values[s.index[k]];
  return acc;
}

/// Time stencil over uniformly spaced snapshots starting at t0.
LineStencil temporal_stencil(double t0, double spacing, std::size_t snapshots, double t);

Complex interpolate(const ComplexField& field, std::size_t component, const Point& q);
double interpolate(const RealField& field, const Point& q);

}  // namespace bohmlab
