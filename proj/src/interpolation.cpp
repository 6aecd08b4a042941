#include "bohmlab/interpolation.hpp"

#include <cmath>
#include <string>

#include "bohmlab/errors.hpp"

namespace bohmlab {
namespace {

struct Accumulator {
  LineStencil s;
  void add(std::size_t idx, double w) {
    for (std::size_t k = 0; k < s.count; ++k) {
      if (s.index[k] == idx) {
        s.weight[k] += w;
        return;
      }
    }
    s.index[s.count] = idx;
    s.weight[s.count] = w;
    ++s.count;
  }
};

}  // namespace

LineStencil line_stencil(double u, std::size_t n, bool periodic) {
  Accumulator acc;
  if (n == 1) {
    acc.add(0, 1.0);
    return acc.s;
  }
  long i = static_cast<long>(std::floor(u));
  if (!periodic) {
    if (u < 0.0 || u > static_cast<double>(n - 1)) {
      fail(ErrorKind::OutOfDomain, "interpolation point outside the sampled range");
    }
    if (i >= static_cast<long>(n) - 1) i = static_cast<long>(n) - 2;
  }
  const double t = u - static_cast<double>(i);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;

  const long ln = static_cast<long>(n);
  auto idx = [&](long m) -> std::size_t {
    if (periodic) {
      m %= ln;
      if (m < 0) m += ln;
    }
    return static_cast<std::size_t>(m);
  };
  // Slope at node m expressed as weights on neighbouring samples.
  auto add_slope = [&](long m, double w) {
    if (periodic || (m > 0 && m < ln - 1)) {
      acc.add(idx(m + 1), 0.5 * w);
      acc.add(idx(m - 1), -0.5 * w);
    } else if (n == 2) {
      acc.add(1, w);
      acc.add(0, -w);
    } else if (m == 0) {
      acc.add(0, -1.5 * w);
      acc.add(1, 2.0 * w);
      acc.add(2, -0.5 * w);
    } else {
      acc.add(idx(m), 1.5 * w);
      acc.add(idx(m - 1), -2.0 * w);
      acc.add(idx(m - 2), 0.5 * w);
    }
  };
  acc.add(idx(i), h00);
  acc.add(idx(i + 1), h01);
  add_slope(i, h10);
  add_slope(i + 1, h11);
  return acc.s;
}

SpatialStencil spatial_stencil(const Grid& grid, const Point& q) {
  if (!grid.contains(q)) fail(ErrorKind::OutOfDomain, "point outside the Box grid");
  std::array<LineStencil, kMaxDims> axes;
  for (std::size_t a = 0; a < grid.dims(); ++a) {
    double u = (q[a] - grid.min(a)) / grid.spacing(a);
    if (!grid.periodic()) {
      // Guard against rounding just past the last node.
      const double last = static_cast<double>(grid.points(a) - 1);
      if (u > last) u = last;
      if (u < 0.0) u = 0.0;
    }
    axes[a] = line_stencil(u, grid.points(a), grid.periodic());
  }
  SpatialStencil s;
  if (grid.dims() == 1) {
    for (std::size_t k = 0; k < axes[0].count; ++k) {
      s.index[k] = axes[0].index[k];
      s.weight[k] = axes[0].weight[k];
    }
    s.count = axes[0].count;
    return s;
  }
  const std::size_t n1 = grid.points(1);
  for (std::size_t a = 0; a < axes[0].count; ++a) {
    for (std::size_t b = 0; b < axes[1].count; ++b) {
      s.index[s.count] = axes[0].index[a] * n1 + axes[1].index[b];
      s.weight[s.count] = axes[0].weight[a] * axes[1].weight[b];
      ++s.count;
    }
  }
  return s;
}

LineStencil temporal_stencil(double t0, double spacing, std::size_t snapshots, double t) {
  if (snapshots == 0) fail(ErrorKind::Shape, "no snapshots to interpolate");
  if (snapshots == 1) return line_stencil(0.0, 1, false);
  double u = (t - t0) / spacing;
  const double last = static_cast<double>(snapshots - 1);
  constexpr double slack = 1e-9;
  if (u < -slack || u > last + slack) {
    fail(ErrorKind::OutOfDomain, "time " + std::to_string(t) + " outside the recorded span");
  }
  u = std::min(std::max(u, 0.0), last);
  return line_stencil(u, snapshots, false);
}

Complex interpolate(const ComplexField& field, std::size_t component, const Point& q) {
  return apply_stencil<Complex>(field.component(component), spatial_stencil(field.grid(), q));
}

double interpolate(const RealField& field, const Point& q) {
  return apply_stencil<double>(field.values(), spatial_stencil(field.grid(), q));
}

}  // namespace bohmlab
