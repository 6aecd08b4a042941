#pragma once

// Uniform configuration-space grids and the fields that live on them.
//
// Layout: every field is a flat row-major array (axis 0 slowest). Multi-component
// fields store whole components back to back, so component c of point p lives at
// c * grid.size() + p.

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace bohmlab {

using Complex = std::complex<double>;
using Point = std::array<double, 2>;
using Spinor = std::array<Complex, 2>;

inline constexpr std::size_t kMaxDims = 2;
inline constexpr std::size_t kMinPointsPerAxis = 8;

enum class Boundary { Periodic, Box };

struct AxisSpec {
  double min = 0.0;
  double max = 1.0;
  std::size_t points = 0;
};

class Grid {
 public:
  Grid(std::vector<AxisSpec> axes, Boundary boundary);

  static Grid line(double min, double max, std::size_t points, Boundary boundary);

  std::size_t dims() const noexcept { return dims_; }
  Boundary boundary() const noexcept { return boundary_; }
  bool periodic() const noexcept { return boundary_ == Boundary::Periodic; }

  std::size_t points(std::size_t axis) const { return axes_[axis].points; }
  std::size_t size() const noexcept { return size_; }
  double min(std::size_t axis) const { return axes_[axis].min; }
  double max(std::size_t axis) const { return axes_[axis].max; }
  double length(std::size_t axis) const { return axes_[axis].max - axes_[axis].min; }
  double spacing(std::size_t axis) const { return spacing_[axis]; }
  double cell_volume() const noexcept;

  /// Row-major stride of an axis (1 for the last axis).
  std::size_t stride(std::size_t axis) const;
  double coordinate(std::size_t axis, std::size_t i) const {
    return axes_[axis].min + static_cast<double>(i) * spacing_[axis];
  }
  std::array<std::size_t, kMaxDims> unravel(std::size_t flat) const;
  Point point(std::size_t flat) const;

  /// Box grids cover the closed interval [min, max]; periodic grids cover all of R^d.
  bool contains(const Point& q) const;
  /// Periodic images mapped into [min, max); identity on Box grids.
  Point wrap(const Point& q) const;

  const std::vector<AxisSpec>& axes() const noexcept { return axes_; }

  friend bool operator==(const Grid& a, const Grid& b);

 private:
  std::vector<AxisSpec> axes_;
  Boundary boundary_;
  std::size_t dims_;
  std::size_t size_;
  std::array<double, kMaxDims> spacing_{};
};

class RealField {
 public:
  explicit RealField(Grid grid);
  RealField(Grid grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double max_abs() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

class ComplexField {
 public:
  ComplexField(Grid grid, std::size_t components);

  const Grid& grid() const noexcept { return grid_; }
  std::size_t components() const noexcept { return components_; }
  std::size_t points() const noexcept { return grid_.size(); }

  std::span<Complex> component(std::size_t c);
  std::span<const Complex> component(std::size_t c) const;
  std::span<Complex> data() noexcept { return data_; }
  std::span<const Complex> data() const noexcept { return data_; }

  Complex& at(std::size_t c, std::size_t p) { return data_[c * grid_.size() + p]; }
  Complex at(std::size_t c, std::size_t p) const { return data_[c * grid_.size() + p]; }

  ComplexField& operator+=(const ComplexField& other);
  ComplexField& operator*=(Complex factor);

 private:
  Grid grid_;
  std::size_t components_;
  std::vector<Complex> data_;
};

ComplexField operator+(ComplexField a, const ComplexField& b);
ComplexField operator*(Complex factor, ComplexField a);

/// Natural units by default; both overridable per scenario.
struct Physics {
  double mass = 1.0;
  double hbar = 1.0;
};

/// A snapshot of psi(q, t). Immutable once built.
class WaveFunction {
 public:
  WaveFunction(ComplexField amplitudes, double time, Physics physics);

  const ComplexField& amplitudes() const noexcept { return amplitudes_; }
  const Grid& grid() const noexcept { return amplitudes_.grid(); }
  std::size_t components() const noexcept { return amplitudes_.components(); }
  double time() const noexcept { return time_; }
  const Physics& physics() const noexcept { return physics_; }
  double mass() const noexcept { return physics_.mass; }
  double hbar() const noexcept { return physics_.hbar; }

  WaveFunction with_amplitudes(ComplexField amplitudes) const;
  WaveFunction at_time(double time) const;

 private:
  ComplexField amplitudes_;
  double time_;
  Physics physics_;
};

/// Pointwise psi^dagger psi.
RealField density(const WaveFunction& psi);
RealField density(const ComplexField& field);
double norm(const WaveFunction& psi);
WaveFunction normalize(const WaveFunction& psi);
/// Sum of phi^dagger psi times the cell volume.
Complex inner_product(const ComplexField& phi, const ComplexField& psi);
Complex inner_product(const WaveFunction& phi, const WaveFunction& psi);

void require_same_shape(const ComplexField& a, const ComplexField& b);

struct PolarForm {
  RealField amplitude;       // R
  RealField phase;           // S, in action units; NaN where invalid
  std::vector<bool> valid;   // R > node_threshold * max R
  double hbar = 1.0;
  double node_threshold = 1e-8;
};

inline constexpr double kDefaultPolarNodeThreshold = 1e-8;

/// R = |psi| and S = hbar * arg(psi), unwrapped axis by axis outward from the
/// maximum of R. Scalar wave functions only.
PolarForm to_polar(const WaveFunction& psi, double node_threshold = kDefaultPolarNodeThreshold);
/// R exp(iS/hbar) at valid points, zero elsewhere.
ComplexField from_polar(const PolarForm& polar);

}  // namespace bohmlab
