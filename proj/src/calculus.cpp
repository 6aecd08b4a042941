#include "bohmlab/calculus.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "bohmlab/errors.hpp"
#include "fft.hpp"

namespace bohmlab {

std::string_view to_string(DerivativeScheme scheme) {
  switch (scheme) {
    case DerivativeScheme::Spectral: return "spectral";
    case DerivativeScheme::CentralFD2: return "fd2";
    case DerivativeScheme::CentralFD4: return "fd4";
  }
  return "unknown";
}

DerivativeScheme parse_scheme(std::string_view name) {
  if (name == "spectral") return DerivativeScheme::Spectral;
  if (name == "fd2" || name == "central_fd2") return DerivativeScheme::CentralFD2;
  if (name == "fd4" || name == "central_fd4") return DerivativeScheme::CentralFD4;
  fail(ErrorKind::Validation, "unknown derivative scheme '" + std::string(name) + "'");
}

DerivativeScheme default_scheme(const Grid& grid) {
  return grid.periodic() ? DerivativeScheme::Spectral : DerivativeScheme::CentralFD4;
}

DerivativeScheme resolve_scheme(const Grid& grid, std::optional<DerivativeScheme> requested) {
  const DerivativeScheme s = requested.value_or(default_scheme(grid));
  check_scheme(grid, s);
  return s;
}

void check_scheme(const Grid& grid, DerivativeScheme scheme) {
  if (scheme == DerivativeScheme::Spectral && !grid.periodic()) {
    fail(ErrorKind::Configuration, "spectral derivatives require a periodic grid");
  }
}

std::vector<double> wavenumbers(const Grid& grid, std::size_t axis) {
  const std::size_t n = grid.points(axis);
  const double dk = 2.0 * std::numbers::pi / grid.length(axis);
  std::vector<double> k(n);
  for (std::size_t j = 0; j < n; ++j) {
    const long m = j < (n + 1) / 2 ? static_cast<long>(j) : static_cast<long>(j) - static_cast<long>(n);
    k[j] = dk * static_cast<double>(m);
  }
  return k;
}

namespace {

void spectral_component(std::span<Complex> values, const Grid& grid, std::size_t axis, int order) {
  const std::size_t n = grid.points(axis);
  const std::size_t stride = grid.stride(axis);
  const auto k = wavenumbers(grid, axis);
  detail::fft_axis(values, grid, axis, -1);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t p = 0; p < values.size(); ++p) {
    const std::size_t j = (p / stride) % n;
    Complex factor;
    if (order == 1) {
      // Odd derivatives drop the Nyquist mode so real fields stay real.
      factor = (n % 2 == 0 && j == n / 2) ? Complex(0.0, 0.0) : Complex(0.0, k[j]);
    } else {
      factor = Complex(-k[j] * k[j], 0.0);
    }
    values[p] *= factor * scale;
  }
  detail::fft_axis(values, grid, axis, +1);
}

template <typename T>
void difference_component(std::span<const T> in, std::span<T> out, const Grid& grid, std::size_t axis, int order,
                          DerivativeScheme scheme) {
  const std::size_t n = grid.points(axis);
  const std::size_t stride = grid.stride(axis);
  const double h = grid.spacing(axis);
  const bool periodic = grid.periodic();
  for (std::size_t p = 0; p < in.size(); ++p) {
    const long j = static_cast<long>((p / stride) % n);
    const std::size_t base = p - static_cast<std::size_t>(j) * stride;
    auto at = [&](long offset) -> T {
      long m = j + offset;
      if (periodic) {
        m %= static_cast<long>(n);
        if (m < 0) m += static_cast<long>(n);
      } else if (m < 0 || m >= static_cast<long>(n)) {
        return T{};
      }
      return in[base + static_cast<std::size_t>(m) * stride];
    };
    if (scheme == DerivativeScheme::CentralFD2) {
      out[p] = order == 1 ? (at(1) - at(-1)) / (2.0 * h) : (at(1) - 2.0 * at(0) + at(-1)) / (h * h);
    } else {
      out[p] = order == 1 ? (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h)
                          : (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h);
    }
  }
}

void check_request(const Grid& grid, std::size_t axis, int order, DerivativeScheme scheme) {
  if (axis >= grid.dims()) fail(ErrorKind::Shape, "axis " + std::to_string(axis) + " out of range");
  if (order != 1 && order != 2) fail(ErrorKind::UnsupportedOperation, "derivative order must be 1 or 2");
  check_scheme(grid, scheme);
}

}  // namespace

ComplexField derivative(const ComplexField& field, std::size_t axis, int order, DerivativeScheme scheme) {
  const Grid& grid = field.grid();
  check_request(grid, axis, order, scheme);
  ComplexField out(grid, field.components());
  for (std::size_t c = 0; c < field.components(); ++c) {
    if (scheme == DerivativeScheme::Spectral) {
      auto dst = out.component(c);
      const auto src = field.component(c);
      std::copy(src.begin(), src.end(), dst.begin());
      spectral_component(dst, grid, axis, order);
    } else {
      difference_component<Complex>(field.component(c), out.component(c), grid, axis, order, scheme);
    }
  }
  return out;
}

ComplexField laplacian(const ComplexField& field, DerivativeScheme scheme) {
  ComplexField out = derivative(field, 0, 2, scheme);
  for (std::size_t a = 1; a < field.grid().dims(); ++a) out += derivative(field, a, 2, scheme);
  return out;
}

RealField derivative(const RealField& field, std::size_t axis, int order, DerivativeScheme scheme) {
  const Grid& grid = field.grid();
  check_request(grid, axis, order, scheme);
  RealField out(grid);
  if (scheme == DerivativeScheme::Spectral) {
    ComplexField tmp(grid, 1);
    auto c = tmp.component(0);
    for (std::size_t p = 0; p < grid.size(); ++p) c[p] = field[p];
    spectral_component(c, grid, axis, order);
    for (std::size_t p = 0; p < grid.size(); ++p) out[p] = c[p].real();
  } else {
    difference_component<double>(field.values(), out.values(), grid, axis, order, scheme);
  }
  return out;
}

}  // namespace bohmlab
