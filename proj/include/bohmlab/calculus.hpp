#pragma once

// Grid derivatives. Periodic grids wrap; Box grids treat the field as zero
// beyond the last point, which keeps the discrete momentum and kinetic
// operators Hermitian.

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "bohmlab/grid.hpp"

namespace bohmlab {

enum class DerivativeScheme { Spectral, CentralFD2, CentralFD4 };

std::string_view to_string(DerivativeScheme scheme);
DerivativeScheme parse_scheme(std::string_view name);

/// Spectral on periodic grids, fourth-order differences on Box grids.
DerivativeScheme default_scheme(const Grid& grid);
DerivativeScheme resolve_scheme(const Grid& grid, std::optional<DerivativeScheme> requested);
/// Throws a configuration error for a spectral scheme on a Box grid.
void check_scheme(const Grid& grid, DerivativeScheme scheme);

/// Angular wavenumbers of an axis in FFT order; the Nyquist mode is negative.
std::vector<double> wavenumbers(const Grid& grid, std::size_t axis);

/// d^order/dx_axis^order of every component; order is 1 or 2.
ComplexField derivative(const ComplexField& field, std::size_t axis, int order, DerivativeScheme scheme);
ComplexField laplacian(const ComplexField& field, DerivativeScheme scheme);
RealField derivative(const RealField& field, std::size_t axis, int order, DerivativeScheme scheme);

}  // namespace bohmlab
