#pragma once

#include <cstddef>
#include <span>

#include "bohmlab/grid.hpp"

namespace bohmlab::detail {

/// In-place unnormalized DFT of one component along one axis.
/// sign = -1 is the forward transform, +1 the inverse.
void fft_axis(std::span<Complex> values, const Grid& grid, std::size_t axis, int sign);

}  // namespace bohmlab::detail
