#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

namespace bohmlab::detail {
namespace {

struct AlignedBuffer {
  explicit AlignedBuffer(std::size_t n)
      : data(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n))) {}
  ~AlignedBuffer() { fftw_free(data); }
  AlignedBuffer(const AlignedBuffer&) = delete;
  AlignedBuffer& operator=(const AlignedBuffer&) = delete;
  fftw_complex* data;
};

using PlanKey = std::tuple<std::size_t, std::size_t, std::size_t, std::size_t, int>;

// Planning is not thread-safe in FFTW; execution on fresh fftw_malloc'd arrays is.
// Every execution goes through an aligned scratch buffer so the codelets chosen at
// planning time stay valid and results do not depend on caller alignment.
fftw_plan plan_for(const Grid& grid, std::size_t axis, int sign) {
  static std::mutex mutex;
  static std::map<PlanKey, fftw_plan> cache;
  const std::size_t n0 = grid.points(0);
  const std::size_t n1 = grid.dims() > 1 ? grid.points(1) : 1;
  const PlanKey key{grid.dims(), n0, n1, axis, sign};
  std::lock_guard lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  const std::size_t total = grid.size();
  AlignedBuffer scratch(total);
  const int n = static_cast<int>(grid.points(axis));
  const int stride = static_cast<int>(grid.stride(axis));
  const int howmany = static_cast<int>(total / grid.points(axis));
  const int dist = axis == 0 && grid.dims() > 1 ? 1 : n;
  fftw_plan plan = fftw_plan_many_dft(1, &n, howmany, scratch.data, nullptr, stride, dist, scratch.data, nullptr,
                                      stride, dist, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

void fft_axis(std::span<Complex> values, const Grid& grid, std::size_t axis, int sign) {
  fftw_plan plan = plan_for(grid, axis, sign);
  AlignedBuffer buffer(values.size());
  std::memcpy(static_cast<void*>(buffer.data), static_cast<const void*>(values.data()), values.size_bytes());
  fftw_execute_dft(plan, buffer.data, buffer.data);
  std::memcpy(static_cast<void*>(values.data()), static_cast<const void*>(buffer.data), values.size_bytes());
}

}  // namespace bohmlab::detail
