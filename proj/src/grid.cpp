#include "bohmlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bohmlab/errors.hpp"

namespace bohmlab {

Grid::Grid(std::vector<AxisSpec> axes, Boundary boundary)
    : axes_(std::move(axes)), boundary_(boundary), dims_(axes_.size()), size_(1) {
  if (dims_ < 1 || dims_ > kMaxDims) {
    fail(ErrorKind::Configuration, "grid must have 1 or 2 axes, got " + std::to_string(dims_));
  }
  for (std::size_t a = 0; a < dims_; ++a) {
    const auto& ax = axes_[a];
    if (ax.points < kMinPointsPerAxis) {
      fail(ErrorKind::Configuration, "axis " + std::to_string(a) + " needs at least 8 points");
    }
    if (!(ax.max > ax.min)) {
      fail(ErrorKind::Configuration, "axis " + std::to_string(a) + " has an empty extent");
    }
    const double n = static_cast<double>(ax.points);
    spacing_[a] = boundary_ == Boundary::Periodic ? (ax.max - ax.min) / n : (ax.max - ax.min) / (n - 1.0);
    size_ *= ax.points;
  }
}

Grid Grid::line(double min, double max, std::size_t points, Boundary boundary) {
  return Grid({AxisSpec{min, max, points}}, boundary);
}

double Grid::cell_volume() const noexcept {
  double v = 1.0;
  for (std::size_t a = 0; a < dims_; ++a) v *= spacing_[a];
  return v;
}

std::size_t Grid::stride(std::size_t axis) const {
  std::size_t s = 1;
  for (std::size_t a = axis + 1; a < dims_; ++a) s *= axes_[a].points;
  return s;
}

std::array<std::size_t, kMaxDims> Grid::unravel(std::size_t flat) const {
  std::array<std::size_t, kMaxDims> idx{};
  for (std::size_t a = dims_; a-- > 0;) {
    idx[a] = flat % axes_[a].points;
    flat /= axes_[a].points;
  }
  return idx;
}

Point Grid::point(std::size_t flat) const {
  const auto idx = unravel(flat);
  Point q{};
  for (std::size_t a = 0; a < dims_; ++a) q[a] = coordinate(a, idx[a]);
  return q;
}

bool Grid::contains(const Point& q) const {
  if (periodic()) return true;
  for (std::size_t a = 0; a < dims_; ++a) {
    if (!(q[a] >= axes_[a].min && q[a] <= axes_[a].max)) return false;
  }
  return true;
}

Point Grid::wrap(const Point& q) const {
  if (!periodic()) return q;
  Point w = q;
  for (std::size_t a = 0; a < dims_; ++a) {
    const double len = length(a);
    double x = std::fmod(q[a] - axes_[a].min, len);
    if (x < 0) x += len;
    if (x >= len) x = 0.0;
    w[a] = axes_[a].min + x;
  }
  return w;
}

bool operator==(const Grid& a, const Grid& b) {
  if (a.dims_ != b.dims_ || a.boundary_ != b.boundary_) return false;
  for (std::size_t i = 0; i < a.dims_; ++i) {
    if (a.axes_[i].min != b.axes_[i].min || a.axes_[i].max != b.axes_[i].max ||
        a.axes_[i].points != b.axes_[i].points) {
      return false;
    }
  }
  return true;
}

RealField::RealField(Grid grid) : grid_(std::move(grid)), values_(grid_.size(), 0.0) {}

RealField::RealField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    fail(ErrorKind::Shape, "real field has " + std::to_string(values_.size()) + " values for a grid of " +
                               std::to_string(grid_.size()) + " points");
  }
}

double RealField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

ComplexField::ComplexField(Grid grid, std::size_t components)
    : grid_(std::move(grid)), components_(components), data_(components * grid_.size()) {
  if (components_ < 1 || components_ > 2) {
    fail(ErrorKind::Shape, "fields carry 1 or 2 components, got " + std::to_string(components_));
  }
}

std::span<Complex> ComplexField::component(std::size_t c) {
  return std::span<Complex>(data_).subspan(c * grid_.size(), grid_.size());
}

std::span<const Complex> ComplexField::component(std::size_t c) const {
  return std::span<const Complex>(data_).subspan(c * grid_.size(), grid_.size());
}

void require_same_shape(const ComplexField& a, const ComplexField& b) {
  if (!(a.grid() == b.grid())) fail(ErrorKind::Shape, "fields live on different grids");
  if (a.components() != b.components()) {
    fail(ErrorKind::Shape, "component mismatch: " + std::to_string(a.components()) + " vs " +
                               std::to_string(b.components()));
  }
}

ComplexField& ComplexField::operator+=(const ComplexField& other) {
  require_same_shape(*this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ComplexField& ComplexField::operator*=(Complex factor) {
  for (auto& z : data_) z *= factor;
  return *this;
}

ComplexField operator+(ComplexField a, const ComplexField& b) {
  a += b;
  return a;
}

ComplexField operator*(Complex factor, ComplexField a) {
  a *= factor;
  return a;
}

WaveFunction::WaveFunction(ComplexField amplitudes, double time, Physics physics)
    : amplitudes_(std::move(amplitudes)), time_(time), physics_(physics) {
  if (!(physics_.mass > 0) || !(physics_.hbar > 0)) {
    fail(ErrorKind::Configuration, "mass and hbar must be positive");
  }
}

WaveFunction WaveFunction::with_amplitudes(ComplexField amplitudes) const {
  return WaveFunction(std::move(amplitudes), time_, physics_);
}

WaveFunction WaveFunction::at_time(double time) const { return WaveFunction(amplitudes_, time, physics_); }

RealField density(const ComplexField& field) {
  RealField rho(field.grid());
  for (std::size_t c = 0; c < field.components(); ++c) {
    const auto comp = field.component(c);
    for (std::size_t p = 0; p < comp.size(); ++p) rho[p] += std::norm(comp[p]);
  }
  return rho;
}

RealField density(const WaveFunction& psi) { return density(psi.amplitudes()); }

Complex inner_product(const ComplexField& phi, const ComplexField& psi) {
  require_same_shape(phi, psi);
  Complex acc{0.0, 0.0};
  const auto a = phi.data();
  const auto b = psi.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc * phi.grid().cell_volume();
}

Complex inner_product(const WaveFunction& phi, const WaveFunction& psi) {
  return inner_product(phi.amplitudes(), psi.amplitudes());
}

double norm(const WaveFunction& psi) {
  return std::sqrt(std::max(0.0, inner_product(psi, psi).real()));
}

WaveFunction normalize(const WaveFunction& psi) {
  const double n = norm(psi);
  if (!(n > 0.0) || !std::isfinite(n)) {
    fail(ErrorKind::DegenerateState, "cannot normalize a wave function of norm " + std::to_string(n));
  }
  ComplexField scaled = psi.amplitudes();
  scaled *= Complex(1.0 / n, 0.0);
  return psi.with_amplitudes(std::move(scaled));
}

namespace {

double wrap_angle(double d) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  d = std::remainder(d, two_pi);
  return d;
}

// Unwraps the phase along a line of flat indices, outward from position `seed`
// whose phase is already set in S.
void unwrap_line(const std::vector<std::size_t>& line, std::size_t seed, const std::vector<double>& raw,
                 const std::vector<bool>& valid, double hbar, std::vector<double>& S) {
  auto sweep = [&](long step) {
    long last = static_cast<long>(seed);
    for (long k = static_cast<long>(seed) + step; k >= 0 && k < static_cast<long>(line.size()); k += step) {
      const std::size_t p = line[static_cast<std::size_t>(k)];
      if (!valid[p]) continue;
      const std::size_t prev = line[static_cast<std::size_t>(last)];
      S[p] = S[prev] + hbar * wrap_angle(raw[p] - raw[prev]);
      last = k;
    }
  };
  sweep(+1);
  sweep(-1);
}

}  // namespace

PolarForm to_polar(const WaveFunction& psi, double node_threshold) {
  if (psi.components() != 1) {
    fail(ErrorKind::UnsupportedOperation, "polar form is defined for scalar wave functions only");
  }
  const Grid& g = psi.grid();
  const auto amps = psi.amplitudes().component(0);
  const double hbar = psi.hbar();

  std::vector<double> R(g.size()), raw(g.size());
  std::size_t argmax = 0;
  for (std::size_t p = 0; p < g.size(); ++p) {
    R[p] = std::abs(amps[p]);
    raw[p] = std::arg(amps[p]);
    if (R[p] > R[argmax]) argmax = p;
  }
  const double cutoff = node_threshold * R[argmax];
  std::vector<bool> valid(g.size());
  for (std::size_t p = 0; p < g.size(); ++p) valid[p] = R[p] > cutoff;

  std::vector<double> S(g.size(), std::numeric_limits<double>::quiet_NaN());
  if (R[argmax] > 0.0) {
    S[argmax] = hbar * raw[argmax];
    const auto seed = g.unravel(argmax);
    if (g.dims() == 1) {
      std::vector<std::size_t> line(g.size());
      for (std::size_t i = 0; i < line.size(); ++i) line[i] = i;
      unwrap_line(line, seed[0], raw, valid, hbar, S);
    } else {
      const std::size_t n0 = g.points(0), n1 = g.points(1);
      std::vector<std::size_t> column(n0);
      for (std::size_t i = 0; i < n0; ++i) column[i] = i * n1 + seed[1];
      unwrap_line(column, seed[0], raw, valid, hbar, S);
      std::vector<std::size_t> row(n1);
      for (std::size_t i = 0; i < n0; ++i) {
        for (std::size_t j = 0; j < n1; ++j) row[j] = i * n1 + j;
        std::size_t row_seed = seed[1];
        if (!valid[row[row_seed]]) {
          // Column point is a node: restart this row from its own strongest point.
          row_seed = 0;
          for (std::size_t j = 1; j < n1; ++j) {
            if (R[row[j]] > R[row[row_seed]]) row_seed = j;
          }
          if (!valid[row[row_seed]]) continue;
          S[row[row_seed]] = hbar * raw[row[row_seed]];
        }
        unwrap_line(row, row_seed, raw, valid, hbar, S);
      }
    }
  }
  return PolarForm{RealField(g, std::move(R)), RealField(g, std::move(S)), std::move(valid), hbar, node_threshold};
}

ComplexField from_polar(const PolarForm& polar) {
  const Grid& g = polar.amplitude.grid();
  ComplexField out(g, 1);
  auto comp = out.component(0);
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!polar.valid[p]) continue;
    comp[p] = std::polar(polar.amplitude[p], polar.phase[p] / polar.hbar);
  }
  return out;
}

}  // namespace bohmlab
