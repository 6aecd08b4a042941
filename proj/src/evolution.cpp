#include "bohmlab/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bohmlab/errors.hpp"
#include "bohmlab/field_io.hpp"
#include "fft.hpp"

namespace bohmlab {

using nlohmann::json;

std::string_view to_string(Method method) {
  return method == Method::SplitStep ? "split_step" : "crank_nicolson";
}

Method parse_method(std::string_view name) {
  if (name == "split_step" || name == "split_step_spectral") return Method::SplitStep;
  if (name == "crank_nicolson") return Method::CrankNicolson;
  fail(ErrorKind::Validation, "unknown propagator method '" + std::string(name) + "'");
}

DerivativeScheme EvolutionRecord::scheme() const {
  return method == Method::SplitStep ? DerivativeScheme::Spectral : DerivativeScheme::CentralFD2;
}

Observable EvolutionRecord::hamiltonian() const { return Observable::hamiltonian(potential, scheme(), potential_id); }

double max_energy(const Grid& grid, const RealField* potential, const Physics& physics) {
  double kinetic = 0.0;
  for (std::size_t a = 0; a < grid.dims(); ++a) {
    const double k = std::numbers::pi / grid.spacing(a);
    kinetic += physics.hbar * physics.hbar * k * k / (2.0 * physics.mass);
  }
  const double v = potential ? potential->max_abs() : 0.0;
  return std::max(kinetic, v);
}

double default_dt(const Grid& grid, const RealField* potential, const Physics& physics) {
  return 0.05 * physics.hbar / max_energy(grid, potential, physics);
}

namespace {

class SplitStepper {
 public:
  SplitStepper(const Grid& grid, const RealField* V, const Physics& physics, double dt) : grid_(grid) {
    const double hbar = physics.hbar;
    half_potential_.resize(grid.size(), Complex(1.0, 0.0));
    if (V) {
      for (std::size_t p = 0; p < grid.size(); ++p) {
        half_potential_[p] = std::polar(1.0, -(*V)[p] * dt / (2.0 * hbar));
      }
    }
    kinetic_.resize(grid.size());
    std::array<std::vector<double>, kMaxDims> k;
    for (std::size_t a = 0; a < grid.dims(); ++a) k[a] = wavenumbers(grid, a);
    const double norm = 1.0 / static_cast<double>(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const auto idx = grid.unravel(p);
      double k2 = 0.0;
      for (std::size_t a = 0; a < grid.dims(); ++a) k2 += k[a][idx[a]] * k[a][idx[a]];
      kinetic_[p] = std::polar(norm, -hbar * k2 * dt / (2.0 * physics.mass));
    }
  }

  void step(std::span<Complex> psi) const {
    for (std::size_t p = 0; p < psi.size(); ++p) psi[p] *= half_potential_[p];
    for (std::size_t a = 0; a < grid_.dims(); ++a) detail::fft_axis(psi, grid_, a, -1);
    for (std::size_t p = 0; p < psi.size(); ++p) psi[p] *= kinetic_[p];
    for (std::size_t a = 0; a < grid_.dims(); ++a) detail::fft_axis(psi, grid_, a, +1);
    for (std::size_t p = 0; p < psi.size(); ++p) psi[p] *= half_potential_[p];
  }

 private:
  const Grid& grid_;
  std::vector<Complex> half_potential_;
  std::vector<Complex> kinetic_;
};

// (1 + i H dt/2hbar) psi' = (1 - i H dt/2hbar) psi with H = -hbar^2/2m D2 + V on the
// interior points; the wall points stay zero.
class CrankNicolsonStepper {
 public:
  CrankNicolsonStepper(const Grid& grid, const RealField* V, const Physics& physics, double dt) : n_(grid.size()) {
    const double h = grid.spacing(0);
    const double t = physics.hbar / (2.0 * physics.mass * h * h);  // hbar/2m h^2, energy/hbar units
    const Complex s(0.0, dt / 2.0);
    off_ = s * (-t);  // neighbour coefficient of i dt H / 2 hbar
    diag_.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = V ? (*V)[j] / physics.hbar : 0.0;
      diag_[j] = s * (2.0 * t + v);
    }
    // Thomas factorization of (1 + A), reused every step.
    c_prime_.assign(n_, Complex(0.0, 0.0));
    denom_.assign(n_, Complex(1.0, 0.0));
    for (std::size_t j = 1; j + 1 < n_; ++j) {
      const Complex b = 1.0 + diag_[j];
      const Complex lower = j > 1 ? off_ : Complex(0.0, 0.0);
      denom_[j] = b - lower * (j > 1 ? c_prime_[j - 1] : Complex(0.0, 0.0));
      c_prime_[j] = (j + 2 < n_ ? off_ : Complex(0.0, 0.0)) / denom_[j];
    }
  }

  void step(std::span<Complex> psi) const {
    std::vector<Complex> rhs(n_, Complex(0.0, 0.0));
    for (std::size_t j = 1; j + 1 < n_; ++j) {
      const Complex left = j > 1 ? psi[j - 1] : Complex(0.0, 0.0);
      const Complex right = j + 2 < n_ ? psi[j + 1] : Complex(0.0, 0.0);
      rhs[j] = (1.0 - diag_[j]) * psi[j] - off_ * (left + right);
    }
    std::vector<Complex> d(n_, Complex(0.0, 0.0));
    for (std::size_t j = 1; j + 1 < n_; ++j) {
      const Complex prev = j > 1 ? d[j - 1] : Complex(0.0, 0.0);
      d[j] = (rhs[j] - (j > 1 ? off_ : Complex(0.0, 0.0)) * prev) / denom_[j];
    }
    psi[0] = psi[n_ - 1] = Complex(0.0, 0.0);
    for (std::size_t j = n_ - 2; j >= 1; --j) {
      psi[j] = d[j] - (j + 2 < n_ ? c_prime_[j] * psi[j + 1] : Complex(0.0, 0.0));
    }
  }

 private:
  std::size_t n_;
  Complex off_;
  std::vector<Complex> diag_;
  std::vector<Complex> c_prime_;
  std::vector<Complex> denom_;
};

void check_propagator(const WaveFunction& psi0, const Propagator& prop) {
  const Grid& grid = psi0.grid();
  if (prop.stride < 1) fail(ErrorKind::Validation, "snapshot stride must be at least 1");
  if (prop.potential && !(prop.potential->grid() == grid)) fail(ErrorKind::Shape, "potential lives on a different grid");
  if (prop.method == Method::SplitStep && !grid.periodic()) {
    fail(ErrorKind::Configuration, "split-step propagation requires a periodic grid");
  }
  if (prop.method == Method::CrankNicolson) {
    if (grid.periodic()) fail(ErrorKind::Configuration, "Crank-Nicolson propagation requires a Box grid");
    if (grid.dims() != 1) fail(ErrorKind::Configuration, "Crank-Nicolson propagation is implemented for 1D grids");
  }
}

}  // namespace

EvolutionRecord evolve(const WaveFunction& psi0, const Propagator& prop, std::size_t steps) {
  check_propagator(psi0, prop);
  const Grid& grid = psi0.grid();
  const Physics physics = psi0.physics();
  const RealField* V = prop.potential.get();
  const double dt = prop.dt > 0.0 ? prop.dt : default_dt(grid, V, physics);

  EvolutionRecord rec;
  rec.method = prop.method;
  rec.dt = dt;
  rec.stride = prop.stride;
  rec.potential = prop.potential;
  rec.potential_id = prop.potential ? prop.potential_id : "none";

  const double cfl = dt * max_energy(grid, V, physics) / physics.hbar;
  if (cfl > std::numbers::pi) {
    std::ostringstream msg;
    msg << "dt * E_max / hbar = " << format_double(cfl) << " exceeds pi";
    rec.warnings.push_back(msg.str());
  }

  const double norm0 = norm(psi0);
  ComplexField state = psi0.amplitudes();
  if (prop.method == Method::CrankNicolson) {
    for (std::size_t c = 0; c < state.components(); ++c) {
      auto comp = state.component(c);
      comp[0] = comp[comp.size() - 1] = Complex(0.0, 0.0);
    }
  }
  rec.snapshots.push_back(psi0.with_amplitudes(state));

  std::optional<SplitStepper> split;
  std::optional<CrankNicolsonStepper> cn;
  if (prop.method == Method::SplitStep) {
    split.emplace(grid, V, physics, dt);
  } else {
    cn.emplace(grid, V, physics, dt);
  }
  const double t0 = psi0.time();
  for (std::size_t s = 1; s <= steps; ++s) {
    for (std::size_t c = 0; c < state.components(); ++c) {
      if (split) {
        split->step(state.component(c));
      } else {
        cn->step(state.component(c));
      }
    }
    if (s % prop.stride == 0) {
      const double t = t0 + static_cast<double>(s) * dt;
      WaveFunction snap(state, t, physics);
      const double drift = std::abs(norm(snap) - norm0) / norm0;
      if (drift > 1e-6) {
        std::ostringstream msg;
        msg << "norm drift " << drift << " at t = " << t;
        fail(ErrorKind::Unitarity, msg.str());
      }
      rec.snapshots.push_back(std::move(snap));
    }
  }
  return rec;
}

EvolutionRecord record_from_snapshots(std::vector<WaveFunction> snapshots, Method method, double dt,
                                      std::size_t stride, std::shared_ptr<const RealField> potential,
                                      std::string potential_id) {
  if (snapshots.empty()) fail(ErrorKind::Shape, "a record needs at least one snapshot");
  const double spacing = dt * static_cast<double>(stride);
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (!(snapshots[i].grid() == snapshots[0].grid())) fail(ErrorKind::Shape, "snapshots must share one grid");
    const double expected = snapshots[0].time() + static_cast<double>(i) * spacing;
    if (std::abs(snapshots[i].time() - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
      fail(ErrorKind::Validation, "snapshot times are not uniformly spaced");
    }
  }
  EvolutionRecord rec;
  rec.snapshots = std::move(snapshots);
  rec.method = method;
  rec.dt = dt;
  rec.stride = stride;
  rec.potential = std::move(potential);
  rec.potential_id = rec.potential ? std::move(potential_id) : "none";
  return rec;
}

std::vector<double> continuity_residual(const EvolutionRecord& record) {
  const std::size_t n = record.snapshots.size();
  if (n < 3) fail(ErrorKind::Shape, "continuity residual needs at least three snapshots");
  const Grid& grid = record.grid();
  const double hbar = record.physics().hbar, mass = record.physics().mass;
  const DerivativeScheme scheme = record.scheme();
  const double spacing = record.spacing();
  std::vector<double> out;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const RealField before = density(record.snapshots[i - 1]);
    const RealField after = density(record.snapshots[i + 1]);
    const ComplexField& psi = record.snapshots[i].amplitudes();
    std::vector<double> div(grid.size(), 0.0);
    for (std::size_t a = 0; a < grid.dims(); ++a) {
      const ComplexField d = derivative(psi, a, 1, scheme);
      RealField J(grid);
      for (std::size_t c = 0; c < psi.components(); ++c) {
        for (std::size_t p = 0; p < grid.size(); ++p) {
          J[p] += (hbar / mass) * std::imag(std::conj(psi.at(c, p)) * d.at(c, p));
        }
      }
      const RealField dJ = derivative(J, a, 1, scheme);
      for (std::size_t p = 0; p < grid.size(); ++p) div[p] += dJ[p];
    }
    double worst = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const double r = (after[p] - before[p]) / (2.0 * spacing) + div[p];
      worst = std::max(worst, std::abs(r));
    }
    out.push_back(worst);
  }
  return out;
}

void save_record(const EvolutionRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json meta{{"method", std::string(to_string(record.method))},
            {"dt", record.dt},
            {"stride", record.stride},
            {"potential", record.potential_id},
            {"snapshots", record.snapshots.size()},
            {"t0", record.t0()},
            {"warnings", record.warnings},
            {"grid", grid_to_json(record.grid())}};
  {
    std::ofstream out(dir / "record.json");
    if (!out) fail(ErrorKind::Configuration, "cannot write " + (dir / "record.json").string());
    out << meta.dump(2) << '\n';
  }
  if (record.potential) write_field(dir / "potential", *record.potential);
  for (std::size_t i = 0; i < record.snapshots.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "snapshot_%05zu", i);
    write_wave_function(dir / name, record.snapshots[i]);
  }
}

EvolutionRecord load_record(const std::filesystem::path& dir) {
  std::ifstream in(dir / "record.json");
  if (!in) fail(ErrorKind::Configuration, "cannot read " + (dir / "record.json").string());
  const json meta = json::parse(in);
  const std::size_t n = meta.at("snapshots").get<std::size_t>();
  std::vector<WaveFunction> snaps;
  for (std::size_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "snapshot_%05zu", i);
    snaps.push_back(read_wave_function(dir / name));
  }
  std::shared_ptr<const RealField> V;
  if (std::filesystem::exists(dir / "potential.csv")) {
    const Grid& grid = snaps.front().grid();
    std::ifstream pin(dir / "potential.csv");
    std::string line;
    std::getline(pin, line);
    std::vector<double> values;
    while (std::getline(pin, line)) values.push_back(std::stod(line.substr(line.find_last_of(',') + 1)));
    V = std::make_shared<const RealField>(grid, std::move(values));
  }
  auto rec = record_from_snapshots(std::move(snaps), parse_method(meta.at("method").get<std::string>()),
                                   meta.at("dt").get<double>(), meta.at("stride").get<std::size_t>(), V,
                                   meta.at("potential").get<std::string>());
  rec.warnings = meta.at("warnings").get<std::vector<std::string>>();
  return rec;
}

// ---------------------------------------------------------------------------
// Analytic states

Complex free_gaussian_value(const GaussianPacket& g, const Point& x, double t, const Physics& physics,
                            std::size_t dims) {
  const double hbar = physics.hbar, m = physics.mass;
  Complex value(1.0, 0.0);
  for (std::size_t a = 0; a < dims; ++a) {
    const double s = g.sigma[a];
    const Complex alpha(s * s, hbar * t / (2.0 * m));
    const double v = hbar * g.k0[a] / m;
    const double omega = hbar * g.k0[a] * g.k0[a] / (2.0 * m);
    const double u = x[a] - g.x0[a] - v * t;
    const Complex expo = -u * u / (4.0 * alpha) + Complex(0.0, g.k0[a] * (x[a] - g.x0[a]) - omega * t);
    value *= std::pow(2.0 * std::numbers::pi, -0.25) * std::sqrt(s) / std::sqrt(alpha) * std::exp(expo);
  }
  return value;
}

namespace {

void check_packet(const Grid& grid, const GaussianPacket& g) {
  for (std::size_t a = 0; a < grid.dims(); ++a) {
    if (!(g.sigma[a] > 0.0)) fail(ErrorKind::Validation, "packet width must be positive");
  }
}

ComplexField sample_gaussian(const Grid& grid, const GaussianPacket& g, double t, const Physics& physics) {
  check_packet(grid, g);
  ComplexField f(grid, 1);
  auto c = f.component(0);
  for (std::size_t p = 0; p < grid.size(); ++p) c[p] = free_gaussian_value(g, grid.point(p), t, physics, grid.dims());
  return f;
}

ComplexField normalized(const ComplexField& f) {
  const double n = std::sqrt(inner_product(f, f).real());
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorKind::DegenerateState, "analytic state has zero norm on this grid");
  ComplexField out = f;
  out *= Complex(1.0 / n, 0.0);
  return out;
}

void check_truncation(const ComplexField& f) {
  const Grid& grid = f.grid();
  const RealField rho = density(f);
  double total = 0.0;
  for (double v : rho.values()) total += v;
  for (std::size_t a = 0; a < grid.dims(); ++a) {
    const std::size_t n = grid.points(a);
    const std::size_t band = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.02 * static_cast<double>(n))));
    double edge = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const std::size_t i = grid.unravel(p)[a];
      if (i < band || i >= n - band) edge += rho[p];
    }
    if (edge > 1e-8 * total) {
      std::ostringstream msg;
      msg << "state puts " << edge / total << " of its mass in the outer 2% of axis " << a;
      fail(ErrorKind::Truncation, msg.str());
    }
  }
}

ComplexField with_spinor(const ComplexField& scalar, const Spinor& chi) {
  const double n = std::sqrt(std::norm(chi[0]) + std::norm(chi[1]));
  if (!(n > 0.0)) fail(ErrorKind::Validation, "spinor must be nonzero");
  ComplexField out(scalar.grid(), 2);
  for (std::size_t c = 0; c < 2; ++c) {
    auto dst = out.component(c);
    const auto src = scalar.component(0);
    for (std::size_t p = 0; p < src.size(); ++p) dst[p] = (chi[c] / n) * src[p];
  }
  return out;
}

}  // namespace

double branch_weight(const Grid& grid, const TwoBranch& spec, const Physics& physics) {
  StateOptions opts;
  opts.check_truncation = false;
  const WaveFunction psi = analytic_state(grid, spec, physics, opts);
  const ComplexField a = normalized(sample_gaussian(grid, spec.a, 0.0, physics));
  return std::norm(inner_product(a, psi.amplitudes()));
}

WaveFunction analytic_state(const Grid& grid, const StateSpec& spec, const Physics& physics, const StateOptions& options) {
  const double hbar = physics.hbar, m = physics.mass;
  bool packet = true;
  ComplexField f(grid, 1);
  if (const auto* s = std::get_if<PlaneWave>(&spec)) {
    packet = false;
    double k2 = 0.0;
    for (std::size_t a = 0; a < grid.dims(); ++a) k2 += s->k[a] * s->k[a];
    const double omega = hbar * k2 / (2.0 * m);
    auto c = f.component(0);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const Point x = grid.point(p);
      double phase = -omega * options.time;
      for (std::size_t a = 0; a < grid.dims(); ++a) phase += s->k[a] * x[a];
      c[p] = std::polar(1.0, phase);
    }
  } else if (const auto* s = std::get_if<HOGround>(&spec)) {
    if (!(s->omega > 0.0)) fail(ErrorKind::Validation, "oscillator frequency must be positive");
    const double e0 = 0.5 * hbar * s->omega * static_cast<double>(grid.dims());
    auto c = f.component(0);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const Point x = grid.point(p);
      double r2 = 0.0;
      for (std::size_t a = 0; a < grid.dims(); ++a) r2 += (x[a] - s->center[a]) * (x[a] - s->center[a]);
      c[p] = std::polar(std::exp(-m * s->omega * r2 / (2.0 * hbar)), -e0 * options.time / hbar);
    }
  } else if (const auto* s = std::get_if<GaussianPacket>(&spec)) {
    f = sample_gaussian(grid, *s, options.time, physics);
  } else if (const auto* s = std::get_if<EvanescentStep>(&spec)) {
    packet = false;
    if (!(s->kappa > 0.0) || !(s->k > 0.0)) fail(ErrorKind::Validation, "evanescent state needs kappa > 0 and k > 0");
    auto c = f.component(0);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const double u = grid.point(p)[0] - s->x_step;
      c[p] = u < 0.0 ? std::cos(s->k * u) - (s->kappa / s->k) * std::sin(s->k * u) : std::exp(-s->kappa * u);
    }
  } else if (const auto* s = std::get_if<TwoBranch>(&spec)) {
    if (!(s->weight_a >= 0.0 && s->weight_a <= 1.0)) fail(ErrorKind::Validation, "branch weight must lie in [0, 1]");
    const ComplexField a = normalized(sample_gaussian(grid, s->a, options.time, physics));
    const ComplexField b = normalized(sample_gaussian(grid, s->b, options.time, physics));
    const double overlap = std::abs(inner_product(a, b));
    if (overlap >= 1e-10) {
      std::ostringstream msg;
      msg << "branches overlap (" << overlap << "); they must be spatially disjoint";
      fail(ErrorKind::Configuration, msg.str());
    }
    f = std::sqrt(s->weight_a) * a + std::polar(std::sqrt(1.0 - s->weight_a), s->phase) * b;
  } else if (const auto* s = std::get_if<SpinorPair>(&spec)) {
    if (!(s->weight_a > 0.0 && s->weight_a < 1.0)) fail(ErrorKind::Validation, "spinor pair weight must lie in (0, 1)");
    const ComplexField a = normalized(sample_gaussian(grid, s->a, options.time, physics));
    const ComplexField b = normalized(sample_gaussian(grid, s->b, options.time, physics));
    ComplexField spinor = Complex(std::sqrt(s->weight_a), 0.0) * with_spinor(a, s->chi_a);
    spinor += Complex(std::sqrt(1.0 - s->weight_a), 0.0) * with_spinor(b, s->chi_b);
    if (options.check_truncation) check_truncation(spinor);
    return normalize(WaveFunction(std::move(spinor), options.time, physics));
  }
  if (packet && options.check_truncation) check_truncation(f);
  ComplexField out = normalized(f);
  if (options.chi) out = with_spinor(out, *options.chi);
  return WaveFunction(std::move(out), options.time, physics);
}

namespace {

Point point_param(const json& params, const char* key, const Point& fallback, std::size_t dims) {
  if (!params.contains(key)) return fallback;
  const json& v = params.at(key);
  Point p = fallback;
  if (v.is_number()) {
    p[0] = v.get<double>();
    if (dims > 1) p[1] = v.get<double>();
    return p;
  }
  if (!v.is_array() || v.size() != dims) {
    fail(ErrorKind::Validation, std::string("state parameter '") + key + "' needs " + std::to_string(dims) + " values");
  }
  for (std::size_t a = 0; a < dims; ++a) p[a] = v.at(a).get<double>();
  return p;
}

GaussianPacket packet_from_json(const json& params, std::size_t dims) {
  GaussianPacket g;
  g.x0 = point_param(params, "x0", g.x0, dims);
  g.sigma = point_param(params, "sigma", g.sigma, dims);
  g.k0 = point_param(params, "k0", g.k0, dims);
  return g;
}

Spinor spinor_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) fail(ErrorKind::Validation, "spinor needs two entries");
  Spinor s{};
  for (std::size_t c = 0; c < 2; ++c) {
    const json& e = j.at(c);
    if (e.is_number()) {
      s[c] = Complex(e.get<double>(), 0.0);
    } else if (e.is_array() && e.size() == 2) {
      s[c] = Complex(e.at(0).get<double>(), e.at(1).get<double>());
    } else {
      fail(ErrorKind::Validation, "spinor entries are numbers or [re, im] pairs");
    }
  }
  return s;
}

}  // namespace

StateSpec state_spec_from_json(const std::string& name, const json& params, std::size_t dims) {
  if (name == "plane_wave") {
    PlaneWave s;
    s.k = point_param(params, "k", s.k, dims);
    return s;
  }
  if (name == "ho_ground") {
    HOGround s;
    s.omega = params.value("omega", 1.0);
    s.center = point_param(params, "center", s.center, dims);
    return s;
  }
  if (name == "gaussian_packet") return packet_from_json(params, dims);
  if (name == "evanescent_step") {
    EvanescentStep s;
    s.kappa = params.value("kappa", 1.0);
    s.k = params.value("k", 1.0);
    s.x_step = params.value("x_step", 0.0);
    return s;
  }
  if (name == "two_branch") {
    if (!params.contains("a") || !params.contains("b")) fail(ErrorKind::Validation, "two_branch needs packets 'a' and 'b'");
    TwoBranch s;
    s.a = packet_from_json(params.at("a"), dims);
    s.b = packet_from_json(params.at("b"), dims);
    s.weight_a = params.value("weight_a", 0.5);
    s.phase = params.value("phase", 0.0);
    return s;
  }
  if (name == "spinor_pair") {
    if (!params.contains("a") || !params.contains("b")) fail(ErrorKind::Validation, "spinor_pair needs packets 'a' and 'b'");
    SpinorPair s;
    s.a = packet_from_json(params.at("a"), dims);
    s.b = packet_from_json(params.at("b"), dims);
    if (params.contains("chi_a")) s.chi_a = spinor_from_json(params.at("chi_a"));
    if (params.contains("chi_b")) s.chi_b = spinor_from_json(params.at("chi_b"));
    s.weight_a = params.value("weight_a", 0.5);
    return s;
  }
  fail(ErrorKind::Validation, "unknown state family '" + name + "'");
}

StateOptions state_options_from_json(const json& params) {
  StateOptions o;
  if (params.contains("chi")) o.chi = spinor_from_json(params.at("chi"));
  o.time = params.value("time", 0.0);
  return o;
}

RealField harmonic_potential(const Grid& grid, double omega, const Point& center, const Physics& physics) {
  RealField V(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Point x = grid.point(p);
    double r2 = 0.0;
    for (std::size_t a = 0; a < grid.dims(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
    V[p] = 0.5 * physics.mass * omega * omega * r2;
  }
  return V;
}

RealField step_potential(const Grid& grid, double V0, double x_step) {
  RealField V(grid);
  for (std::size_t p = 0; p < grid.size(); ++p) V[p] = grid.point(p)[0] >= x_step ? V0 : 0.0;
  return V;
}

}  // namespace bohmlab
