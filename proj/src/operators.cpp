#include "bohmlab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bohmlab/errors.hpp"
#include "bohmlab/field_io.hpp"
#include "bohmlab/interpolation.hpp"

namespace bohmlab {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Observable::Observable(Kind kind, std::optional<DerivativeScheme> scheme) : kind_(std::move(kind)), scheme_(scheme) {
  if (const auto* s = std::get_if<SpinComponent>(&kind_)) {
    const double len = std::sqrt(s->n[0] * s->n[0] + s->n[1] * s->n[1] + s->n[2] * s->n[2]);
    if (std::abs(len - 1.0) > 1e-12) fail(ErrorKind::Validation, "spin direction must be a unit vector");
  }
  if (const auto* s = std::get_if<Scaled>(&kind_)) {
    if (!s->inner) fail(ErrorKind::Validation, "scaled observable has no operand");
    if (!std::isfinite(s->c)) fail(ErrorKind::Validation, "scaled observable needs a finite real factor");
  }
  if (const auto* s = std::get_if<Sum>(&kind_)) {
    if (s->terms.empty()) fail(ErrorKind::Validation, "sum observable has no terms");
  }
  if (const auto* p = std::get_if<PotentialField>(&kind_)) {
    if (!p->V) fail(ErrorKind::Validation, "potential observable has no field");
  }
}

Observable Observable::position(std::size_t axis) { return Observable(PositionAxis{axis}); }
Observable Observable::momentum(std::size_t axis, std::optional<DerivativeScheme> scheme) {
  return Observable(MomentumAxis{axis}, scheme);
}
Observable Observable::kinetic(std::optional<DerivativeScheme> scheme) { return Observable(Kinetic{}, scheme); }
Observable Observable::potential(std::shared_ptr<const RealField> V, std::string id) {
  return Observable(PotentialField{std::move(V), std::move(id)});
}
Observable Observable::hamiltonian(std::shared_ptr<const RealField> V, std::optional<DerivativeScheme> scheme,
                                   std::string id) {
  return Observable(Hamiltonian{std::move(V), std::move(id)}, scheme);
}
Observable Observable::spin(std::array<double, 3> n) { return Observable(SpinComponent{n}); }
Observable Observable::scaled(double c, Observable inner) {
  return Observable(Scaled{c, std::make_shared<const Observable>(std::move(inner))});
}
Observable Observable::sum(std::vector<Observable> terms) {
  Sum s;
  for (auto& t : terms) s.terms.push_back(std::make_shared<const Observable>(std::move(t)));
  return Observable(std::move(s));
}

Observable Observable::with_scheme(DerivativeScheme scheme) const {
  Observable copy = *this;
  copy.scheme_ = scheme;
  return copy;
}

std::string Observable::id() const {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const PositionAxis& k) { out << "position[" << k.axis << "]"; },
                 [&](const MomentumAxis& k) { out << "momentum[" << k.axis << "]"; },
                 [&](const Kinetic&) { out << "kinetic"; },
                 [&](const PotentialField& k) { out << "potential(" << k.id << ")"; },
                 [&](const Hamiltonian& k) { out << (k.V ? "hamiltonian(" + k.id + ")" : std::string("hamiltonian")); },
                 [&](const SpinComponent& k) {
                   out << "spin(" << format_double(k.n[0]) << "," << format_double(k.n[1]) << ","
                       << format_double(k.n[2]) << ")";
                 },
                 [&](const Scaled& k) { out << format_double(k.c) << "*(" << k.inner->id() << ")"; },
                 [&](const Sum& k) {
                   for (std::size_t i = 0; i < k.terms.size(); ++i) out << (i ? "+" : "") << k.terms[i]->id();
                 },
             },
             kind_);
  if (scheme_) out << "@" << to_string(*scheme_);
  return out.str();
}

bool Observable::acts_on_spin() const {
  return std::visit(Overloaded{
                        [](const SpinComponent&) { return true; },
                        [](const Scaled& k) { return k.inner->acts_on_spin(); },
                        [](const Sum& k) {
                          return std::any_of(k.terms.begin(), k.terms.end(),
                                             [](const ObservablePtr& t) { return t->acts_on_spin(); });
                        },
                        [](const auto&) { return false; },
                    },
                    kind_);
}

bool Observable::needs_derivatives() const {
  return std::visit(Overloaded{
                        [](const MomentumAxis&) { return true; },
                        [](const Kinetic&) { return true; },
                        [](const Hamiltonian&) { return true; },
                        [](const Scaled& k) { return k.inner->needs_derivatives(); },
                        [](const Sum& k) {
                          return std::any_of(k.terms.begin(), k.terms.end(),
                                             [](const ObservablePtr& t) { return t->needs_derivatives(); });
                        },
                        [](const auto&) { return false; },
                    },
                    kind_);
}

json to_json(const Observable& A) {
  json j = std::visit(Overloaded{
                          [](const PositionAxis& k) { return json{{"kind", "position"}, {"axis", k.axis}}; },
                          [](const MomentumAxis& k) { return json{{"kind", "momentum"}, {"axis", k.axis}}; },
                          [](const Kinetic&) { return json{{"kind", "kinetic"}}; },
                          [](const PotentialField& k) { return json{{"kind", "potential"}, {"potential", k.id}}; },
                          [](const Hamiltonian& k) {
                            json h{{"kind", "hamiltonian"}};
                            if (k.V) h["potential"] = k.id;
                            return h;
                          },
                          [](const SpinComponent& k) { return json{{"kind", "spin"}, {"n", k.n}}; },
                          [](const Scaled& k) { return json{{"kind", "scaled"}, {"c", k.c}, {"of", to_json(*k.inner)}}; },
                          [](const Sum& k) {
                            json terms = json::array();
                            for (const auto& t : k.terms) terms.push_back(to_json(*t));
                            return json{{"kind", "sum"}, {"terms", terms}};
                          },
                      },
                      A.kind());
  if (A.scheme()) j["scheme"] = std::string(to_string(*A.scheme()));
  return j;
}

Observable observable_from_json(const json& j, const PotentialBinding& potential) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    fail(ErrorKind::Validation, "observable descriptor needs a string 'kind'");
  }
  const std::string kind = j.at("kind").get<std::string>();
  std::optional<DerivativeScheme> scheme;
  if (j.contains("scheme")) scheme = parse_scheme(j.at("scheme").get<std::string>());
  auto axis = [&]() -> std::size_t {
    if (!j.contains("axis")) return 0;
    const long a = j.at("axis").get<long>();
    if (a < 0 || a >= static_cast<long>(kMaxDims)) fail(ErrorKind::Validation, "observable axis out of range");
    return static_cast<std::size_t>(a);
  };
  Observable out = [&]() -> Observable {
    if (kind == "position") return Observable::position(axis());
    if (kind == "momentum") return Observable::momentum(axis());
    if (kind == "kinetic") return Observable::kinetic();
    if (kind == "potential") {
      if (!potential.field) fail(ErrorKind::Validation, "potential observable requires a scenario potential");
      return Observable::potential(potential.field, potential.id);
    }
    if (kind == "hamiltonian") return Observable::hamiltonian(potential.field, std::nullopt, potential.id);
    if (kind == "spin") {
      std::array<double, 3> n{0.0, 0.0, 1.0};
      if (j.contains("n")) n = j.at("n").get<std::array<double, 3>>();
      return Observable::spin(n);
    }
    if (kind == "scaled") {
      if (!j.contains("of") || !j.contains("c")) fail(ErrorKind::Validation, "scaled observable needs 'c' and 'of'");
      return Observable::scaled(j.at("c").get<double>(), observable_from_json(j.at("of"), potential));
    }
    if (kind == "sum") {
      if (!j.contains("terms") || !j.at("terms").is_array()) fail(ErrorKind::Validation, "sum observable needs 'terms'");
      std::vector<Observable> terms;
      for (const auto& t : j.at("terms")) terms.push_back(observable_from_json(t, potential));
      return Observable::sum(std::move(terms));
    }
    fail(ErrorKind::Validation, "unknown observable kind '" + kind + "'");
  }();
  return scheme ? out.with_scheme(*scheme) : out;
}

namespace {

void check_node(const Observable& A, const Grid& grid, std::size_t components, std::optional<DerivativeScheme> inherited) {
  const auto scheme = A.scheme() ? A.scheme() : inherited;
  std::visit(Overloaded{
                 [&](const PositionAxis& k) {
                   if (k.axis >= grid.dims()) fail(ErrorKind::Shape, "position axis beyond grid dimension");
                 },
                 [&](const MomentumAxis& k) {
                   if (k.axis >= grid.dims()) fail(ErrorKind::Shape, "momentum axis beyond grid dimension");
                   resolve_scheme(grid, scheme);
                 },
                 [&](const Kinetic&) { resolve_scheme(grid, scheme); },
                 [&](const PotentialField& k) {
                   if (!(k.V->grid() == grid)) fail(ErrorKind::Shape, "potential lives on a different grid");
                 },
                 [&](const Hamiltonian& k) {
                   resolve_scheme(grid, scheme);
                   if (k.V && !(k.V->grid() == grid)) fail(ErrorKind::Shape, "potential lives on a different grid");
                 },
                 [&](const SpinComponent&) {
                   if (components != 2) fail(ErrorKind::Shape, "spin observables need a two-component wave function");
                 },
                 [&](const Scaled& k) { check_node(*k.inner, grid, components, scheme); },
                 [&](const Sum& k) {
                   for (const auto& t : k.terms) check_node(*t, grid, components, scheme);
                 },
             },
             A.kind());
}

void flatten(const Observable& A, double coef, std::optional<DerivativeScheme> inherited, double hbar, LocalForm& form) {
  const auto scheme = A.scheme() ? A.scheme() : inherited;
  std::visit(Overloaded{
                 [&](const PositionAxis& k) { form.position[k.axis] += coef; },
                 [&](const SpinComponent& k) {
                   const SpinMatrix m = spin_matrix(k.n, hbar);
                   for (int r = 0; r < 2; ++r) {
                     for (int c = 0; c < 2; ++c) form.spin[r][c] += coef * m[r][c];
                   }
                   form.has_spin = true;
                 },
                 [&](const Scaled& k) { flatten(*k.inner, coef * k.c, scheme, hbar, form); },
                 [&](const Sum& k) {
                   for (const auto& t : k.terms) flatten(*t, coef, scheme, hbar, form);
                 },
                 [&](const auto&) {
                   Observable leaf = A;
                   if (scheme) leaf = leaf.with_scheme(*scheme);
                   form.grid_terms.push_back({coef, std::move(leaf)});
                 },
             },
             A.kind());
}

// Grid leaves only: momentum, kinetic, potential, Hamiltonian.
ComplexField apply_leaf(const Observable& leaf, const ComplexField& f, const Physics& physics) {
  const Grid& grid = f.grid();
  const double hbar = physics.hbar;
  auto kinetic = [&](DerivativeScheme s) {
    ComplexField out = laplacian(f, s);
    out *= Complex(-hbar * hbar / (2.0 * physics.mass), 0.0);
    return out;
  };
  auto add_potential = [&](ComplexField& out, const RealField& V) {
    for (std::size_t c = 0; c < f.components(); ++c) {
      auto dst = out.component(c);
      const auto src = f.component(c);
      for (std::size_t p = 0; p < grid.size(); ++p) dst[p] += V[p] * src[p];
    }
  };
  return std::visit(Overloaded{
                        [&](const MomentumAxis& k) {
                          ComplexField out = derivative(f, k.axis, 1, resolve_scheme(grid, leaf.scheme()));
                          out *= Complex(0.0, -hbar);
                          return out;
                        },
                        [&](const Kinetic&) { return kinetic(resolve_scheme(grid, leaf.scheme())); },
                        [&](const PotentialField& k) {
                          ComplexField out(grid, f.components());
                          add_potential(out, *k.V);
                          return out;
                        },
                        [&](const Hamiltonian& k) {
                          ComplexField out = kinetic(resolve_scheme(grid, leaf.scheme()));
                          if (k.V) add_potential(out, *k.V);
                          return out;
                        },
                        [&](const auto&) -> ComplexField {
                          fail(ErrorKind::UnsupportedOperation, "not a grid operator: " + leaf.id());
                        },
                    },
                    leaf.kind());
}

Spinor apply_spin(const SpinMatrix& m, const Spinor& f) {
  return {m[0][0] * f[0] + m[0][1] * f[1], m[1][0] * f[0] + m[1][1] * f[1]};
}

double max_density(const ComplexField& f) {
  double m = 0.0;
  const RealField rho = density(f);
  for (double v : rho.values()) m = std::max(m, v);
  return m;
}

Complex hermitian(const Spinor& a, const Spinor& b, std::size_t components) {
  Complex acc{0.0, 0.0};
  for (std::size_t c = 0; c < components; ++c) acc += std::conj(a[c]) * b[c];
  return acc;
}

}  // namespace

SpinMatrix spin_matrix(const std::array<double, 3>& n, double hbar) {
  const double h = 0.5 * hbar;
  return SpinMatrix{{{Complex(h * n[2], 0.0), Complex(h * n[0], -h * n[1])},
                     {Complex(h * n[0], h * n[1]), Complex(-h * n[2], 0.0)}}};
}

void check_compatible(const Observable& A, const Grid& grid, std::size_t components) {
  check_node(A, grid, components, std::nullopt);
}

LocalForm local_form(const Observable& A, std::size_t dims, double hbar) {
  LocalForm form;
  form.dims = dims;
  flatten(A, 1.0, std::nullopt, hbar, form);
  return form;
}

bool has_grid_part(const LocalForm& form) { return !form.grid_terms.empty(); }

ComplexField apply_grid_part(const LocalForm& form, const ComplexField& field, const Physics& physics) {
  ComplexField out(field.grid(), field.components());
  for (const auto& term : form.grid_terms) {
    ComplexField part = apply_leaf(term.leaf, field, physics);
    if (term.coef != 1.0) part *= Complex(term.coef, 0.0);
    out += part;
  }
  return out;
}

Spinor complete_local(const LocalForm& form, const Point& q, const Spinor& grid_part, const Spinor& f,
                      std::size_t components) {
  double x = 0.0;
  for (std::size_t a = 0; a < form.dims; ++a) x += form.position[a] * q[a];
  Spinor out{};
  for (std::size_t c = 0; c < components; ++c) out[c] = grid_part[c] + x * f[c];
  if (form.has_spin) {
    const Spinor s = apply_spin(form.spin, f);
    out[0] += s[0];
    out[1] += s[1];
  }
  return out;
}

ComplexField apply(const Observable& A, const ComplexField& field, const Physics& physics) {
  const Grid& grid = field.grid();
  check_compatible(A, grid, field.components());
  const LocalForm form = local_form(A, grid.dims(), physics.hbar);
  ComplexField out = apply_grid_part(form, field, physics);
  const bool has_position = std::any_of(form.position.begin(), form.position.end(), [](double c) { return c != 0.0; });
  if (!has_position && !form.has_spin) return out;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    Spinor f{}, g{};
    for (std::size_t c = 0; c < field.components(); ++c) {
      f[c] = field.at(c, p);
      g[c] = out.at(c, p);
    }
    const Spinor r = complete_local(form, grid.point(p), g, f, field.components());
    for (std::size_t c = 0; c < field.components(); ++c) out.at(c, p) = r[c];
  }
  return out;
}

ComplexField apply(const Observable& A, const WaveFunction& psi) { return apply(A, psi.amplitudes(), psi.physics()); }

void require_not_node(double rho, double rho_max, const std::string& where) {
  if (!(rho > kNodeThreshold * rho_max)) {
    std::ostringstream msg;
    msg << where << ": density " << rho << " at or below the node threshold (" << kNodeThreshold << " x max)";
    fail(ErrorKind::Node, msg.str());
  }
}

PointSample sample_point(const Observable& A, const WaveFunction& psi, const Point& Q) {
  const Grid& grid = psi.grid();
  check_compatible(A, grid, psi.components());
  const LocalForm form = local_form(A, grid.dims(), psi.hbar());
  const Point q = grid.wrap(Q);
  const SpatialStencil st = spatial_stencil(grid, q);
  PointSample s;
  s.components = psi.components();
  for (std::size_t c = 0; c < s.components; ++c) {
    s.psi[c] = apply_stencil<Complex>(psi.amplitudes().component(c), st);
    s.rho += std::norm(s.psi[c]);
  }
  s.rho_max = max_density(psi.amplitudes());
  Spinor g{};
  if (has_grid_part(form)) {
    const ComplexField gf = apply_grid_part(form, psi.amplitudes(), psi.physics());
    for (std::size_t c = 0; c < s.components; ++c) g[c] = apply_stencil<Complex>(gf.component(c), st);
  }
  // The position factor uses Q itself, so unwrapped coordinates pass through.
  s.a_psi = complete_local(form, Q, g, s.psi, s.components);
  return s;
}

ActualValueVerdict eigen_verdict(const PointSample& s, const EigenTolerance& tol) {
  require_not_node(s.rho, s.rho_max, "local eigencondition");
  ActualValueVerdict v;
  v.tolerance = tol;
  v.rho_at_Q = s.rho;
  v.ratio = complex_weak_value(s);
  const double mag = std::abs(v.ratio);
  v.imag_fraction = mag > 0.0 ? std::abs(v.ratio.imag()) / mag : 0.0;
  bool holds = std::abs(v.ratio.imag()) <= tol.tol * (mag + tol.abs_floor);
  if (holds && s.components == 2) {
    // For spinors the eigencondition is a vector statement: (A psi)(Q) = lambda psi(Q).
    const double lambda = v.ratio.real();
    double resid = 0.0, scale = 0.0;
    for (std::size_t c = 0; c < 2; ++c) {
      resid = std::max(resid, std::abs(s.a_psi[c] - lambda * s.psi[c]));
      scale = std::max(scale, std::abs(s.a_psi[c]));
    }
    holds = resid <= tol.tol * (scale + tol.abs_floor * std::sqrt(s.rho));
  }
  v.holds = holds;
  if (holds) v.lambda = v.ratio.real();
  return v;
}

ActualValueVerdict local_eigen_check(const Observable& A, const WaveFunction& psi, const Point& Q,
                                     const EigenTolerance& tol) {
  return eigen_verdict(sample_point(A, psi, Q), tol);
}

double weak_actual_value_real_part(const PointSample& s) {
  double num = 0.0, den = 0.0;
  for (std::size_t c = 0; c < s.components; ++c) {
    num += s.psi[c].real() * s.a_psi[c].real() + s.psi[c].imag() * s.a_psi[c].imag();
    den += std::norm(s.psi[c]);
  }
  return num / den;
}

Complex complex_weak_value(const PointSample& s) {
  if (s.components == 1) return s.a_psi[0] / s.psi[0];
  return hermitian(s.psi, s.a_psi, s.components) / hermitian(s.psi, s.psi, s.components).real();
}

WeakValueRecord weak_value(const PointSample& s, const std::string& observable) {
  require_not_node(s.rho, s.rho_max, "weak value of " + observable);
  WeakValueRecord r;
  r.a_w = weak_actual_value_real_part(s);
  r.A_w = complex_weak_value(s);
  r.rho_at_Q = s.rho;
  r.observable = observable;
  r.spinor_extension = s.components == 2;
  return r;
}

WeakValueRecord weak_actual_value(const Observable& A, const WaveFunction& psi, const Point& Q) {
  return weak_value(sample_point(A, psi, Q), A.id());
}

Complex postselected_weak_value(const PointSample& s, const Spinor& chi) {
  const Complex den = hermitian(chi, s.psi, s.components);
  if (std::abs(den) == 0.0) fail(ErrorKind::Node, "post-selected state is orthogonal to psi(Q)");
  return hermitian(chi, s.a_psi, s.components) / den;
}

Expectation expectation(const Observable& A, const WaveFunction& psi) {
  const Complex z = inner_product(psi.amplitudes(), apply(A, psi));
  if (std::abs(z.imag()) > 1e-6 * std::max(1.0, std::abs(z.real()))) {
    std::ostringstream msg;
    msg << "<psi|" << A.id() << "|psi> has imaginary part " << z.imag();
    fail(ErrorKind::SelfAdjointness, msg.str());
  }
  return Expectation{z.real(), z.imag()};
}

Complex extrapolate_limit(const std::vector<Complex>& z) {
  const std::size_t n = z.size();
  if (n == 0) fail(ErrorKind::Shape, "empty sequence");
  // Polynomial in x = 1/m through m = n, n/2, n/4, ... evaluated at x = 0.
  std::vector<std::size_t> m;
  for (std::size_t k = n; k >= 1 && m.size() < 5; k /= 2) m.push_back(k);
  if (m.size() < 3) return z.back();
  Complex L{0.0, 0.0};
  for (std::size_t i = 0; i < m.size(); ++i) {
    double w = 1.0;
    const double xi = 1.0 / static_cast<double>(m[i]);
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j == i) continue;
      const double xj = 1.0 / static_cast<double>(m[j]);
      w *= xj / (xj - xi);
    }
    L += w * z[m[i] - 1];
  }
  return L;
}

ProbeResult robustness_probe(const Observable& A, const WaveFunction& psi, const Point& Q, double gamma,
                             std::size_t n_max, double epsilon) {
  const auto* mom = std::get_if<MomentumAxis>(&A.kind());
  if (!mom) fail(ErrorKind::UnsupportedOperation, "robustness probes are built for momentum observables");
  if (psi.components() != 1) fail(ErrorKind::UnsupportedOperation, "robustness probes need a scalar wave function");
  if (n_max < 1) fail(ErrorKind::Validation, "n_max must be positive");
  const Grid& grid = psi.grid();
  check_compatible(A, grid, 1);
  const std::size_t axis = mom->axis;
  const double hbar = psi.hbar();
  if (epsilon <= 0.0) epsilon = 10.0 * grid.spacing(axis);
  const Point q = grid.wrap(Q);
  for (std::size_t a = 0; a < grid.dims(); ++a) {
    if (2.0 * epsilon >= grid.length(a)) fail(ErrorKind::Configuration, "bump support exceeds the grid");
    if (!grid.periodic() && (q[a] - epsilon < grid.min(a) || q[a] + epsilon > grid.max(a))) {
      fail(ErrorKind::Configuration, "bump support leaves the Box grid");
    }
  }

  const PointSample base = sample_point(A, psi, q);
  require_not_node(base.rho, base.rho_max, "robustness probe");
  ProbeResult r;
  r.epsilon = epsilon;
  r.base_ratio = base.a_psi[0] / base.psi[0];
  r.target = Complex(r.base_ratio.real(), gamma);

  // Bump and offsets use the minimum image on periodic grids.
  std::vector<double> eta(grid.size()), offset(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Point x = grid.point(p);
    double r2 = 0.0;
    for (std::size_t a = 0; a < grid.dims(); ++a) {
      double d = x[a] - q[a];
      if (grid.periodic()) d = std::remainder(d, grid.length(a));
      r2 += d * d;
      if (a == axis) offset[p] = d;
    }
    const double s = r2 / (epsilon * epsilon);
    eta[p] = s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s)) : 0.0;
  }

  const SpatialStencil st = spatial_stencil(grid, q);
  auto build = [&](Complex b) {
    ComplexField phi(grid, 1);
    auto c = phi.component(0);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      if (eta[p] != 0.0) c[p] = eta[p] * base.psi[0] * std::exp(Complex(0.0, 1.0) * b * offset[p]);
    }
    return phi;
  };
  // The discrete derivative of the bump is not exactly i b phi at Q; correct b until it is.
  Complex b = r.target / hbar;
  ComplexField phi = build(b);
  ComplexField a_phi = apply(A, phi, psi.physics());
  for (int it = 0; it < 8; ++it) {
    const Complex achieved = apply_stencil<Complex>(a_phi.component(0), st) / apply_stencil<Complex>(phi.component(0), st);
    if (std::abs(achieved - r.target) <= 1e-14 * std::max(1.0, std::abs(r.target))) break;
    b += (r.target - achieved) / hbar;
    phi = build(b);
    a_phi = apply(A, phi, psi.physics());
  }
  r.b = b;
  const Complex phi_Q = apply_stencil<Complex>(phi.component(0), st);
  const Complex a_phi_Q = apply_stencil<Complex>(a_phi.component(0), st);
  r.achieved = a_phi_Q / phi_Q;

  // psi_n and A psi_n are linear in 1/n, so point values follow from the two fields.
  r.ratios.reserve(n_max);
  for (std::size_t n = 1; n <= n_max; ++n) {
    const double inv = 1.0 / static_cast<double>(n);
    r.ratios.push_back((base.a_psi[0] + inv * a_phi_Q) / (base.psi[0] + inv * phi_Q));
  }
  r.limit = extrapolate_limit(r.ratios);
  return r;
}

}  // namespace bohmlab
