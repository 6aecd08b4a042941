#include "bohmlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "bohmlab/errors.hpp"
#include "bohmlab/parallel.hpp"

namespace bohmlab {

using nlohmann::json;

namespace {

FieldRequest terms_request(const Observable& A) {
  FieldRequest r;
  r.second_derivatives = true;
  r.hamiltonian = true;
  r.observable = A;
  return r;
}

Complex hermitian(const Spinor& a, const Spinor& b, std::size_t components) {
  Complex acc{0.0, 0.0};
  for (std::size_t c = 0; c < components; ++c) acc += std::conj(a[c]) * b[c];
  return acc;
}

}  // namespace

TermsEvaluator::TermsEvaluator(const EvolutionRecord& record, const Observable& A)
    : A_(A), fields_(record, terms_request(A)), form_(*fields_.form()) {}

WeakValueRecord TermsEvaluator::weak_value(const Point& Q, double t) const {
  const LocalJet jet = fields_.at(Q, t);
  return bohmlab::weak_value(jet_sample(jet, form_, Q), A_.id());
}

EvolutionTerms TermsEvaluator::rhs(const Point& Q, double t) const {
  const LocalJet jet = fields_.at(Q, t);
  const Physics& ph = fields_.physics();
  const PointSample s = jet_sample(jet, form_, Q);
  const WeakValueRecord w = bohmlab::weak_value(s, A_.id());
  const std::size_t nc = jet.components;
  const double rho = jet.rho;

  EvolutionTerms out;
  out.t = t;
  out.a_w = w.a_w;
  // Re[z / i hbar] = Im z / hbar
  const Complex bracket = hermitian(jet.psi, jet_a_h_psi(jet, form_, Q), nc) - hermitian(jet.h_psi, s.a_psi, nc);
  out.quantum_dynamical = bracket.imag() / ph.hbar / rho;

  const Point v = jet_velocity(jet, ph);
  double conv = 0.0;
  for (std::size_t b = 0; b < jet.dims; ++b) {
    const Complex grad = hermitian(jet.d1[b], s.a_psi, nc) + hermitian(jet.psi, jet_grad_a_psi(jet, form_, Q, b), nc);
    conv += v[b] * grad.real();
  }
  out.convective = conv / rho;
  out.divergence_correction = w.a_w * jet_divergence(jet, ph);
  out.rhs_total = out.quantum_dynamical + out.convective + out.divergence_correction;
  return out;
}

EvolutionTerms TermsEvaluator::terms(const Trajectory& traj, std::size_t i) const {
  if (i == 0 || i + 1 >= traj.samples.size()) {
    fail(ErrorKind::Endpoint, "evolution terms need samples on both sides (index " + std::to_string(i) + ")");
  }
  const auto& prev = traj.samples[i - 1];
  const auto& here = traj.samples[i];
  const auto& next = traj.samples[i + 1];
  EvolutionTerms out = rhs(here.Q, here.t);
  const double a_prev = weak_value(prev.Q, prev.t).a_w;
  const double a_next = weak_value(next.Q, next.t).a_w;
  out.lhs_fd = (a_next - a_prev) / (next.t - prev.t);
  out.residual = std::abs(out.lhs_fd - out.rhs_total);
  return out;
}

std::vector<std::optional<WeakValueRecord>> aw_along(const Trajectory& traj, const TermsEvaluator& eval) {
  std::vector<std::optional<WeakValueRecord>> out(traj.samples.size());
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    try {
      out[i] = eval.weak_value(traj.samples[i].Q, traj.samples[i].t);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Node) throw;
    }
  }
  return out;
}

std::vector<std::optional<WeakValueRecord>> aw_along(const Trajectory& traj, const EvolutionRecord& record,
                                                     const Observable& A) {
  return aw_along(traj, TermsEvaluator(record, A));
}

EvolutionTerms evolution_terms(const Trajectory& traj, const EvolutionRecord& record, const Observable& A,
                               std::size_t sample_index) {
  return TermsEvaluator(record, A).terms(traj, sample_index);
}

double time_dependent_correction(const std::function<Observable(double)>& dA_dt, const WaveFunction& psi,
                                 const Point& Q) {
  const Observable dA = dA_dt(psi.time());
  return weak_actual_value(dA, psi, Q).a_w;
}

// ---------------------------------------------------------------------------
// Scripted verification cases

const std::vector<std::string>& verify_case_names() {
  static const std::vector<std::string> names{"plane_wave_position", "plane_wave_momentum", "plane_wave_energy",
                                              "ho_ground_position",  "ho_ground_momentum",  "spin_separable"};
  return names;
}

namespace {

constexpr std::size_t kVerifyPoints = 1024;
constexpr double kVerifyDt = 0.01;
constexpr std::size_t kVerifyStride = 1;
constexpr double kTermTolerance = 1e-6;
constexpr std::size_t kVerifySteps = 200;
constexpr double kResidualTolerance = 1e-6;

struct CaseSetup {
  EvolutionRecord record;
  Observable A;
  Point Q0{};
  double term_tolerance = kTermTolerance;
  // Expected values at a trajectory sample.
  std::function<EvolutionTerms(const TrajectorySample&)> expected;
};

EvolutionTerms constant_terms(double t, double a_w) {
  EvolutionTerms e;
  e.t = t;
  e.a_w = a_w;
  return e;
}

CaseSetup plane_wave_case(const std::string& name) {
  const Physics ph;
  const Grid grid = Grid::line(0.0, 20.0, kVerifyPoints, Boundary::Periodic);
  const double k = 2.0 * std::numbers::pi * 3.0 / grid.length(0);
  const WaveFunction psi = analytic_state(grid, PlaneWave{{k, 0.0}}, ph);
  Propagator prop;
  prop.dt = kVerifyDt;
  prop.stride = kVerifyStride;
  EvolutionRecord rec = evolve(psi, prop, kVerifySteps);
  const double v = ph.hbar * k / ph.mass;
  const double Q0 = 1.0;
  if (name == "plane_wave_position") {
    return {std::move(rec), Observable::position(0), {Q0, 0.0}, kTermTolerance, [=](const TrajectorySample& s) {
              EvolutionTerms e = constant_terms(s.t, Q0 + v * s.t);
              e.convective = v;
              e.rhs_total = v;
              e.lhs_fd = v;
              return e;
            }};
  }
  if (name == "plane_wave_momentum") {
    return {std::move(rec), Observable::momentum(0), {Q0, 0.0}, kTermTolerance,
            [=](const TrajectorySample& s) { return constant_terms(s.t, ph.hbar * k); }};
  }
  const double E = ph.hbar * ph.hbar * k * k / (2.0 * ph.mass);
  return {std::move(rec), Observable::hamiltonian(nullptr), {Q0, 0.0}, kTermTolerance,
          [=](const TrajectorySample& s) { return constant_terms(s.t, E); }};
}

CaseSetup ho_case(const std::string& name) {
  const Physics ph;
  const Grid grid = Grid::line(-16.0, 16.0, kVerifyPoints, Boundary::Periodic);
  const double omega = 1.0;
  auto V = std::make_shared<const RealField>(harmonic_potential(grid, omega, {0.0, 0.0}, ph));
  const WaveFunction psi = analytic_state(grid, HOGround{omega, {0.0, 0.0}}, ph);
  Propagator prop;
  prop.dt = kVerifyDt;
  prop.stride = kVerifyStride;
  prop.potential = V;
  prop.potential_id = "harmonic";
  EvolutionRecord rec = evolve(psi, prop, kVerifySteps);
  Observable A = name == "ho_ground_position" ? Observable::position(0) : Observable::momentum(0);
  return {std::move(rec), std::move(A), {0.0, 0.0}, kTermTolerance,
          [](const TrajectorySample& s) { return constant_terms(s.t, 0.0); }};
}

CaseSetup spin_case() {
  const Physics ph;
  const Grid grid = Grid::line(-20.0, 20.0, kVerifyPoints, Boundary::Periodic);
  const GaussianPacket g{{-5.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}};
  const Spinor chi{Complex(0.8, 0.0), Complex(0.0, 0.6)};
  StateOptions opts;
  opts.chi = chi;
  const WaveFunction psi = analytic_state(grid, g, ph, opts);
  Propagator prop;
  prop.dt = kVerifyDt;
  prop.stride = kVerifyStride;
  EvolutionRecord rec = evolve(psi, prop, kVerifySteps);
  const double a_w = 0.5 * ph.hbar * (std::norm(chi[0]) - std::norm(chi[1])) / (std::norm(chi[0]) + std::norm(chi[1]));
  // Free-packet density and velocity field in closed form.
  auto expected = [=](const TrajectorySample& s) {
    const double sigma = g.sigma[0];
    const double rate = ph.hbar / (2.0 * ph.mass * sigma * sigma);
    const double tau = rate * s.t;
    const double div = rate * tau / (1.0 + tau * tau);
    const double v0 = ph.hbar * g.k0[0] / ph.mass;
    const double u = s.Q[0] - g.x0[0] - v0 * s.t;
    const double v = v0 + u * div;
    const double dlogrho = -u / (sigma * sigma * (1.0 + tau * tau));
    EvolutionTerms e = constant_terms(s.t, a_w);
    e.quantum_dynamical = a_w * (-div - v * dlogrho);
    e.convective = a_w * v * dlogrho;
    e.divergence_correction = a_w * div;
    return e;
  };
  return {std::move(rec), Observable::spin({0.0, 0.0, 1.0}), {g.x0[0] + 0.5, 0.0}, kTermTolerance, expected};
}

VerifyCheck check(const std::string& name, double measured, double expected, double tol) {
  return VerifyCheck{name, measured, expected, tol, std::abs(measured - expected) <= tol};
}

}  // namespace

VerifyReport verify_case(const std::string& name) {
  CaseSetup setup = [&]() -> CaseSetup {
    if (name.rfind("plane_wave_", 0) == 0 &&
        (name == "plane_wave_position" || name == "plane_wave_momentum" || name == "plane_wave_energy")) {
      return plane_wave_case(name);
    }
    if (name == "ho_ground_position" || name == "ho_ground_momentum") return ho_case(name);
    if (name == "spin_separable") return spin_case();
    fail(ErrorKind::Validation, "unknown verification case '" + name + "'");
  }();

  const TermsEvaluator eval(setup.record, setup.A);
  TrajectoryOptions opts;
  const Trajectory traj = integrate_trajectory(eval.fields(), setup.Q0, opts);

  VerifyReport rep;
  rep.name = name;
  rep.observable = setup.A.id();
  rep.residual_tolerance = kResidualTolerance;
  rep.term_tolerance = setup.term_tolerance;
  if (!traj.completed() || traj.samples.size() < 3) {
    rep.checks.push_back(VerifyCheck{"trajectory_completed", 0.0, 1.0, 0.0, false});
    rep.pass = false;
    return rep;
  }
  const std::size_t n = traj.samples.size();
  std::vector<EvolutionTerms> all(n);
  parallel_for(n - 2, [&](std::size_t k) { all[k + 1] = eval.terms(traj, k + 1); });
  double worst_term = 0.0;
  EvolutionTerms worst_measured, worst_expected;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    rep.max_residual = std::max(rep.max_residual, all[i].residual);
    const EvolutionTerms e = setup.expected(traj.samples[i]);
    const double dev = std::max({std::abs(all[i].quantum_dynamical - e.quantum_dynamical),
                                 std::abs(all[i].convective - e.convective),
                                 std::abs(all[i].divergence_correction - e.divergence_correction)});
    if (i == 1 || dev > worst_term) {
      worst_term = dev;
      worst_measured = all[i];
      worst_expected = e;
    }
  }
  const std::size_t mid = n / 2;
  rep.terms = all[mid];
  rep.expected = setup.expected(traj.samples[mid]);
  rep.expected.rhs_total = rep.expected.quantum_dynamical + rep.expected.convective + rep.expected.divergence_correction;
  rep.expected.lhs_fd = rep.expected.rhs_total;

  const double tol = setup.term_tolerance;
  rep.checks.push_back(check("a_w", rep.terms.a_w, rep.expected.a_w, tol));
  rep.checks.push_back(check("quantum_dynamical", rep.terms.quantum_dynamical, rep.expected.quantum_dynamical, tol));
  rep.checks.push_back(check("convective", rep.terms.convective, rep.expected.convective, tol));
  rep.checks.push_back(
      check("divergence_correction", rep.terms.divergence_correction, rep.expected.divergence_correction, tol));
  rep.checks.push_back(check("lhs_fd", rep.terms.lhs_fd, rep.expected.lhs_fd, tol));
  rep.checks.push_back(check("worst_term_deviation", worst_term, 0.0, tol));
  rep.checks.push_back(check("max_residual", rep.max_residual, 0.0, kResidualTolerance));
  rep.pass = std::all_of(rep.checks.begin(), rep.checks.end(), [](const VerifyCheck& c) { return c.pass; });
  return rep;
}

json to_json(const EvolutionTerms& t) {
  return json{{"t", t.t},
              {"a_w", t.a_w},
              {"quantum_dynamical", t.quantum_dynamical},
              {"convective", t.convective},
              {"divergence_correction", t.divergence_correction},
              {"rhs_total", t.rhs_total},
              {"lhs_fd", t.lhs_fd},
              {"residual", t.residual}};
}

json to_json(const VerifyReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back(json{{"name", c.name},
                          {"measured", c.measured},
                          {"expected", c.expected},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
  }
  return json{{"case", r.name},
              {"observable", r.observable},
              {"terms", to_json(r.terms)},
              {"expected", to_json(r.expected)},
              {"measured", json{{"max_residual", r.max_residual}}},
              {"tolerance", json{{"residual", r.residual_tolerance}, {"terms", r.term_tolerance}}},
              {"checks", checks},
              {"pass", r.pass}};
}

SpinWeakValueDemo spin_weak_value_demo(const WaveFunction& psi, const Point& Q, const std::array<double, 3>& n,
                                       const Spinor& postselection) {
  const Observable S = Observable::spin(n);
  const PointSample s = sample_point(S, psi, Q);
  require_not_node(s.rho, s.rho_max, "spin weak value");
  SpinWeakValueDemo d;
  d.bound = 0.5 * psi.hbar();
  d.pointwise_weak_value = weak_actual_value_real_part(s);
  d.postselected_weak_value = postselected_weak_value(s, postselection);
  d.pointwise_within_bound = std::abs(d.pointwise_weak_value) <= d.bound * (1.0 + 1e-12);
  d.postselected_exceeds_bound = std::abs(d.postselected_weak_value.real()) > d.bound;
  return d;
}

}  // namespace bohmlab
