#include "bohmlab/local_fields.hpp"

#include <algorithm>

#include "bohmlab/errors.hpp"
#include "bohmlab/interpolation.hpp"
#include "bohmlab/parallel.hpp"

namespace bohmlab {

FieldHistory::FieldHistory(const EvolutionRecord& record, FieldRequest request)
    : grid_(record.grid()),
      physics_(record.physics()),
      scheme_(record.scheme()),
      request_(std::move(request)),
      hamiltonian_(record.hamiltonian()),
      t0_(record.t0()),
      spacing_(record.spacing()) {
  if (request_.observable) {
    check_compatible(*request_.observable, grid_, record.snapshots.front().components());
    form_ = local_form(*request_.observable, grid_.dims(), physics_.hbar);
  }
  std::vector<std::optional<SnapshotFields>> built(record.snapshots.size());
  parallel_for(built.size(), [&](std::size_t i) { built[i] = build(record.snapshots[i]); });
  frames_.reserve(built.size());
  for (auto& f : built) frames_.push_back(std::move(*f));
}

FieldHistory::FieldHistory(const WaveFunction& psi, DerivativeScheme scheme, const Observable& hamiltonian,
                           FieldRequest request)
    : grid_(psi.grid()),
      physics_(psi.physics()),
      scheme_(scheme),
      request_(std::move(request)),
      hamiltonian_(hamiltonian),
      t0_(psi.time()),
      spacing_(1.0) {
  check_scheme(grid_, scheme_);
  if (request_.observable) {
    check_compatible(*request_.observable, grid_, psi.components());
    form_ = local_form(*request_.observable, grid_.dims(), physics_.hbar);
  }
  frames_.push_back(build(psi));
}

SnapshotFields FieldHistory::build(const WaveFunction& psi) const {
  const ComplexField& f = psi.amplitudes();
  SnapshotFields s{f, {}, {}, std::nullopt, std::nullopt, {}, std::nullopt, 0.0};
  const RealField rho = density(f);
  for (double v : rho.values()) s.rho_max = std::max(s.rho_max, v);
  for (std::size_t a = 0; a < grid_.dims(); ++a) {
    s.d1.push_back(derivative(f, a, 1, scheme_));
    if (request_.second_derivatives) s.d2.push_back(derivative(f, a, 2, scheme_));
  }
  if (request_.hamiltonian) s.h_psi = apply(*hamiltonian_, f, physics_);
  if (form_ && has_grid_part(*form_)) {
    s.g_psi = apply_grid_part(*form_, f, physics_);
    for (std::size_t a = 0; a < grid_.dims(); ++a) {
      // Observables without an explicit scheme were resolved against the grid default;
      // their gradients follow the record's scheme like every other derivative here.
      s.d_g_psi.push_back(derivative(*s.g_psi, a, 1, scheme_));
    }
    if (s.h_psi) s.g_h_psi = apply_grid_part(*form_, *s.h_psi, physics_);
  }
  return s;
}

LocalJet FieldHistory::at(const Point& Q, double t) const {
  const Point q = grid_.wrap(Q);
  const SpatialStencil st = spatial_stencil(grid_, q);
  LineStencil ts;
  if (frames_.size() == 1) {
    ts.index[0] = 0;
    ts.weight[0] = 1.0;
    ts.count = 1;
  } else {
    ts = temporal_stencil(t0_, spacing_, frames_.size(), t);
  }
  LocalJet j;
  j.components = frames_.front().psi.components();
  j.dims = grid_.dims();
  auto add = [&](Spinor& dst, const ComplexField& field, double w) {
    for (std::size_t c = 0; c < j.components; ++c) dst[c] += w * apply_stencil<Complex>(field.component(c), st);
  };
  for (std::size_t k = 0; k < ts.count; ++k) {
    const double w = ts.weight[k];
    if (w == 0.0) continue;
    const SnapshotFields& f = frames_[ts.index[k]];
    j.rho_max = std::max(j.rho_max, f.rho_max);
    add(j.psi, f.psi, w);
    for (std::size_t a = 0; a < j.dims; ++a) {
      add(j.d1[a], f.d1[a], w);
      if (!f.d2.empty()) add(j.d2[a], f.d2[a], w);
      if (!f.d_g_psi.empty()) add(j.d_g_psi[a], f.d_g_psi[a], w);
    }
    if (f.h_psi) add(j.h_psi, *f.h_psi, w);
    if (f.g_psi) add(j.g_psi, *f.g_psi, w);
    if (f.g_h_psi) add(j.g_h_psi, *f.g_h_psi, w);
  }
  for (std::size_t c = 0; c < j.components; ++c) j.rho += std::norm(j.psi[c]);
  return j;
}

namespace {

Complex hermitian(const Spinor& a, const Spinor& b, std::size_t components) {
  Complex acc{0.0, 0.0};
  for (std::size_t c = 0; c < components; ++c) acc += std::conj(a[c]) * b[c];
  return acc;
}

}  // namespace

Point jet_velocity(const LocalJet& jet, const Physics& physics) {
  Point v{};
  for (std::size_t a = 0; a < jet.dims; ++a) {
    v[a] = physics.hbar / physics.mass * hermitian(jet.psi, jet.d1[a], jet.components).imag() / jet.rho;
  }
  return v;
}

double jet_divergence(const LocalJet& jet, const Physics& physics) {
  double div = 0.0;
  for (std::size_t a = 0; a < jet.dims; ++a) {
    const Complex first = hermitian(jet.psi, jet.d1[a], jet.components);
    const Complex second = hermitian(jet.psi, jet.d2[a], jet.components);
    div += second.imag() / jet.rho - first.imag() * 2.0 * first.real() / (jet.rho * jet.rho);
  }
  return physics.hbar / physics.mass * div;
}

PointSample jet_sample(const LocalJet& jet, const LocalForm& form, const Point& Q) {
  PointSample s;
  s.components = jet.components;
  s.psi = jet.psi;
  s.rho = jet.rho;
  s.rho_max = jet.rho_max;
  s.a_psi = complete_local(form, Q, jet.g_psi, jet.psi, jet.components);
  return s;
}

Spinor jet_grad_a_psi(const LocalJet& jet, const LocalForm& form, const Point& Q, std::size_t b) {
  Spinor out = complete_local(form, Q, jet.d_g_psi[b], jet.d1[b], jet.components);
  for (std::size_t c = 0; c < jet.components; ++c) out[c] += form.position[b] * jet.psi[c];
  return out;
}

Spinor jet_a_h_psi(const LocalJet& jet, const LocalForm& form, const Point& Q) {
  return complete_local(form, Q, jet.g_h_psi, jet.h_psi, jet.components);
}

}  // namespace bohmlab
