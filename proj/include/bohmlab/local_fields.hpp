#pragma once

// Precomputed grid fields per snapshot and their space-time interpolation at a
// point. Everything the trajectory and weak-value code evaluates off-grid goes
// through here, so all consumers see the same interpolant.

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "bohmlab/evolution.hpp"
#include "bohmlab/operators.hpp"

namespace bohmlab {

struct FieldRequest {
  bool second_derivatives = false;  // needed for div v
  bool hamiltonian = false;         // H psi
  std::optional<Observable> observable;  // G psi, grad G psi, G H psi (with hamiltonian)
};

struct SnapshotFields {
  ComplexField psi;
  std::vector<ComplexField> d1;
  std::vector<ComplexField> d2;
  std::optional<ComplexField> h_psi;
  std::optional<ComplexField> g_psi;
  std::vector<ComplexField> d_g_psi;
  std::optional<ComplexField> g_h_psi;
  double rho_max = 0.0;
};

/// Interpolated values at one (Q, t).
struct LocalJet {
  std::size_t components = 1;
  std::size_t dims = 1;
  Spinor psi{};
  std::array<Spinor, kMaxDims> d1{};
  std::array<Spinor, kMaxDims> d2{};
  Spinor h_psi{};
  Spinor g_psi{};
  std::array<Spinor, kMaxDims> d_g_psi{};
  Spinor g_h_psi{};
  double rho = 0.0;
  double rho_max = 0.0;
};

class FieldHistory {
 public:
  FieldHistory(const EvolutionRecord& record, FieldRequest request);
  /// A single frozen snapshot; any t evaluates that snapshot.
  FieldHistory(const WaveFunction& psi, DerivativeScheme scheme, const Observable& hamiltonian, FieldRequest request);

  const Grid& grid() const noexcept { return grid_; }
  const Physics& physics() const noexcept { return physics_; }
  DerivativeScheme scheme() const noexcept { return scheme_; }
  const FieldRequest& request() const noexcept { return request_; }
  const std::optional<LocalForm>& form() const noexcept { return form_; }
  double t0() const noexcept { return t0_; }
  double t_end() const noexcept { return t0_ + spacing_ * static_cast<double>(frames_.size() - 1); }
  double spacing() const noexcept { return spacing_; }
  std::size_t frames() const noexcept { return frames_.size(); }

  /// Q may be unwrapped on periodic grids. Throws out-of-domain outside a Box grid
  /// or the recorded time span.
  LocalJet at(const Point& Q, double t) const;

 private:
  SnapshotFields build(const WaveFunction& psi) const;

  Grid grid_;
  Physics physics_;
  DerivativeScheme scheme_;
  FieldRequest request_;
  std::optional<Observable> hamiltonian_;
  std::optional<LocalForm> form_;
  double t0_ = 0.0;
  double spacing_ = 1.0;
  std::vector<SnapshotFields> frames_;
};

/// (hbar/m) Im(psi^dagger d_a psi)/rho per axis.
Point jet_velocity(const LocalJet& jet, const Physics& physics);
/// div v from first and second derivatives of psi at the point.
double jet_divergence(const LocalJet& jet, const Physics& physics);

/// psi(Q) and (A psi)(Q) from a jet carrying the observable's fields.
PointSample jet_sample(const LocalJet& jet, const LocalForm& form, const Point& Q);
/// d_b (A psi)(Q).
Spinor jet_grad_a_psi(const LocalJet& jet, const LocalForm& form, const Point& Q, std::size_t b);
/// (A H psi)(Q).
Spinor jet_a_h_psi(const LocalJet& jet, const LocalForm& form, const Point& Q);

}  // namespace bohmlab
