#pragma once

// Self-adjoint observables on the grid, the local eigencondition, weak actual
// values and the robustness probe sequences.

#include <array>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bohmlab/calculus.hpp"
#include "bohmlab/grid.hpp"

namespace bohmlab {

class Observable;
using ObservablePtr = std::shared_ptr<const Observable>;

struct PositionAxis {
  std::size_t axis = 0;
};
struct MomentumAxis {
  std::size_t axis = 0;
};
struct Kinetic {};
struct PotentialField {
  std::shared_ptr<const RealField> V;
  std::string id;
};
/// Kinetic + V; a null V means the free Hamiltonian.
struct Hamiltonian {
  std::shared_ptr<const RealField> V;
  std::string id;
};
struct SpinComponent {
  std::array<double, 3> n{0.0, 0.0, 1.0};
};
struct Scaled {
  double c = 1.0;
  ObservablePtr inner;
};
struct Sum {
  std::vector<ObservablePtr> terms;
};

class Observable {
 public:
  using Kind = std::variant<PositionAxis, MomentumAxis, Kinetic, PotentialField, Hamiltonian, SpinComponent, Scaled, Sum>;

  explicit Observable(Kind kind, std::optional<DerivativeScheme> scheme = std::nullopt);

  static Observable position(std::size_t axis);
  static Observable momentum(std::size_t axis, std::optional<DerivativeScheme> scheme = std::nullopt);
  static Observable kinetic(std::optional<DerivativeScheme> scheme = std::nullopt);
  static Observable potential(std::shared_ptr<const RealField> V, std::string id = "V");
  static Observable hamiltonian(std::shared_ptr<const RealField> V, std::optional<DerivativeScheme> scheme = std::nullopt,
                                std::string id = "V");
  static Observable spin(std::array<double, 3> n);
  static Observable scaled(double c, Observable inner);
  static Observable sum(std::vector<Observable> terms);

  const Kind& kind() const noexcept { return kind_; }
  /// Explicit scheme, if any; children without one inherit the parent's.
  std::optional<DerivativeScheme> scheme() const noexcept { return scheme_; }
  Observable with_scheme(DerivativeScheme scheme) const;

  /// Short stable identifier such as "momentum[0]" or "2*position[0]+spin(0,0,1)".
  std::string id() const;
  bool acts_on_spin() const;
  bool needs_derivatives() const;

 private:
  Kind kind_;
  std::optional<DerivativeScheme> scheme_;
};

/// Scenario-side potentials referenced by name from observable descriptors.
struct PotentialBinding {
  std::shared_ptr<const RealField> field;
  std::string id;
};

nlohmann::json to_json(const Observable& A);
/// {"kind": "momentum", "axis": 0, "scheme": "spectral"} and friends. The
/// "potential" and "hamiltonian" kinds bind to `potential` (null means V = 0).
Observable observable_from_json(const nlohmann::json& j, const PotentialBinding& potential);

/// Throws on grid/boundary/component mismatches.
void check_compatible(const Observable& A, const Grid& grid, std::size_t components);

/// Grid samples of (A psi).
ComplexField apply(const Observable& A, const WaveFunction& psi);
ComplexField apply(const Observable& A, const ComplexField& field, const Physics& physics);

using SpinMatrix = std::array<std::array<Complex, 2>, 2>;

/// A split into a part that needs the grid (derivatives, potentials) and parts
/// that act pointwise: A = G + sum_a position[a] x_a + spin.
struct LocalForm {
  struct GridTerm {
    double coef = 1.0;
    Observable leaf;
  };
  std::vector<GridTerm> grid_terms;
  Point position{};
  SpinMatrix spin{};
  bool has_spin = false;
  std::size_t dims = 1;
};

LocalForm local_form(const Observable& A, std::size_t dims, double hbar);
/// The grid part G applied to a field; zero when A is purely pointwise.
ComplexField apply_grid_part(const LocalForm& form, const ComplexField& field, const Physics& physics);
bool has_grid_part(const LocalForm& form);
/// G + position + spin at point q given (G f)(q) and f(q).
Spinor complete_local(const LocalForm& form, const Point& q, const Spinor& grid_part, const Spinor& f, std::size_t components);

inline constexpr double kNodeThreshold = 1e-10;  // relative to max rho on the grid

struct EigenTolerance {
  double tol = 1e-6;
  double abs_floor = 1e-12;
};

struct ActualValueVerdict {
  bool holds = false;
  std::optional<double> lambda;
  Complex ratio;
  double imag_fraction = 0.0;
  EigenTolerance tolerance;
  double rho_at_Q = 0.0;
};

struct WeakValueRecord {
  double a_w = 0.0;
  Complex A_w;
  double rho_at_Q = 0.0;
  std::string observable;
  /// Set for spinors, where A_w = psi^dagger (A psi) / psi^dagger psi extends the scalar ratio.
  bool spinor_extension = false;
};

/// psi(Q) and (A psi)(Q) for one wave function, evaluated through the local form.
struct PointSample {
  std::size_t components = 1;
  Spinor psi{};
  Spinor a_psi{};
  double rho = 0.0;
  double rho_max = 0.0;
};

PointSample sample_point(const Observable& A, const WaveFunction& psi, const Point& Q);

/// Throws a node error when rho <= kNodeThreshold * rho_max.
void require_not_node(double rho, double rho_max, const std::string& where);

ActualValueVerdict eigen_verdict(const PointSample& s, const EigenTolerance& tol);
ActualValueVerdict local_eigen_check(const Observable& A, const WaveFunction& psi, const Point& Q,
                                     const EigenTolerance& tol = {});

/// a_w through the real-part formula and A_w through the complex ratio, from the
/// same point values but by separate arithmetic.
WeakValueRecord weak_value(const PointSample& s, const std::string& observable);
WeakValueRecord weak_actual_value(const Observable& A, const WaveFunction& psi, const Point& Q);
/// Re[psi^dagger A psi]/psi^dagger psi only.
double weak_actual_value_real_part(const PointSample& s);
/// Complex ratio only; spinors use the Hermitian product.
Complex complex_weak_value(const PointSample& s);

/// Weak value with a spinor post-selection at Q: chi^dagger (A psi)(Q) / chi^dagger psi(Q).
Complex postselected_weak_value(const PointSample& s, const Spinor& chi);

struct Expectation {
  double value = 0.0;
  double imag_residual = 0.0;
};

/// Re<psi|A psi>; throws a self-adjointness error when |Im| > 1e-6 max(1, |Re|).
Expectation expectation(const Observable& A, const WaveFunction& psi);

struct ProbeResult {
  Complex base_ratio;      // alpha + i beta
  Complex target;          // alpha + i gamma
  Complex achieved;        // (A phi)(Q)/phi(Q) realized on the grid
  Complex b;               // plane-wave parameter of the perturbation
  double epsilon = 0.0;    // bump support radius
  std::vector<Complex> ratios;  // n = 1..n_max
  Complex limit;           // Richardson extrapolation of the tail
};

/// Perturbation sequence psi_n = psi + phi/n with phi = eta psi(Q) e^{ib(x-Q)}.
/// Momentum observables only; epsilon <= 0 selects 10 grid spacings.
ProbeResult robustness_probe(const Observable& A, const WaveFunction& psi, const Point& Q, double gamma,
                             std::size_t n_max, double epsilon = 0.0);

/// Extrapolates z_n to n -> infinity assuming z_n is smooth in 1/n (polynomial
/// extrapolation through up to five dyadic tail points).
Complex extrapolate_limit(const std::vector<Complex>& z);

/// (hbar/2) sigma.n
SpinMatrix spin_matrix(const std::array<double, 3>& n, double hbar);

}  // namespace bohmlab
