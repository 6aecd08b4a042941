#pragma once

// Time-dependent Schrodinger solvers and closed-form reference states.

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bohmlab/calculus.hpp"
#include "bohmlab/grid.hpp"
#include "bohmlab/operators.hpp"

namespace bohmlab {

enum class Method { SplitStep, CrankNicolson };

std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct Propagator {
  Method method = Method::SplitStep;
  double dt = 0.0;  // <= 0 selects default_dt
  std::shared_ptr<const RealField> potential;  // null means V = 0
  std::string potential_id = "none";
  std::size_t stride = 1;
};

struct EvolutionRecord {
  std::vector<WaveFunction> snapshots;
  Method method = Method::SplitStep;
  double dt = 0.0;
  std::size_t stride = 1;
  std::shared_ptr<const RealField> potential;
  std::string potential_id = "none";
  std::vector<std::string> warnings;

  const Grid& grid() const { return snapshots.front().grid(); }
  const Physics& physics() const { return snapshots.front().physics(); }
  double t0() const { return snapshots.front().time(); }
  double t_end() const { return snapshots.back().time(); }
  /// Time between consecutive snapshots, dt * stride.
  double spacing() const { return dt * static_cast<double>(stride); }
  /// Spectral for split-step, second-order differences for Crank-Nicolson.
  DerivativeScheme scheme() const;
  /// The Hamiltonian the record was propagated with, discretized by scheme().
  Observable hamiltonian() const;
};

/// 0.05 hbar / max(|V|, hbar^2 k_max^2 / 2m) with k_max the grid Nyquist wavenumber.
double default_dt(const Grid& grid, const RealField* potential, const Physics& physics);

/// Largest energy the grid resolves, used by the CFL-style warning.
double max_energy(const Grid& grid, const RealField* potential, const Physics& physics);

EvolutionRecord evolve(const WaveFunction& psi0, const Propagator& prop, std::size_t steps);

/// One record wrapping snapshots produced elsewhere (analytic or loaded); times must be uniform.
EvolutionRecord record_from_snapshots(std::vector<WaveFunction> snapshots, Method method, double dt,
                                      std::size_t stride, std::shared_ptr<const RealField> potential,
                                      std::string potential_id);

/// max_q |d rho/dt + div J| at each interior snapshot (index 1..n-2).
std::vector<double> continuity_residual(const EvolutionRecord& record);

void save_record(const EvolutionRecord& record, const std::filesystem::path& dir);
EvolutionRecord load_record(const std::filesystem::path& dir);

// Analytic state families. Coordinates are per axis; unused axes are ignored on 1D grids.

struct PlaneWave {
  Point k{};
};
struct HOGround {
  double omega = 1.0;
  Point center{};
};
/// (2 pi sigma^2)^(-1/4) exp(-(x-x0)^2/4sigma^2 + i k0 (x-x0)) per axis, optionally freely
/// evolved to time t in closed form.
struct GaussianPacket {
  Point x0{};
  Point sigma{1.0, 1.0};
  Point k0{};
};
/// Standing wave cos(k(x-xs)) - (kappa/k) sin(k(x-xs)) left of xs joined C1 to exp(-kappa(x-xs)).
struct EvanescentStep {
  double kappa = 1.0;
  double k = 1.0;
  double x_step = 0.0;
};
/// c_a phi_a + c_b phi_b with |c_a|^2 = weight_a and relative phase on c_b.
struct TwoBranch {
  GaussianPacket a;
  GaussianPacket b;
  double weight_a = 0.5;
  double phase = 0.0;
};
/// Two packets carrying different spinors; not separable in space and spin.
struct SpinorPair {
  GaussianPacket a;
  GaussianPacket b;
  Spinor chi_a{Complex(1.0, 0.0), Complex(0.0, 0.0)};
  Spinor chi_b{Complex(0.0, 0.0), Complex(1.0, 0.0)};
  double weight_a = 0.5;
};

using StateSpec = std::variant<PlaneWave, HOGround, GaussianPacket, EvanescentStep, TwoBranch, SpinorPair>;

struct StateOptions {
  /// Separable spinor phi(x) chi when set (not used by SpinorPair).
  std::optional<Spinor> chi;
  /// Closed-form free evolution time for Gaussian and plane-wave families.
  double time = 0.0;
  bool check_truncation = true;
};

/// Normalized grid samples. Throws a truncation error when a packet family puts more
/// than 1e-8 of its mass in the outer 2% of any axis.
WaveFunction analytic_state(const Grid& grid, const StateSpec& spec, const Physics& physics,
                            const StateOptions& options = {});

/// Name-based entry point used by scenarios: plane_wave, ho_ground, gaussian_packet,
/// evanescent_step, two_branch, spinor_pair.
StateSpec state_spec_from_json(const std::string& name, const nlohmann::json& params, std::size_t dims);
StateOptions state_options_from_json(const nlohmann::json& params);

/// Unnormalized closed-form free Gaussian packet value at (x, t) on the real line.
Complex free_gaussian_value(const GaussianPacket& g, const Point& x, double t, const Physics& physics,
                            std::size_t dims);

/// Mass of branch a of a TwoBranch state (|c_a|^2 of the sampled state).
double branch_weight(const Grid& grid, const TwoBranch& spec, const Physics& physics);

/// Harmonic potential (1/2) m omega^2 |x - center|^2.
RealField harmonic_potential(const Grid& grid, double omega, const Point& center, const Physics& physics);
/// V0 for x_axis >= x_step, 0 otherwise.
RealField step_potential(const Grid& grid, double V0, double x_step);

}  // namespace bohmlab
