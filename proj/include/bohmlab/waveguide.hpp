#pragma once

// Evanescent states at a potential step in the coupled-waveguide model: the
// speed scale, the decay rate, and the imaginary part of the momentum weak value.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bohmlab/grid.hpp"

namespace bohmlab {

enum class Regime { Allowed, Forbidden, Critical };
std::string_view to_string(Regime regime);

struct StepScenario {
  double E = 1.0;
  double V0 = 2.0;
  double J0 = 0.5;  // coupling rate; enters as the energy hbar J0
  double mass = 1.0;
  double hbar = 1.0;
  double critical_rel_tol = 1e-9;  // |Delta| <= hbar J0 * tol is Critical

  double delta() const noexcept { return E - V0 + hbar * J0; }
  Regime regime() const noexcept;
  Physics physics() const noexcept { return Physics{mass, hbar}; }
};

/// sqrt(2 m |Delta|) / hbar; regime error unless Forbidden.
double kappa(const StepScenario& s);
/// sqrt(2 |Delta| / m)
double v_scale(const StepScenario& s);

/// Stationary scattering state on a 1D Box grid: unit wave incident from the left on
/// V = 0 | V0 - hbar J0 (step at x_step), with exact discrete open boundaries, so the
/// right side is a pure transmitted or decaying discrete exponential.
WaveFunction stationary_step_state(const StepScenario& s, const Grid& grid, double x_step);

struct MomentumWeakValuePoint {
  double x = 0.0;
  Complex p_w;  // Re = grad S, Im = -hbar grad R / R
};

/// (p psi)/psi at the grid points of [lo, hi] (all points when no region is given).
/// Scalar 1D states only; a node inside the region raises a node error.
std::vector<MomentumWeakValuePoint> momentum_weak_value_profile(const WaveFunction& psi,
                                                                std::optional<std::pair<double, double>> region = {});

struct IdentityOptions {
  double fit_tolerance = 0.02;
  double chain_tolerance = 1e-10;
  double decay_ratio = 1e-4;  // window ends where R drops to this fraction of its start
  std::size_t min_points = 8;
};

struct IdentityReport {
  double delta = 0.0;
  double v_scale = 0.0;
  double hk_over_m = 0.0;      // hbar kappa / m from the closed form
  double hk_fit_over_m = 0.0;  // hbar kappa_fit / m from the log-linear fit
  double im_pw_over_m = 0.0;   // window mean of |Im p_w| / m
  double re_pw_over_m = 0.0;   // window mean of |Re p_w| / m
  double max_bohm_velocity = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::size_t window_points = 0;
  double chain_error = 0.0;  // |v_scale - hbar kappa / m| / v_scale
  double fit_error = 0.0;    // |hbar kappa_fit / m - v_scale| / v_scale
  double pw_error = 0.0;     // |Im p_w / m - v_scale| / v_scale
  bool pass = false;
};

/// Forbidden regime only. psi is a scalar 1D state decaying to the right of x_step.
IdentityReport identity_check(const StepScenario& s, const WaveFunction& psi, double x_step,
                              const IdentityOptions& options = {});

/// m^-1 grad S at Q, from the guiding equation.
double bohmian_velocity_in_forbidden(const WaveFunction& psi, const Point& Q);

struct SweepPoint {
  double delta = 0.0;
  Regime regime = Regime::Allowed;
  double v_scale = 0.0;
  std::optional<double> hk_fit_over_m;
  double im_pw_over_m = 0.0;
  double re_pw_over_m = 0.0;
  double v_measured = 0.0;  // window mean of |p_w| / m
};

struct SweepOptions {
  double allowed_window = 4.0;  // window length right of the step outside the Forbidden regime
  IdentityOptions identity;
};

/// Delta runs over [delta_min, delta_max] in `count` points by moving V0 at fixed E and hbar J0.
std::vector<SweepPoint> delta_sweep(const StepScenario& base, const Grid& grid, double x_step, double delta_min,
                                    double delta_max, std::size_t count, const SweepOptions& options = {});

struct ContinuityVerdict {
  double max_ratio = 0.0;  // worst jump / (local slope * step)
  std::size_t worst_index = 0;
  bool pass = false;
};

/// Each jump |v_{i+1} - v_i| must stay below 3x the neighbouring intervals' larger jump.
ContinuityVerdict sweep_continuity(const std::vector<SweepPoint>& sweep);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& sweep);
nlohmann::json to_json(const IdentityReport& r);
nlohmann::json to_json(const ContinuityVerdict& v);

}  // namespace bohmlab
