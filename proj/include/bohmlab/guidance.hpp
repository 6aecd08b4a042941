#pragma once

// Bohmian velocity field and RK4 trajectory integration through recorded snapshots.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bohmlab/evolution.hpp"
#include "bohmlab/local_fields.hpp"

namespace bohmlab {

enum class TrajectoryStatus { Completed, NodeAborted, LeftDomain };
std::string_view to_string(TrajectoryStatus status);

struct TrajectorySample {
  double t = 0.0;
  Point Q{};  // unwrapped on periodic grids
  Point v{};
  double rho = 0.0;
  double div_v = 0.0;  // only filled when the history carries second derivatives
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double dt_traj = 0.0;
  DerivativeScheme scheme = DerivativeScheme::Spectral;
  std::size_t dims = 1;
  TrajectoryStatus status = TrajectoryStatus::Completed;
  std::optional<double> abort_time;

  bool completed() const noexcept { return status == TrajectoryStatus::Completed; }
  const TrajectorySample& back() const { return samples.back(); }
};

struct TrajectoryOptions {
  double dt_traj = 0.0;           // <= 0 selects snapshot spacing / 8
  std::optional<double> t_end;    // defaults to the end of the record
};

/// (hbar/m) Im(psi^dagger grad psi)/psi^dagger psi at Q.
Point velocity_at(const WaveFunction& psi, const Point& Q, std::optional<DerivativeScheme> scheme = std::nullopt);
/// div v at Q from interpolated first and second derivatives of psi.
double velocity_divergence(const WaveFunction& psi, const Point& Q,
                           std::optional<DerivativeScheme> scheme = std::nullopt);

/// Checked velocity from a jet: throws a node error below the trajectory threshold.
Point guided_velocity(const LocalJet& jet, const Physics& physics);

Trajectory integrate_trajectory(const FieldHistory& fields, const Point& Q0, const TrajectoryOptions& options = {});
Trajectory integrate_trajectory(const EvolutionRecord& record, const Point& Q0, double dt_traj = 0.0);

/// Runs trajectories in parallel; output order follows the input order.
std::vector<Trajectory> integrate_trajectories(const FieldHistory& fields, const std::vector<Point>& starts,
                                               const TrajectoryOptions& options = {});

/// max_t |rho(Q(t),t) exp(int_0^t div v ds) / rho(Q0,0) - 1| by trapezoidal quadrature.
/// Requires div_v samples.
double equivariance_drift(const Trajectory& traj);

/// Columns t, Q..., v..., rho, followed by any extra named columns (one value per sample).
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<std::string>& extra_names = {},
                          const std::vector<std::vector<double>>& extra_columns = {});

}  // namespace bohmlab
