#include "bohmlab/guidance.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "bohmlab/errors.hpp"
#include "bohmlab/field_io.hpp"
#include "bohmlab/parallel.hpp"

namespace bohmlab {

std::string_view to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::Completed: return "completed";
    case TrajectoryStatus::NodeAborted: return "node_aborted";
    case TrajectoryStatus::LeftDomain: return "left_domain";
  }
  return "unknown";
}

namespace {

FieldHistory snapshot_history(const WaveFunction& psi, std::optional<DerivativeScheme> scheme, bool second) {
  const DerivativeScheme s = resolve_scheme(psi.grid(), scheme);
  FieldRequest req;
  req.second_derivatives = second;
  return FieldHistory(psi, s, Observable::hamiltonian(nullptr, s), req);
}

}  // namespace

Point guided_velocity(const LocalJet& jet, const Physics& physics) {
  require_not_node(jet.rho, jet.rho_max, "guiding equation");
  return jet_velocity(jet, physics);
}

Point velocity_at(const WaveFunction& psi, const Point& Q, std::optional<DerivativeScheme> scheme) {
  const FieldHistory h = snapshot_history(psi, scheme, false);
  return guided_velocity(h.at(Q, psi.time()), psi.physics());
}

double velocity_divergence(const WaveFunction& psi, const Point& Q, std::optional<DerivativeScheme> scheme) {
  const FieldHistory h = snapshot_history(psi, scheme, true);
  const LocalJet jet = h.at(Q, psi.time());
  require_not_node(jet.rho, jet.rho_max, "velocity divergence");
  return jet_divergence(jet, psi.physics());
}

Trajectory integrate_trajectory(const FieldHistory& fields, const Point& Q0, const TrajectoryOptions& options) {
  const Grid& grid = fields.grid();
  const Physics& physics = fields.physics();
  const double spacing = fields.spacing();
  const double dt = options.dt_traj > 0.0 ? options.dt_traj : spacing / 8.0;
  if (fields.frames() > 1) {
    const double ratio = spacing / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
      fail(ErrorKind::Validation, "dt_traj must divide the snapshot spacing");
    }
  }
  const double t0 = fields.t0();
  const double t_end = options.t_end.value_or(fields.t_end());
  if (t_end < t0 || t_end > fields.t_end() + 1e-9 * std::max(1.0, std::abs(fields.t_end()))) {
    fail(ErrorKind::OutOfDomain, "trajectory end time outside the record");
  }
  if (!grid.contains(Q0)) fail(ErrorKind::OutOfDomain, "trajectory start outside the Box grid");
  const std::size_t steps = static_cast<std::size_t>(std::llround((t_end - t0) / dt));
  const bool with_div = fields.request().second_derivatives;

  Trajectory traj;
  traj.dt_traj = dt;
  traj.scheme = fields.scheme();
  traj.dims = grid.dims();
  traj.samples.reserve(steps + 1);

  auto eval = [&](const Point& Q, double t) {
    const LocalJet jet = fields.at(Q, t);
    return std::pair{jet, guided_velocity(jet, physics)};
  };
  auto record = [&](const Point& Q, double t, const LocalJet& jet, const Point& v) {
    TrajectorySample s;
    s.t = t;
    s.Q = Q;
    s.v = v;
    s.rho = jet.rho;
    if (with_div) s.div_v = jet_divergence(jet, physics);
    traj.samples.push_back(s);
  };
  auto axpy = [&](const Point& Q, double h, const Point& k) {
    Point out = Q;
    for (std::size_t a = 0; a < grid.dims(); ++a) out[a] += h * k[a];
    return out;
  };

  Point Q = Q0;
  double t = t0;
  try {
    auto [jet0, v0] = eval(Q, t);
    record(Q, t, jet0, v0);
    Point k1 = v0;
    for (std::size_t s = 1; s <= steps; ++s) {
      const double t_next = t0 + static_cast<double>(s) * dt;
      const double h = t_next - t;
      const Point k2 = eval(axpy(Q, 0.5 * h, k1), t + 0.5 * h).second;
      const Point k3 = eval(axpy(Q, 0.5 * h, k2), t + 0.5 * h).second;
      const Point k4 = eval(axpy(Q, h, k3), t_next).second;
      for (std::size_t a = 0; a < grid.dims(); ++a) Q[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
      t = t_next;
      auto [jet, v] = eval(Q, t);
      record(Q, t, jet, v);
      k1 = v;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Node) {
      traj.status = TrajectoryStatus::NodeAborted;
    } else if (e.kind() == ErrorKind::OutOfDomain && !grid.periodic()) {
      traj.status = TrajectoryStatus::LeftDomain;
    } else {
      throw;
    }
    traj.abort_time = t;
    if (traj.samples.empty()) fail(ErrorKind::Node, "trajectory starts at a node");
  }
  return traj;
}

Trajectory integrate_trajectory(const EvolutionRecord& record, const Point& Q0, double dt_traj) {
  const FieldHistory fields(record, FieldRequest{});
  TrajectoryOptions opts;
  opts.dt_traj = dt_traj;
  return integrate_trajectory(fields, Q0, opts);
}

std::vector<Trajectory> integrate_trajectories(const FieldHistory& fields, const std::vector<Point>& starts,
                                               const TrajectoryOptions& options) {
  std::vector<Trajectory> out(starts.size());
  parallel_for(starts.size(), [&](std::size_t i) { out[i] = integrate_trajectory(fields, starts[i], options); });
  return out;
}

double equivariance_drift(const Trajectory& traj) {
  if (traj.samples.empty()) return 0.0;
  const double rho0 = traj.samples.front().rho;
  double integral = 0.0, worst = 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const auto& a = traj.samples[i - 1];
    const auto& b = traj.samples[i];
    integral += 0.5 * (b.t - a.t) * (a.div_v + b.div_v);
    worst = std::max(worst, std::abs(b.rho * std::exp(integral) / rho0 - 1.0));
  }
  return worst;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj,
                          const std::vector<std::string>& extra_names,
                          const std::vector<std::vector<double>>& extra_columns) {
  if (extra_names.size() != extra_columns.size()) fail(ErrorKind::Shape, "extra column names and data differ in count");
  for (const auto& col : extra_columns) {
    if (col.size() != traj.samples.size()) fail(ErrorKind::Shape, "extra column length differs from the trajectory");
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Configuration, "cannot write " + path.string());
  out << "t";
  for (std::size_t a = 0; a < traj.dims; ++a) out << ",Q" << a;
  for (std::size_t a = 0; a < traj.dims; ++a) out << ",v" << a;
  out << ",rho";
  for (const auto& n : extra_names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < traj.samples.size(); ++i) {
    const auto& s = traj.samples[i];
    out << format_double(s.t);
    for (std::size_t a = 0; a < traj.dims; ++a) out << ',' << format_double(s.Q[a]);
    for (std::size_t a = 0; a < traj.dims; ++a) out << ',' << format_double(s.v[a]);
    out << ',' << format_double(s.rho);
    for (const auto& col : extra_columns) out << ',' << format_double(col[i]);
    out << '\n';
  }
}

}  // namespace bohmlab
