#include "bohmlab/waveguide.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bohmlab/calculus.hpp"
#include "bohmlab/errors.hpp"
#include "bohmlab/field_io.hpp"
#include "bohmlab/guidance.hpp"
#include "bohmlab/parallel.hpp"

namespace bohmlab {

using nlohmann::json;

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Allowed: return "allowed";
    case Regime::Forbidden: return "forbidden";
    case Regime::Critical: return "critical";
  }
  return "unknown";
}

Regime StepScenario::regime() const noexcept {
  const double d = delta();
  if (std::abs(d) <= hbar * J0 * critical_rel_tol) return Regime::Critical;
  return d > 0.0 ? Regime::Allowed : Regime::Forbidden;
}

double kappa(const StepScenario& s) {
  if (s.regime() != Regime::Forbidden) {
    fail(ErrorKind::Regime, "kappa is defined in the forbidden regime only (Delta = " + format_double(s.delta()) + ")");
  }
  return std::sqrt(2.0 * s.mass * std::abs(s.delta())) / s.hbar;
}

double v_scale(const StepScenario& s) {
  return std::sqrt(2.0 * std::abs(s.delta()) / s.mass);
}

namespace {

void require_line(const WaveFunction& psi) {
  if (psi.grid().dims() != 1 || psi.components() != 1) {
    fail(ErrorKind::UnsupportedOperation, "waveguide analysis needs a scalar 1D state");
  }
}

// Discrete plane-wave factor per grid step for -a (psi_{j-1} - 2 psi_j + psi_{j+1}) = k psi_j:
// e^{i theta} while propagating, the decaying real root when evanescent.
Complex step_factor(double kinetic, double a) {
  const double c = 1.0 - kinetic / (2.0 * a);
  if (c > 1.0) return {c - std::sqrt(c * c - 1.0), 0.0};
  if (c < -1.0) fail(ErrorKind::Configuration, "grid too coarse for the scattering energy");
  return std::polar(1.0, std::acos(c));
}

std::vector<Complex> solve_tridiagonal(std::vector<Complex> lower, std::vector<Complex> diag,
                                       std::vector<Complex> upper, std::vector<Complex> rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const Complex w = lower[i] / diag[i - 1];
    diag[i] -= w * upper[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<Complex> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (rhs[i] - upper[i] * x[i + 1]) / diag[i];
  return x;
}

struct WindowStats {
  double im = 0.0;
  double re = 0.0;
  double abs = 0.0;
  double max_velocity = 0.0;
};

WindowStats window_stats(const std::vector<MomentumWeakValuePoint>& prof, double mass) {
  WindowStats w;
  for (const auto& p : prof) {
    w.im += std::abs(p.p_w.imag());
    w.re += std::abs(p.p_w.real());
    w.abs += std::abs(p.p_w);
    w.max_velocity = std::max(w.max_velocity, std::abs(p.p_w.real()) / mass);
  }
  const double n = static_cast<double>(prof.size());
  w.im /= n * mass;
  w.re /= n * mass;
  w.abs /= n * mass;
  return w;
}

}  // namespace

WaveFunction stationary_step_state(const StepScenario& s, const Grid& grid, double x_step) {
  if (grid.dims() != 1 || grid.periodic()) fail(ErrorKind::Configuration, "step scattering needs a 1D Box grid");
  if (!(s.E > 0.0)) fail(ErrorKind::Configuration, "incident energy must be positive");
  if (x_step <= grid.min(0) || x_step >= grid.max(0)) fail(ErrorKind::Configuration, "step outside the grid");
  const std::size_t n = grid.points(0);
  const double h = grid.spacing(0);
  const double a = s.hbar * s.hbar / (2.0 * s.mass * h * h);
  const double v_right = s.V0 - s.hbar * s.J0;

  const Complex left = step_factor(s.E, a);
  const Complex right = step_factor(s.E - v_right, a);

  std::vector<Complex> lower(n, -a), diag(n), upper(n, -a), rhs(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double V = grid.coordinate(0, j) >= x_step ? v_right : 0.0;
    diag[j] = 2.0 * a + V - s.E;
  }
  // Left ghost: psi_{-1} = left psi_0 + (conj(left) - left) inc_0 with inc_j = left^j.
  diag[0] += -a * left;
  rhs[0] = a * (std::conj(left) - left);
  // Right ghost: psi_n = right psi_{n-1}.
  diag[n - 1] += -a * right;

  const std::vector<Complex> x = solve_tridiagonal(lower, diag, upper, rhs);
  ComplexField f(grid, 1);
  for (std::size_t j = 0; j < n; ++j) f.at(0, j) = x[j];
  return WaveFunction(std::move(f), 0.0, s.physics());
}

std::vector<MomentumWeakValuePoint> momentum_weak_value_profile(const WaveFunction& psi,
                                                                std::optional<std::pair<double, double>> region) {
  require_line(psi);
  const Grid& grid = psi.grid();
  const ComplexField d = derivative(psi.amplitudes(), 0, 1, default_scheme(grid));
  double rho_max = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) rho_max = std::max(rho_max, std::norm(psi.amplitudes().at(0, j)));
  std::vector<MomentumWeakValuePoint> out;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.coordinate(0, j);
    if (region && (x < region->first || x > region->second)) continue;
    const Complex z = psi.amplitudes().at(0, j);
    require_not_node(std::norm(z), rho_max, "momentum weak value");
    // p psi / psi = -i hbar psi'/psi
    out.push_back({x, Complex(0.0, -psi.hbar()) * d.at(0, j) / z});
  }
  return out;
}

IdentityReport identity_check(const StepScenario& s, const WaveFunction& psi, double x_step,
                              const IdentityOptions& options) {
  require_line(psi);
  const Grid& grid = psi.grid();
  const double h = grid.spacing(0);
  IdentityReport r;
  r.delta = s.delta();
  r.v_scale = v_scale(s);
  r.hk_over_m = s.hbar * kappa(s) / s.mass;
  r.chain_error = std::abs(r.v_scale - r.hk_over_m) / r.v_scale;

  // Window: from two cells right of the step until R falls by decay_ratio.
  const double x_last = grid.max(0) - 3.0 * h;
  std::vector<double> xs, logs;
  double r_start = -1.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double x = grid.coordinate(0, j);
    if (x < x_step + 2.0 * h - 1e-12 * h || x > x_last) continue;
    const double R = std::abs(psi.amplitudes().at(0, j));
    if (!(R > 0.0)) fail(ErrorKind::Fit, "node inside the decay window");
    if (r_start < 0.0) r_start = R;
    if (R < options.decay_ratio * r_start) break;
    xs.push_back(x);
    logs.push_back(std::log(R));
  }
  r.window_points = xs.size();
  if (xs.size() < options.min_points) {
    fail(ErrorKind::Fit, "decay window holds " + std::to_string(xs.size()) + " points, need " +
                             std::to_string(options.min_points));
  }
  r.window_lo = xs.front();
  r.window_hi = xs.back();

  // Least-squares slope of log R against x.
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += logs[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (logs[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  const double kappa_fit = -sxy / sxx;
  r.hk_fit_over_m = s.hbar * kappa_fit / s.mass;

  const auto prof = momentum_weak_value_profile(psi, std::pair{r.window_lo, r.window_hi});
  const WindowStats w = window_stats(prof, s.mass);
  r.im_pw_over_m = w.im;
  r.re_pw_over_m = w.re;
  r.max_bohm_velocity = w.max_velocity;
  r.fit_error = std::abs(r.hk_fit_over_m - r.v_scale) / r.v_scale;
  r.pw_error = std::abs(r.im_pw_over_m - r.v_scale) / r.v_scale;
  r.pass = r.chain_error <= options.chain_tolerance && r.fit_error <= options.fit_tolerance &&
           r.pw_error <= options.fit_tolerance;
  return r;
}

double bohmian_velocity_in_forbidden(const WaveFunction& psi, const Point& Q) {
  require_line(psi);
  return velocity_at(psi, Q)[0];
}

std::vector<SweepPoint> delta_sweep(const StepScenario& base, const Grid& grid, double x_step, double delta_min,
                                    double delta_max, std::size_t count, const SweepOptions& options) {
  if (count < 2) fail(ErrorKind::Validation, "a sweep needs at least two points");
  std::vector<SweepPoint> out(count);
  parallel_for(count, [&](std::size_t i) {
    StepScenario s = base;
    const double d = delta_min + (delta_max - delta_min) * static_cast<double>(i) / static_cast<double>(count - 1);
    s.V0 = s.E + s.hbar * s.J0 - d;
    SweepPoint& p = out[i];
    p.delta = s.delta();
    p.regime = s.regime();
    p.v_scale = v_scale(s);
    const WaveFunction psi = stationary_step_state(s, grid, x_step);
    double lo = x_step + 2.0 * grid.spacing(0);
    double hi = std::min(x_step + options.allowed_window, grid.max(0) - 3.0 * grid.spacing(0));
    if (p.regime == Regime::Forbidden) {
      const IdentityReport r = identity_check(s, psi, x_step, options.identity);
      p.hk_fit_over_m = r.hk_fit_over_m;
      lo = r.window_lo;
      hi = r.window_hi;
    }
    const WindowStats w = window_stats(momentum_weak_value_profile(psi, std::pair{lo, hi}), s.mass);
    p.im_pw_over_m = w.im;
    p.re_pw_over_m = w.re;
    p.v_measured = w.abs;
  });
  return out;
}

ContinuityVerdict sweep_continuity(const std::vector<SweepPoint>& sweep) {
  ContinuityVerdict v;
  if (sweep.size() < 3) {
    v.pass = true;
    return v;
  }
  std::vector<double> jumps(sweep.size() - 1);
  for (std::size_t i = 0; i + 1 < sweep.size(); ++i) jumps[i] = std::abs(sweep[i + 1].v_measured - sweep[i].v_measured);
  v.pass = true;
  for (std::size_t i = 0; i < jumps.size(); ++i) {
    double local = 0.0;
    if (i > 0) local = std::max(local, jumps[i - 1]);
    if (i + 1 < jumps.size()) local = std::max(local, jumps[i + 1]);
    const double ratio = local > 0.0 ? jumps[i] / local : (jumps[i] > 0.0 ? HUGE_VAL : 0.0);
    if (ratio > v.max_ratio || i == 0) {
      v.max_ratio = ratio;
      v.worst_index = i;
    }
    if (!(ratio < 3.0)) v.pass = false;
  }
  return v;
}

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepPoint>& sweep) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Configuration, "cannot write " + path.string());
  out << "delta,regime,v_scale,hk_fit_over_m,im_pw_over_m,re_pw_over_m,v_measured\n";
  for (const auto& p : sweep) {
    out << format_double(p.delta) << ',' << to_string(p.regime) << ',' << format_double(p.v_scale) << ','
        << (p.hk_fit_over_m ? format_double(*p.hk_fit_over_m) : std::string()) << ','
        << format_double(p.im_pw_over_m) << ',' << format_double(p.re_pw_over_m) << ','
        << format_double(p.v_measured) << '\n';
  }
}

json to_json(const IdentityReport& r) {
  return json{{"delta", r.delta},
              {"v_scale", r.v_scale},
              {"hk_over_m", r.hk_over_m},
              {"hk_fit_over_m", r.hk_fit_over_m},
              {"im_pw_over_m", r.im_pw_over_m},
              {"re_pw_over_m", r.re_pw_over_m},
              {"max_bohm_velocity", r.max_bohm_velocity},
              {"window", {r.window_lo, r.window_hi}},
              {"window_points", r.window_points},
              {"chain_error", r.chain_error},
              {"fit_error", r.fit_error},
              {"pw_error", r.pw_error},
              {"pass", r.pass}};
}

json to_json(const ContinuityVerdict& v) {
  return json{{"max_ratio", std::isfinite(v.max_ratio) ? json(v.max_ratio) : json(nullptr)},
              {"worst_index", v.worst_index},
              {"pass", v.pass}};
}

}  // namespace bohmlab
