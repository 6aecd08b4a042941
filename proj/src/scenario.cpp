#include "bohmlab/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "bohmlab/dynamics.hpp"
#include "bohmlab/ensemble.hpp"
#include "bohmlab/errors.hpp"
#include "bohmlab/field_io.hpp"
#include "bohmlab/parallel.hpp"
#include "bohmlab/waveguide.hpp"

#ifndef BOHMLAB_SCENARIO_DIR
#define BOHMLAB_SCENARIO_DIR "scenarios"
#endif

namespace bohmlab {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Evolve: return "evolve";
    case Pipeline::Trajectories: return "trajectories";
    case Pipeline::Ensemble: return "ensemble";
    case Pipeline::Verify: return "verify";
    case Pipeline::Waveguide: return "waveguide";
  }
  return "unknown";
}

Pipeline parse_pipeline(std::string_view name) {
  for (Pipeline p : {Pipeline::Evolve, Pipeline::Trajectories, Pipeline::Ensemble, Pipeline::Verify, Pipeline::Waveguide}) {
    if (to_string(p) == name) return p;
  }
  fail(ErrorKind::Validation, "pipeline: unknown value '" + std::string(name) + "'");
}

std::string config_hash(const json& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Config access. Every lookup names its key path in the error.

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorKind::Validation, where + key + ": missing");
  return j.at(key);
}

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    fail(ErrorKind::Validation, where + key + ": wrong type");
  }
}

template <class T>
T get_or(const json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key, where);
}

const json& block(const json& config, const std::string& key) {
  const json& b = require(config, key, "");
  if (!b.is_object()) fail(ErrorKind::Validation, key + ": must be an object");
  return b;
}

const json kEmpty = json::object();

const json& optional_block(const json& config, const std::string& key) {
  if (!config.contains(key)) return kEmpty;
  return block(config, key);
}

// Runs fn; library and JSON errors become validation errors prefixed with `key`.
template <class F>
auto validated(const std::string& key, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Validation) throw;
    fail(ErrorKind::Validation, key + ": " + e.what());
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, key + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Shared setup

struct Setup {
  Physics physics;
  std::optional<Grid> grid;
  std::shared_ptr<const RealField> potential;
  std::string potential_id = "none";
  std::optional<StateSpec> spec;
  std::optional<WaveFunction> psi0;
  std::vector<Observable> observables;
  Propagator prop;
  std::size_t steps = 0;
};

Physics physics_from(const json& config) {
  const json& p = optional_block(config, "physics");
  Physics ph;
  ph.mass = get_or<double>(p, "mass", 1.0, "physics.");
  ph.hbar = get_or<double>(p, "hbar", 1.0, "physics.");
  if (!(ph.mass > 0.0) || !(ph.hbar > 0.0)) fail(ErrorKind::Validation, "physics: mass and hbar must be positive");
  return ph;
}

Grid grid_from(const json& config, const std::string& key = "grid") {
  const json& g = block(config, key);
  return validated(key, [&] { return grid_from_json(g); });
}

void build_potential(const json& config, Setup& s) {
  if (!config.contains("potential")) return;
  const json& p = block(config, "potential");
  const std::string kind = get<std::string>(p, "kind", "potential.");
  if (kind == "none") return;
  if (kind == "harmonic") {
    const double omega = get<double>(p, "omega", "potential.");
    Point c{};
    if (p.contains("center")) {
      const auto v = get<std::vector<double>>(p, "center", "potential.");
      for (std::size_t a = 0; a < std::min(v.size(), kMaxDims); ++a) c[a] = v[a];
    }
    s.potential = std::make_shared<const RealField>(harmonic_potential(*s.grid, omega, c, s.physics));
    s.potential_id = "harmonic";
    return;
  }
  if (kind == "step") {
    s.potential = std::make_shared<const RealField>(
        step_potential(*s.grid, get<double>(p, "V0", "potential."), get_or<double>(p, "x_step", 0.0, "potential.")));
    s.potential_id = "step";
    return;
  }
  fail(ErrorKind::Validation, "potential.kind: unknown value '" + kind + "'");
}

void build_state(const json& config, Setup& s) {
  const json& st = block(config, "state");
  const std::string name = get<std::string>(st, "name", "state.");
  const json params = st.contains("params") ? st.at("params") : json::object();
  s.spec = validated("state.params", [&] { return state_spec_from_json(name, params, s.grid->dims()); });
  const StateOptions opts = validated("state.params", [&] { return state_options_from_json(params); });
  s.psi0 = validated("state", [&] { return analytic_state(*s.grid, *s.spec, s.physics, opts); });
}

void build_observables(const json& config, Setup& s) {
  if (!config.contains("observables")) return;
  const json& obs = config.at("observables");
  if (!obs.is_array()) fail(ErrorKind::Validation, "observables: must be an array");
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const std::string key = "observables[" + std::to_string(i) + "]";
    Observable A = validated(key, [&] { return observable_from_json(obs[i], PotentialBinding{s.potential, s.potential_id}); });
    validated(key, [&] {
      check_compatible(A, *s.grid, s.psi0 ? s.psi0->components() : 1);
      return 0;
    });
    s.observables.push_back(std::move(A));
  }
}

void build_propagator(const json& config, Setup& s) {
  const json& p = block(config, "propagator");
  s.prop.method = validated("propagator.method", [&] { return parse_method(get_or<std::string>(p, "method", "split_step", "propagator.")); });
  s.prop.dt = get_or<double>(p, "dt", 0.0, "propagator.");
  s.prop.stride = get_or<std::size_t>(p, "stride", 1, "propagator.");
  if (s.prop.stride == 0) fail(ErrorKind::Validation, "propagator.stride: must be positive");
  s.prop.potential = s.potential;
  s.prop.potential_id = s.potential_id;
  if (s.prop.dt <= 0.0) s.prop.dt = default_dt(*s.grid, s.potential.get(), s.physics);
  if (p.contains("steps")) {
    s.steps = get<std::size_t>(p, "steps", "propagator.");
  } else {
    const double t_end = get<double>(p, "t_end", "propagator.");
    s.steps = static_cast<std::size_t>(std::ceil(t_end / s.prop.dt - 1e-9));
  }
  // Whole snapshot intervals only.
  s.steps = ((s.steps + s.prop.stride - 1) / s.prop.stride) * s.prop.stride;
  if (s.steps == 0) fail(ErrorKind::Validation, "propagator.steps: must be positive");
}

Setup full_setup(const json& config, bool need_propagator) {
  Setup s;
  s.physics = physics_from(config);
  s.grid = grid_from(config);
  build_potential(config, s);
  build_state(config, s);
  build_observables(config, s);
  if (need_propagator) build_propagator(config, s);
  return s;
}

std::vector<Point> points_from(const json& arr, std::size_t dims, const std::string& key) {
  if (!arr.is_array()) fail(ErrorKind::Validation, key + ": must be an array");
  std::vector<Point> out;
  for (const auto& e : arr) {
    Point q{};
    if (e.is_number()) {
      q[0] = e.get<double>();
    } else if (e.is_array() && e.size() == dims) {
      for (std::size_t a = 0; a < dims; ++a) q[a] = e[a].get<double>();
    } else {
      fail(ErrorKind::Validation, key + ": entries need " + std::to_string(dims) + " coordinates");
    }
    out.push_back(q);
  }
  return out;
}

double tolerance(const json& config, const std::string& key, double fallback) {
  return get_or<double>(optional_block(config, "tolerances"), key, fallback, "tolerances.");
}

std::uint64_t seed_of(const json& b, const std::string& where) {
  return get_or<std::uint64_t>(b, "seed", 0, where);
}

// ---------------------------------------------------------------------------
// Pipelines

struct Context {
  const Scenario& scenario;
  fs::path out;
  json results = json::object();
  std::vector<Check> checks;

  void check(const std::string& name, double measured, double tol, bool pass) {
    checks.push_back(Check{name, measured, tol, pass});
  }
  void check_le(const std::string& name, double measured, double tol) { check(name, measured, tol, measured <= tol); }
};

json warnings_json(const std::vector<std::string>& w) {
  return json(w);
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) fail(ErrorKind::Configuration, "cannot write " + p.string());
  out << j.dump(2) << '\n';
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

void run_evolve(Context& ctx) {
  const json& config = ctx.scenario.config;
  Setup s = full_setup(config, true);
  const EvolutionRecord rec = evolve(*s.psi0, s.prop, s.steps);
  double drift = 0.0;
  for (const auto& snap : rec.snapshots) drift = std::max(drift, std::abs(norm(snap) - norm(rec.snapshots.front())));
  const std::vector<double> cont = rec.snapshots.size() >= 3 ? continuity_residual(rec) : std::vector<double>{};

  ctx.results["method"] = std::string(to_string(rec.method));
  ctx.results["dt"] = rec.dt;
  ctx.results["steps"] = s.steps;
  ctx.results["snapshots"] = rec.snapshots.size();
  ctx.results["t_end"] = rec.t_end();
  ctx.results["norm_drift"] = drift;
  ctx.results["continuity_residual_max"] = max_of(cont);
  ctx.results["warnings"] = warnings_json(rec.warnings);
  ctx.check_le("norm_drift", drift, tolerance(config, "norm_drift", 1e-10));
  if (config.contains("tolerances") && config.at("tolerances").contains("continuity_residual")) {
    ctx.check_le("continuity_residual", max_of(cont), tolerance(config, "continuity_residual", 0.0));
  }

  // Closed-form comparison for freely evolving Gaussian packets.
  if (!s.potential && std::holds_alternative<GaussianPacket>(*s.spec)) {
    if (s.psi0->components() == 1) {
      StateOptions o;
      o.time = rec.t_end();
      o.check_truncation = false;
      const WaveFunction exact = analytic_state(*s.grid, *s.spec, s.physics, o);
      double err = 0.0;
      const ComplexField& a = rec.snapshots.back().amplitudes();
      for (std::size_t p = 0; p < a.points(); ++p) err = std::max(err, std::abs(a.at(0, p) - exact.amplitudes().at(0, p)));
      ctx.results["reference_error"] = err;
      if (config.contains("tolerances") && config.at("tolerances").contains("reference_error")) {
        ctx.check_le("reference_error", err, tolerance(config, "reference_error", 0.0));
      }
    }
  }

  write_wave_function(ctx.out / "final", rec.snapshots.back());
  {
    std::ofstream out(ctx.out / "continuity.csv");
    out << "t,residual\n";
    for (std::size_t i = 0; i < cont.size(); ++i) {
      out << format_double(rec.snapshots[i + 1].time()) << ',' << format_double(cont[i]) << '\n';
    }
  }
  if (get_or<bool>(block(config, "propagator"), "save_record", false, "propagator.")) save_record(rec, ctx.out / "record");
}

struct ConvergenceLevel {
  std::size_t points = 0;
  double dt = 0.0;
  double terms_residual = 0.0;
  double continuity_residual = 0.0;
};

// One trajectory's worst evolution-equation residual on a record.
double worst_terms_residual(const EvolutionRecord& rec, const Observable& A, const Point& Q0, double dt_traj) {
  const TermsEvaluator eval(rec, A);
  TrajectoryOptions o;
  o.dt_traj = dt_traj;
  const Trajectory tr = integrate_trajectory(eval.fields(), Q0, o);
  if (!tr.completed()) fail(ErrorKind::Node, "convergence trajectory did not complete");
  std::vector<double> res(tr.samples.size(), 0.0);
  parallel_for(tr.samples.size() - 2, [&](std::size_t k) { res[k + 1] = eval.terms(tr, k + 1).residual; });
  return max_of(res);
}

void run_trajectories(Context& ctx) {
  const json& config = ctx.scenario.config;
  Setup s = full_setup(config, true);
  const json& tb = block(config, "trajectories");
  const std::size_t dims = s.grid->dims();
  std::vector<Point> starts;
  if (tb.contains("starts")) starts = points_from(tb.at("starts"), dims, "trajectories.starts");
  if (tb.contains("count")) {
    const auto more = sample_equilibrium(*s.psi0, get<std::size_t>(tb, "count", "trajectories."), seed_of(tb, "trajectories."));
    starts.insert(starts.end(), more.begin(), more.end());
  }
  if (starts.empty()) fail(ErrorKind::Validation, "trajectories: needs 'starts' or 'count'");
  const double dt_traj = get_or<double>(tb, "dt_traj", 0.0, "trajectories.");

  const EvolutionRecord rec = evolve(*s.psi0, s.prop, s.steps);
  FieldRequest req;
  req.second_derivatives = true;
  const FieldHistory fields(rec, req);
  TrajectoryOptions topts;
  topts.dt_traj = dt_traj;
  const std::vector<Trajectory> trajs = integrate_trajectories(fields, starts, topts);

  std::vector<TermsEvaluator> evaluators;
  for (const auto& A : s.observables) evaluators.emplace_back(rec, A);

  json per = json::array();
  double worst_residual = 0.0, worst_drift = 0.0;
  std::size_t aborted = 0;
  for (std::size_t i = 0; i < trajs.size(); ++i) {
    const Trajectory& tr = trajs[i];
    if (!tr.completed()) ++aborted;
    const double drift = equivariance_drift(tr);
    worst_drift = std::max(worst_drift, drift);
    std::vector<std::string> names;
    std::vector<std::vector<double>> cols;
    json obs = json::array();
    for (const auto& ev : evaluators) {
      const std::string id = ev.observable().id();
      const auto aw = aw_along(tr, ev);
      std::vector<double> col(aw.size());
      for (std::size_t k = 0; k < aw.size(); ++k) col[k] = aw[k] ? aw[k]->a_w : std::nan("");
      names.push_back("aw:" + id);
      cols.push_back(std::move(col));

      std::vector<EvolutionTerms> terms(tr.samples.size());
      std::vector<char> ok(tr.samples.size(), 0);
      if (tr.samples.size() >= 3) {
        parallel_for(tr.samples.size() - 2, [&](std::size_t k) {
          try {
            terms[k + 1] = ev.terms(tr, k + 1);
            ok[k + 1] = 1;
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::Node) throw;
          }
        });
      }
      double worst = 0.0;
      std::ofstream out(ctx.out / ("terms_" + std::to_string(i) + "_" + std::to_string(obs.size()) + ".csv"));
      out << "t,a_w,quantum_dynamical,convective,divergence_correction,rhs_total,lhs_fd,residual\n";
      for (std::size_t k = 0; k < terms.size(); ++k) {
        if (!ok[k]) continue;
        const EvolutionTerms& t = terms[k];
        worst = std::max(worst, t.residual);
        out << format_double(t.t) << ',' << format_double(t.a_w) << ',' << format_double(t.quantum_dynamical) << ','
            << format_double(t.convective) << ',' << format_double(t.divergence_correction) << ','
            << format_double(t.rhs_total) << ',' << format_double(t.lhs_fd) << ',' << format_double(t.residual) << '\n';
      }
      worst_residual = std::max(worst_residual, worst);
      obs.push_back(json{{"observable", id}, {"max_residual", worst}});
    }
    write_trajectory_csv(ctx.out / ("trajectory_" + std::to_string(i) + ".csv"), tr, names, cols);
    per.push_back(json{{"index", i},
                       {"Q0", std::vector<double>(tr.samples.front().Q.begin(), tr.samples.front().Q.begin() + dims)},
                       {"Q_end", std::vector<double>(tr.back().Q.begin(), tr.back().Q.begin() + dims)},
                       {"status", std::string(to_string(tr.status))},
                       {"equivariance_drift", drift},
                       {"observables", obs}});
  }
  ctx.results["trajectories"] = per;
  ctx.results["aborted"] = aborted;
  ctx.results["max_terms_residual"] = worst_residual;
  ctx.results["max_equivariance_drift"] = worst_drift;
  ctx.results["warnings"] = warnings_json(rec.warnings);
  const json& tol = optional_block(config, "tolerances");
  if (tol.contains("terms_residual")) ctx.check_le("terms_residual", worst_residual, tolerance(config, "terms_residual", 0.0));
  if (tol.contains("equivariance_drift")) {
    ctx.check_le("equivariance_drift", worst_drift, tolerance(config, "equivariance_drift", 0.0));
  }
  ctx.check_le("aborted", static_cast<double>(aborted), tolerance(config, "aborted", 0.0));

  // Simultaneous halving of dx, dt and dt_traj.
  if (get_or<bool>(tb, "refine", false, "trajectories.")) {
    if (s.observables.empty()) fail(ErrorKind::Validation, "trajectories.refine: needs an observable");
    const json& gridj = block(config, "grid");
    std::vector<ConvergenceLevel> levels;
    for (int lvl = 0; lvl < 2; ++lvl) {
      json g = gridj;
      for (auto& a : g["axes"]) a["points"] = a["points"].get<std::size_t>() << lvl;
      json c2 = config;
      c2["grid"] = g;
      Setup r = full_setup(c2, true);
      r.prop.dt = s.prop.dt / static_cast<double>(1 << lvl);
      const EvolutionRecord rr = evolve(*r.psi0, r.prop, s.steps << lvl);
      const double dtt = dt_traj > 0.0 ? dt_traj / static_cast<double>(1 << lvl) : 0.0;
      ConvergenceLevel L;
      L.points = r.grid->size();
      L.dt = r.prop.dt;
      L.terms_residual = worst_terms_residual(rr, r.observables.front(), starts.front(), dtt);
      L.continuity_residual = max_of(continuity_residual(rr));
      levels.push_back(L);
    }
    const double f_terms = levels[0].terms_residual / levels[1].terms_residual;
    const double f_cont = levels[0].continuity_residual / levels[1].continuity_residual;
    json lv = json::array();
    for (const auto& L : levels) {
      lv.push_back(json{{"points", L.points},
                        {"dt", L.dt},
                        {"terms_residual", L.terms_residual},
                        {"continuity_residual", L.continuity_residual}});
    }
    ctx.results["convergence"] = json{{"levels", lv}, {"terms_factor", f_terms}, {"continuity_factor", f_cont}};
    const double lo = tolerance(config, "convergence_factor_min", 3.2);
    const double hi = tolerance(config, "convergence_factor_max", 4.8);
    ctx.check("terms_convergence_factor", f_terms, lo, f_terms >= lo && f_terms <= hi);
    ctx.check("continuity_convergence_factor", f_cont, lo, f_cont >= lo && f_cont <= hi);
  }
}

void run_ensemble(Context& ctx) {
  const json& config = ctx.scenario.config;
  const json& eb = block(config, "ensemble");
  const std::string mode = get<std::string>(eb, "mode", "ensemble.");
  const std::size_t n = get<std::size_t>(eb, "samples", "ensemble.");
  const std::uint64_t seed = seed_of(eb, "ensemble.");
  EnsembleReport rep;
  rep.n_samples = n;
  rep.seed = seed;

  if (mode == "average") {
    Setup s = full_setup(config, false);
    if (s.observables.empty()) fail(ErrorKind::Validation, "observables: ensemble averages need at least one");
    const std::size_t repeats = get_or<std::size_t>(eb, "repeats", 1, "ensemble.");
    const double min_fraction = tolerance(config, "monte_carlo_pass_fraction", 1.0);
    json rep_json = json::array();
    for (const auto& A : s.observables) {
      std::size_t passes = 0;
      std::vector<double> zs;
      ObservableStats first;
      for (std::size_t r = 0; r < repeats; ++r) {
        const ObservableStats st = ensemble_average(*s.psi0, A, n, seed + r);
        if (r == 0) first = st;
        if (st.monte_carlo_pass) ++passes;
        zs.push_back(st.z_score);
        rep.aborted_count += r == 0 ? st.nodes : 0;
      }
      rep.observables.push_back(first);
      const double fraction = static_cast<double>(passes) / static_cast<double>(repeats);
      rep_json.push_back(json{{"observable", A.id()}, {"repeats", repeats}, {"monte_carlo_pass_fraction", fraction}});
      ctx.check_le("grid_integral:" + A.id(), first.grid_integral_error, kGridIntegralTolerance);
      ctx.check("monte_carlo:" + A.id(), fraction, min_fraction, fraction >= min_fraction);
      for (const auto& w : first.warnings) rep.warnings.push_back(A.id() + ": " + w);
    }
    ctx.results["repeats"] = rep_json;
  } else if (mode == "equivariance") {
    Setup s = full_setup(config, true);
    const EvolutionRecord rec = evolve(*s.psi0, s.prop, s.steps);
    EquivarianceOptions o;
    o.bins = get_or<std::size_t>(eb, "bins", 64, "ensemble.");
    o.dt_traj = get_or<double>(eb, "dt_traj", 0.0, "ensemble.");
    const double t_check = get_or<double>(eb, "t_check", rec.t_end(), "ensemble.");
    const EquivarianceResult r = equivariance_test(rec, n, seed, t_check, o);
    rep.aborted_count = r.aborted;
    rep.equivariance = r;
    write_histogram_csv(ctx.out / "histogram.csv", r);
    ctx.check("sup_distance", r.sup_distance, r.ks_bound, r.sup_distance < r.ks_bound);
    ctx.check_le("aborted_fraction", static_cast<double>(r.aborted) / static_cast<double>(n), kMaxNodeFraction);
  } else if (mode == "born_rule") {
    Setup s = full_setup(config, true);
    const auto* tb = std::get_if<TwoBranch>(&*s.spec);
    if (!tb) fail(ErrorKind::Validation, "state.name: born_rule needs a two_branch state");
    const EvolutionRecord rec = evolve(*s.psi0, s.prop, s.steps);
    BornRuleOptions o;
    o.eigen.tol = get_or<double>(eb, "eigen_tolerance", o.eigen.tol, "ensemble.");
    o.lambda_tolerance = get_or<double>(eb, "lambda_tolerance", o.lambda_tolerance, "ensemble.");
    o.overlap_threshold = get_or<double>(eb, "overlap_threshold", o.overlap_threshold, "ensemble.");
    o.dt_traj = get_or<double>(eb, "dt_traj", 0.0, "ensemble.");
    const BornRuleResult r = born_rule_test(rec, *tb, n, seed, o);
    rep.aborted_count = r.aborted;
    rep.born_rule = r;
    ctx.check_le("branch_a_z", std::abs(r.z_a), 3.0);
    ctx.check("eigen_hold_fraction", r.eigen_hold_fraction, 0.99, r.eigen_hold_fraction >= 0.99);
    ctx.check("lambda_match_fraction", r.lambda_match_fraction, 0.99, r.lambda_match_fraction >= 0.99);
  } else {
    fail(ErrorKind::Validation, "ensemble.mode: unknown value '" + mode + "'");
  }
  ctx.results["ensemble"] = to_json(rep);
}

void run_verify(Context& ctx) {
  const json& config = ctx.scenario.config;
  const json& vb = block(config, "verify");
  if (vb.contains("cases")) {
    json cases = json::array();
    for (const auto& name : get<std::vector<std::string>>(vb, "cases", "verify.")) {
      const VerifyReport r = verify_case(name);
      const json j = to_json(r);
      write_json(ctx.out / ("verify_" + name + ".json"), j);
      cases.push_back(j);
      ctx.check_le("verify:" + name + ":max_residual", r.max_residual, r.residual_tolerance);
      ctx.check("verify:" + name, r.max_residual, r.residual_tolerance, r.pass);
    }
    ctx.results["cases"] = cases;
  }
  if (vb.contains("spin_demo")) {
    const json& d = vb.at("spin_demo");
    Setup s = full_setup(config, false);
    const Point Q = points_from(json::array({require(d, "Q", "verify.spin_demo.")}), s.grid->dims(), "verify.spin_demo.Q").front();
    const auto n = get_or<std::array<double, 3>>(d, "n", {0.0, 0.0, 1.0}, "verify.spin_demo.");
    const json& post = require(d, "postselection", "verify.spin_demo.");
    Spinor chi{};
    for (std::size_t c = 0; c < 2; ++c) {
      const json& e = post.at(c);
      chi[c] = e.is_number() ? Complex(e.get<double>(), 0.0) : Complex(e.at(0).get<double>(), e.at(1).get<double>());
    }
    const SpinWeakValueDemo r = spin_weak_value_demo(*s.psi0, Q, n, chi);
    ctx.results["spin_demo"] = json{{"pointwise_weak_value", r.pointwise_weak_value},
                                    {"postselected_weak_value", {r.postselected_weak_value.real(), r.postselected_weak_value.imag()}},
                                    {"bound", r.bound},
                                    {"pointwise_within_bound", r.pointwise_within_bound},
                                    {"postselected_exceeds_bound", r.postselected_exceeds_bound}};
    ctx.check_le("pointwise_spin_bound", std::abs(r.pointwise_weak_value), r.bound);
    ctx.check("postselected_exceeds_bound", std::abs(r.postselected_weak_value.real()), r.bound,
              r.postselected_exceeds_bound);
  }
  if (vb.contains("probe")) {
    const json& d = vb.at("probe");
    Setup s = full_setup(config, false);
    const Point Q = points_from(json::array({require(d, "Q", "verify.probe.")}), s.grid->dims(), "verify.probe.Q").front();
    const std::size_t n_max = get_or<std::size_t>(d, "n_max", 1000, "verify.probe.");
    const double tol = tolerance(config, "probe_limit", 1e-6);
    const Observable P = Observable::momentum(0);
    const Complex base = complex_weak_value(sample_point(P, *s.psi0, Q));
    const double beta = base.imag();
    json probes = json::array();
    for (double sign : {1.0, -1.0}) {
      const double gamma = sign * beta;
      const ProbeResult r = robustness_probe(P, *s.psi0, Q, gamma, n_max);
      const std::string name = sign > 0 ? "probe_gamma_plus_beta" : "probe_gamma_minus_beta";
      probes.push_back(json{{"gamma", gamma},
                            {"target", {r.target.real(), r.target.imag()}},
                            {"achieved", {r.achieved.real(), r.achieved.imag()}},
                            {"limit", {r.limit.real(), r.limit.imag()}},
                            {"last_ratio", {r.ratios.back().real(), r.ratios.back().imag()}}});
      ctx.check_le(name, std::abs(r.limit.imag() - gamma), tol);
    }
    ctx.results["probe"] = json{{"Q", Q[0]}, {"base_ratio", {base.real(), base.imag()}}, {"n_max", n_max}, {"runs", probes}};
  }
}

StepScenario step_from(const json& wb, const Physics& ph) {
  StepScenario s;
  s.E = get<double>(wb, "E", "waveguide.");
  s.J0 = get<double>(wb, "J0", "waveguide.");
  s.V0 = get_or<double>(wb, "V0", s.V0, "waveguide.");
  s.mass = ph.mass;
  s.hbar = ph.hbar;
  return s;
}

void run_waveguide(Context& ctx) {
  const json& config = ctx.scenario.config;
  const json& wb = block(config, "waveguide");
  const Physics ph = physics_from(config);
  const Grid grid = grid_from(config);
  const double x_step = get_or<double>(wb, "x_step", 0.0, "waveguide.");
  const std::string mode = get<std::string>(wb, "mode", "waveguide.");
  IdentityOptions io;
  io.fit_tolerance = tolerance(config, "fit", io.fit_tolerance);
  io.chain_tolerance = tolerance(config, "chain", io.chain_tolerance);
  const double vel_tol = tolerance(config, "bohm_velocity", 1e-8);
  StepScenario base = step_from(wb, ph);

  if (mode == "identity") {
    const auto deltas = get<std::vector<double>>(wb, "deltas", "waveguide.");
    json reports = json::array();
    double worst_fit = 0.0, worst_chain = 0.0, worst_vel = 0.0;
    std::vector<IdentityReport> rs(deltas.size());
    parallel_for(deltas.size(), [&](std::size_t i) {
      StepScenario s = base;
      s.V0 = s.E + s.hbar * s.J0 - deltas[i];
      rs[i] = identity_check(s, stationary_step_state(s, grid, x_step), x_step, io);
    });
    for (const auto& r : rs) {
      reports.push_back(to_json(r));
      worst_fit = std::max({worst_fit, r.fit_error, r.pw_error});
      worst_chain = std::max(worst_chain, r.chain_error);
      worst_vel = std::max(worst_vel, r.max_bohm_velocity);
    }
    ctx.results["identity"] = reports;
    write_json(ctx.out / "identity.json", reports);
    ctx.check_le("fit_agreement", worst_fit, io.fit_tolerance);
    ctx.check_le("chain_identity", worst_chain, io.chain_tolerance);
    ctx.check_le("bohm_velocity", worst_vel, vel_tol);
  } else if (mode == "sweep") {
    SweepOptions so;
    so.identity = io;
    so.allowed_window = get_or<double>(wb, "allowed_window", so.allowed_window, "waveguide.");
    const auto sweep = delta_sweep(base, grid, x_step, get<double>(wb, "delta_min", "waveguide."),
                                   get<double>(wb, "delta_max", "waveguide."), get<std::size_t>(wb, "count", "waveguide."), so);
    write_sweep_csv(ctx.out / "sweep.csv", sweep);
    const ContinuityVerdict c = sweep_continuity(sweep);
    double worst_rel = 0.0;
    for (const auto& p : sweep) {
      if (p.v_scale > 0.0) worst_rel = std::max(worst_rel, std::abs(p.v_measured - p.v_scale) / p.v_scale);
    }
    ctx.results["sweep_points"] = sweep.size();
    ctx.results["continuity"] = to_json(c);
    ctx.results["max_relative_speed_error"] = worst_rel;
    ctx.check("sweep_continuity", c.max_ratio, 3.0, c.pass);
    ctx.check_le("speed_agreement", worst_rel, io.fit_tolerance);
  } else {
    fail(ErrorKind::Validation, "waveguide.mode: unknown value '" + mode + "'");
  }
}

}  // namespace

Scenario parse_scenario(json config, fs::path source) {
  if (!config.is_object()) fail(ErrorKind::Validation, "scenario: document must be a JSON object");
  static const std::set<std::string> known{"name", "description", "pipeline", "physics", "grid", "state", "potential",
                                           "propagator", "observables", "trajectories", "ensemble", "verify",
                                           "waveguide", "tolerances", "output"};
  for (const auto& [key, value] : config.items()) {
    if (!known.count(key)) fail(ErrorKind::Validation, key + ": unknown key");
  }
  Scenario s;
  s.name = get<std::string>(config, "name", "");
  s.description = get_or<std::string>(config, "description", "", "");
  s.pipeline = parse_pipeline(get<std::string>(config, "pipeline", ""));
  s.source = std::move(source);

  // Build everything cheap now so that configuration problems surface before any artifact is written.
  switch (s.pipeline) {
    case Pipeline::Evolve:
      full_setup(config, true);
      break;
    case Pipeline::Trajectories:
      full_setup(config, true);
      block(config, "trajectories");
      break;
    case Pipeline::Ensemble: {
      const json& eb = block(config, "ensemble");
      const std::string mode = get<std::string>(eb, "mode", "ensemble.");
      if (mode != "average" && mode != "equivariance" && mode != "born_rule") {
        fail(ErrorKind::Validation, "ensemble.mode: unknown value '" + mode + "'");
      }
      full_setup(config, mode != "average");
      get<std::size_t>(eb, "samples", "ensemble.");
      break;
    }
    case Pipeline::Verify: {
      const json& vb = block(config, "verify");
      if (vb.contains("cases")) {
        const auto& names = verify_case_names();
        for (const auto& c : get<std::vector<std::string>>(vb, "cases", "verify.")) {
          if (std::find(names.begin(), names.end(), c) == names.end()) {
            fail(ErrorKind::Validation, "verify.cases: unknown case '" + c + "'");
          }
        }
      }
      if (vb.contains("spin_demo") || vb.contains("probe")) full_setup(config, false);
      break;
    }
    case Pipeline::Waveguide: {
      grid_from(config);
      const json& wb = block(config, "waveguide");
      step_from(wb, physics_from(config));
      const std::string mode = get<std::string>(wb, "mode", "waveguide.");
      if (mode != "identity" && mode != "sweep") fail(ErrorKind::Validation, "waveguide.mode: unknown value '" + mode + "'");
      break;
    }
  }
  s.config = std::move(config);
  return s;
}

Scenario load_scenario(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Validation, "cannot open scenario " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Validation, path.string() + ": " + e.what());
  }
  return parse_scenario(std::move(j), path);
}

Scenario with_seed(Scenario s, std::uint64_t seed) {
  for (const char* key : {"trajectories", "ensemble"}) {
    if (s.config.contains(key)) s.config[key]["seed"] = seed;
  }
  return s;
}

RunResult run_scenario(const Scenario& scenario, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  Context ctx{scenario, out_dir, json::object(), {}};
  switch (scenario.pipeline) {
    case Pipeline::Evolve: run_evolve(ctx); break;
    case Pipeline::Trajectories: run_trajectories(ctx); break;
    case Pipeline::Ensemble: run_ensemble(ctx); break;
    case Pipeline::Verify: run_verify(ctx); break;
    case Pipeline::Waveguide: run_waveguide(ctx); break;
  }
  RunResult rr;
  rr.checks = ctx.checks;
  rr.pass = std::all_of(ctx.checks.begin(), ctx.checks.end(), [](const Check& c) { return c.pass; });
  json checks = json::array();
  for (const auto& c : ctx.checks) {
    checks.push_back(json{{"name", c.name},
                          {"measured", std::isfinite(c.measured) ? json(c.measured) : json(nullptr)},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass}});
  }
  rr.report = json{{"scenario", scenario.name},
                   {"pipeline", std::string(to_string(scenario.pipeline))},
                   {"config_hash", config_hash(scenario.config)},
                   {"results", ctx.results},
                   {"checks", checks},
                   {"pass", rr.pass}};
  write_json(out_dir / "report.json", rr.report);
  return rr;
}

fs::path scenario_directory() {
  if (const char* env = std::getenv("BOHMLAB_SCENARIOS"); env && *env) return env;
  return BOHMLAB_SCENARIO_DIR;
}

std::vector<ScenarioEntry> list_scenarios(const fs::path& dir) {
  std::vector<ScenarioEntry> out;
  if (!fs::is_directory(dir)) fail(ErrorKind::Configuration, "scenario directory " + dir.string() + " not found");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    const Scenario s = load_scenario(e.path());
    out.push_back({s.name, std::string(to_string(s.pipeline)), s.description, e.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].name == out[i - 1].name) fail(ErrorKind::Validation, "scenario name '" + out[i].name + "' is not unique");
  }
  return out;
}

fs::path resolve_scenario(const std::string& name_or_path) {
  if (fs::is_regular_file(name_or_path)) return name_or_path;
  const fs::path dir = scenario_directory();
  const fs::path direct = dir / (name_or_path + ".json");
  if (fs::is_regular_file(direct)) return direct;
  if (fs::is_directory(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".json") continue;
      std::ifstream in(e.path());
      json j = json::parse(in, nullptr, false);
      if (j.is_object() && j.value("name", "") == name_or_path) return e.path();
    }
  }
  fail(ErrorKind::Validation, "no scenario file or bundled scenario named '" + name_or_path + "'");
}

}  // namespace bohmlab
