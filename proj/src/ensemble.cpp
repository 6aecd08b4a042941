#include "bohmlab/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "bohmlab/errors.hpp"
#include "bohmlab/field_io.hpp"
#include "bohmlab/parallel.hpp"

namespace bohmlab {

using nlohmann::json;

namespace {

// SplitMix64 stream keyed by (seed, sample index): cheap to start per sample,
// so the draws of sample i never depend on how samples are scheduled.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::size_t index)
      : state_(mix(seed) ^ mix(static_cast<std::uint64_t>(index) + 0x632be59bd9b4e019ULL)) {}

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }
  std::uint64_t state_;
};

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kGaussNodes{-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                            0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights{0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                              0.4786286704993665, 0.2369268850561891};

template <class F>
double gauss_legendre(F&& f, double a, double b, std::size_t panels) {
  const double h = (b - a) / static_cast<double>(panels);
  double acc = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = a + (static_cast<double>(p) + 0.5) * h;
    for (std::size_t k = 0; k < kGaussNodes.size(); ++k) acc += kGaussWeights[k] * f(mid + 0.5 * h * kGaussNodes[k]);
  }
  return 0.5 * h * acc;
}

FieldHistory weak_value_fields(const WaveFunction& psi, const Observable& A) {
  FieldRequest req;
  req.observable = A;
  const DerivativeScheme s = resolve_scheme(psi.grid(), A.scheme());
  return FieldHistory(psi, s, Observable::hamiltonian(nullptr, s), req);
}

}  // namespace

std::vector<Point> sample_equilibrium(const WaveFunction& psi0, std::size_t n, std::uint64_t seed) {
  const Grid& grid = psi0.grid();
  const RealField rho = density(psi0);
  std::vector<double> cdf(rho.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    acc += rho[i];
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) fail(ErrorKind::DegenerateState, "cannot sample a vanishing density");
  std::vector<Point> out(n);
  parallel_for(n, [&](std::size_t s) {
    SampleStream gen(seed, s);
    const double u = gen.uniform() * acc;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const std::size_t cell = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), cdf.size() - 1);
    Point q = grid.point(cell);
    for (std::size_t a = 0; a < grid.dims(); ++a) {
      q[a] += (gen.uniform() - 0.5) * grid.spacing(a);
      if (!grid.periodic()) q[a] = std::clamp(q[a], grid.min(a), grid.max(a));
    }
    if (grid.periodic()) q = grid.wrap(q);
    out[s] = q;
  });
  return out;
}

ObservableStats ensemble_average(const WaveFunction& psi, const Observable& A, std::size_t n, std::uint64_t seed) {
  return ensemble_average(psi, A, sample_equilibrium(psi, n, seed));
}

ObservableStats ensemble_average(const WaveFunction& psi, const Observable& A, const std::vector<Point>& points) {
  check_compatible(A, psi.grid(), psi.components());
  ObservableStats st;
  st.observable = A.id();
  st.expectation = expectation(A, psi).value;

  // Cell sum of rho a_w, with a_w formed pointwise and nodes contributing nothing.
  const ComplexField a_psi = apply(A, psi);
  const ComplexField& f = psi.amplitudes();
  double integral = 0.0;
  for (std::size_t p = 0; p < f.points(); ++p) {
    double rho = 0.0, num = 0.0;
    for (std::size_t c = 0; c < f.components(); ++c) {
      const Complex z = f.at(c, p);
      rho += std::norm(z);
      num += (std::conj(z) * a_psi.at(c, p)).real();
    }
    if (rho > 0.0) integral += rho * (num / rho);
  }
  st.grid_integral = integral * psi.grid().cell_volume();
  st.grid_integral_error = std::abs(st.grid_integral - st.expectation) / std::max(1.0, std::abs(st.expectation));
  st.deterministic_pass = st.grid_integral_error <= kGridIntegralTolerance;

  const FieldHistory fields = weak_value_fields(psi, A);
  const LocalForm& form = *fields.form();
  std::vector<std::optional<double>> values(points.size());
  parallel_for(points.size(), [&](std::size_t i) {
    try {
      const LocalJet jet = fields.at(points[i], psi.time());
      values[i] = weak_value(jet_sample(jet, form, points[i]), st.observable).a_w;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Node) throw;
    }
  });
  double sum = 0.0;
  for (const auto& v : values) {
    if (!v) {
      ++st.nodes;
      continue;
    }
    ++st.used;
    sum += *v;
  }
  if (st.used == 0) fail(ErrorKind::Node, "every sample of " + st.observable + " landed on a node");
  st.mean_aw = sum / static_cast<double>(st.used);
  double sq = 0.0;
  for (const auto& v : values) {
    if (v) sq += (*v - st.mean_aw) * (*v - st.mean_aw);
  }
  const double var = st.used > 1 ? sq / static_cast<double>(st.used - 1) : 0.0;
  st.std_error = std::sqrt(var / static_cast<double>(st.used));
  const double diff = st.mean_aw - st.expectation;
  // Off-grid a_w carries an interpolation bias that only matters when the standard error
  // collapses (a_w nearly constant over the packet).
  const double floor = kInterpolationFloor * std::max(1.0, std::abs(st.expectation));
  st.z_score = st.std_error > 0.0 ? diff / st.std_error : (std::abs(diff) <= floor ? 0.0 : std::copysign(HUGE_VAL, diff));
  st.monte_carlo_pass = std::abs(diff) <= kMonteCarloSigmas * st.std_error + floor;
  if (static_cast<double>(st.nodes) > kMaxNodeFraction * static_cast<double>(points.size())) {
    st.warnings.push_back("node rate " + std::to_string(st.nodes) + "/" + std::to_string(points.size()) +
                          " exceeds 1%; statistics are not valid");
  }
  return st;
}

EquivarianceResult equivariance_test(const EvolutionRecord& record, std::size_t n, std::uint64_t seed, double t_check,
                                     const EquivarianceOptions& options) {
  const Grid& grid = record.grid();
  if (grid.dims() != 1) fail(ErrorKind::UnsupportedOperation, "equivariance histograms are 1D only");
  if (options.bins == 0 || n == 0) fail(ErrorKind::Validation, "equivariance test needs bins and samples");
  const FieldHistory fields(record, FieldRequest{});
  TrajectoryOptions topts;
  topts.dt_traj = options.dt_traj;
  topts.t_end = t_check;
  const std::vector<Point> starts = sample_equilibrium(record.snapshots.front(), n, seed);
  const std::vector<Trajectory> trajs = integrate_trajectories(fields, starts, topts);

  EquivarianceResult r;
  r.t_check = t_check;

  // Moments of |psi_t|^2 from the nearest snapshot.
  const auto k = static_cast<std::size_t>(std::llround((t_check - record.t0()) / record.spacing()));
  const WaveFunction& snap = record.snapshots[std::min(k, record.snapshots.size() - 1)];
  const RealField rho = density(snap);
  double m0 = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    const double x = grid.coordinate(0, i);
    m0 += rho[i];
    m1 += rho[i] * x;
    m2 += rho[i] * x * x;
  }
  const double mu = m1 / m0;
  const double sigma = std::sqrt(std::max(m2 / m0 - mu * mu, 0.0));
  double lo = mu - options.half_width_sigmas * sigma;
  double hi = mu + options.half_width_sigmas * sigma;
  if (!grid.periodic()) {
    lo = std::max(lo, grid.min(0));
    hi = std::min(hi, grid.max(0));
  }
  const std::size_t bins = options.bins;
  r.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) r.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);

  r.counts.assign(bins, 0);
  const double L = grid.length(0);
  for (const auto& tr : trajs) {
    if (!tr.completed()) {
      ++r.aborted;
      continue;
    }
    ++r.completed;
    double x = tr.back().Q[0];
    // Periodic images are folded into the window centred on the packet.
    if (grid.periodic()) x -= L * std::floor((x - (mu - 0.5 * L)) / L);
    if (x < lo) {
      ++r.underflow;
    } else if (x >= hi) {
      ++r.overflow;
    } else {
      const auto b = std::min(bins - 1, static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins)));
      ++r.counts[b];
    }
  }

  const auto rho_at = [&](double x) { return fields.at({x, 0.0}, t_check).rho; };
  double total = 0.0;
  r.reference.resize(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    r.reference[b] = gauss_legendre(rho_at, r.edges[b], r.edges[b + 1], 2);
    total += r.reference[b];
  }
  const double mass = m0 * grid.cell_volume();
  for (double& v : r.reference) v /= mass;
  total /= mass;
  const double tail = std::max(0.0, 1.0 - total) / 2.0;

  r.ks_bound = r.completed > 0 ? 1.63 / std::sqrt(static_cast<double>(r.completed)) : 0.0;
  if (r.completed > 0) {
    const double nc = static_cast<double>(r.completed);
    double emp = static_cast<double>(r.underflow) / nc;
    double ref = tail;
    r.sup_distance = std::abs(emp - ref);
    std::size_t used_bins = 0;
    for (std::size_t b = 0; b < bins; ++b) {
      emp += static_cast<double>(r.counts[b]) / nc;
      ref += r.reference[b];
      r.sup_distance = std::max(r.sup_distance, std::abs(emp - ref));
      const double expected = r.reference[b] * nc;
      if (expected >= 5.0) {
        r.chi_square += std::pow(static_cast<double>(r.counts[b]) - expected, 2) / expected;
        ++used_bins;
      }
    }
    r.chi_square_dof = used_bins > 0 ? used_bins - 1 : 0;
  }
  r.inconclusive = static_cast<double>(r.aborted) > kMaxNodeFraction * static_cast<double>(n);
  r.pass = !r.inconclusive && r.completed > 0 && r.sup_distance < r.ks_bound;
  return r;
}

BornRuleResult born_rule_test(const EvolutionRecord& record, const TwoBranch& spec, std::size_t n,
                              std::uint64_t seed, const BornRuleOptions& options) {
  const Grid& grid = record.grid();
  const Physics& ph = record.physics();
  if (record.potential) fail(ErrorKind::Configuration, "born rule test expects free evolution");
  BornRuleResult r;
  r.weight_a = branch_weight(grid, spec, ph);
  r.weight_b = 1.0 - r.weight_a;

  FieldRequest req;
  req.observable = Observable::momentum(0);
  const FieldHistory fields(record, req);
  const LocalForm& form = *fields.form();
  TrajectoryOptions topts;
  topts.dt_traj = options.dt_traj;
  const std::vector<Point> starts = sample_equilibrium(record.snapshots.front(), n, seed);
  const std::vector<Trajectory> trajs = integrate_trajectories(fields, starts, topts);

  const double T = fields.t_end();
  const std::size_t dims = grid.dims();
  const auto branch_max = [&](const GaussianPacket& g) {
    Point c = g.x0;
    for (std::size_t a = 0; a < dims; ++a) c[a] += ph.hbar * g.k0[a] / ph.mass * (T - record.t0());
    return std::norm(free_gaussian_value(g, c, T - record.t0(), ph, dims));
  };
  const double max_a = branch_max(spec.a);
  const double max_b = branch_max(spec.b);
  const double hk_a = ph.hbar * spec.a.k0[0];
  const double hk_b = ph.hbar * spec.b.k0[0];

  enum class Verdict { A, B, Excluded, Aborted };
  struct Outcome {
    Verdict branch = Verdict::Aborted;
    bool holds = false;
    bool lambda_match = false;
  };
  std::vector<Outcome> outcomes(trajs.size());
  parallel_for(trajs.size(), [&](std::size_t i) {
    const Trajectory& tr = trajs[i];
    Outcome& o = outcomes[i];
    if (!tr.completed()) return;
    const Point Q = grid.wrap(tr.back().Q);
    const double ra = std::norm(free_gaussian_value(spec.a, Q, T - record.t0(), ph, dims)) / max_a;
    const double rb = std::norm(free_gaussian_value(spec.b, Q, T - record.t0(), ph, dims)) / max_b;
    if (ra > options.overlap_threshold && rb > options.overlap_threshold) {
      o.branch = Verdict::Excluded;
      return;
    }
    o.branch = ra >= rb ? Verdict::A : Verdict::B;
    const double hk = o.branch == Verdict::A ? hk_a : hk_b;
    try {
      const ActualValueVerdict v = eigen_verdict(jet_sample(fields.at(tr.back().Q, T), form, tr.back().Q), options.eigen);
      o.holds = v.holds;
      o.lambda_match = v.holds && std::abs(*v.lambda - hk) <= options.lambda_tolerance * std::abs(hk);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Node) throw;
    }
  });

  std::size_t holds = 0, matches = 0;
  for (const auto& o : outcomes) {
    switch (o.branch) {
      case Verdict::A: ++r.count_a; break;
      case Verdict::B: ++r.count_b; break;
      case Verdict::Excluded: ++r.excluded; break;
      case Verdict::Aborted: ++r.aborted; break;
    }
    if (o.holds) ++holds;
    if (o.lambda_match) ++matches;
  }
  const std::size_t assigned = r.count_a + r.count_b;
  if (assigned == 0) fail(ErrorKind::DegenerateState, "no trajectory could be assigned to a branch");
  const double na = static_cast<double>(assigned);
  r.frequency_a = static_cast<double>(r.count_a) / na;
  r.frequency_b = static_cast<double>(r.count_b) / na;
  r.std_error = std::sqrt(r.weight_a * r.weight_b / na);
  r.z_a = r.std_error > 0.0 ? (r.frequency_a - r.weight_a) / r.std_error : 0.0;
  r.z_b = r.std_error > 0.0 ? (r.frequency_b - r.weight_b) / r.std_error : 0.0;
  r.eigen_hold_fraction = static_cast<double>(holds) / na;
  r.lambda_match_fraction = static_cast<double>(matches) / na;
  r.pass = std::abs(r.z_a) <= 3.0 && r.eigen_hold_fraction >= 0.99 && r.lambda_match_fraction >= 0.99 &&
           static_cast<double>(r.aborted) <= kMaxNodeFraction * static_cast<double>(n);
  return r;
}

bool EnsembleReport::pass() const {
  for (const auto& o : observables) {
    if (!o.deterministic_pass || !o.monte_carlo_pass) return false;
  }
  if (equivariance && !equivariance->pass) return false;
  if (born_rule && !born_rule->pass) return false;
  return true;
}

json to_json(const ObservableStats& s) {
  return json{{"observable", s.observable},
              {"used", s.used},
              {"nodes", s.nodes},
              {"mean_aw", s.mean_aw},
              {"std_error", s.std_error},
              {"expectation", s.expectation},
              {"z_score", std::isfinite(s.z_score) ? json(s.z_score) : json(nullptr)},
              {"grid_integral", s.grid_integral},
              {"grid_integral_error", s.grid_integral_error},
              {"deterministic_pass", s.deterministic_pass},
              {"monte_carlo_pass", s.monte_carlo_pass},
              {"warnings", s.warnings}};
}

json to_json(const EquivarianceResult& r) {
  return json{{"t_check", r.t_check},
              {"bins", r.counts.size()},
              {"edges", r.edges},
              {"counts", r.counts},
              {"underflow", r.underflow},
              {"overflow", r.overflow},
              {"reference", r.reference},
              {"sup_distance", r.sup_distance},
              {"ks_bound", r.ks_bound},
              {"chi_square", r.chi_square},
              {"chi_square_dof", r.chi_square_dof},
              {"completed", r.completed},
              {"aborted", r.aborted},
              {"inconclusive", r.inconclusive},
              {"pass", r.pass}};
}

json to_json(const BornRuleResult& r) {
  return json{{"weights", {r.weight_a, r.weight_b}},
              {"counts", {r.count_a, r.count_b}},
              {"frequencies", {r.frequency_a, r.frequency_b}},
              {"z_scores", {r.z_a, r.z_b}},
              {"std_error", r.std_error},
              {"excluded", r.excluded},
              {"aborted", r.aborted},
              {"eigen_hold_fraction", r.eigen_hold_fraction},
              {"lambda_match_fraction", r.lambda_match_fraction},
              {"pass", r.pass}};
}

json to_json(const EnsembleReport& r) {
  json obs = json::array();
  for (const auto& o : r.observables) obs.push_back(to_json(o));
  json j{{"n_samples", r.n_samples},
         {"seed", r.seed},
         {"aborted_count", r.aborted_count},
         {"observables", obs},
         {"warnings", r.warnings},
         {"pass", r.pass()}};
  j["equivariance"] = r.equivariance ? to_json(*r.equivariance) : json(nullptr);
  j["born_rule"] = r.born_rule ? to_json(*r.born_rule) : json(nullptr);
  return j;
}

void write_histogram_csv(const std::filesystem::path& path, const EquivarianceResult& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Configuration, "cannot write " + path.string());
  const double nc = r.completed > 0 ? static_cast<double>(r.completed) : 1.0;
  out << "lo,hi,count,empirical,reference\n";
  for (std::size_t b = 0; b < r.counts.size(); ++b) {
    out << format_double(r.edges[b]) << ',' << format_double(r.edges[b + 1]) << ',' << r.counts[b] << ','
        << format_double(static_cast<double>(r.counts[b]) / nc) << ',' << format_double(r.reference[b]) << '\n';
  }
}

}  // namespace bohmlab
