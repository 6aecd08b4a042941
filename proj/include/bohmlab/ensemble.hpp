#pragma once

// Equilibrium ensembles: |psi|^2 sampling, ensemble averages of weak actual
// values, histogram equivariance checks and the two-branch frequency test.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohmlab/guidance.hpp"

namespace bohmlab {

/// n points drawn from the cell measure rho dx^d with uniform jitter inside each cell.
/// Sample i depends only on (seed, i).
std::vector<Point> sample_equilibrium(const WaveFunction& psi0, std::size_t n, std::uint64_t seed);

struct ObservableStats {
  std::string observable;
  std::size_t used = 0;     // samples that were not at a node
  std::size_t nodes = 0;
  double mean_aw = 0.0;
  double std_error = 0.0;
  double expectation = 0.0;
  double z_score = 0.0;
  double grid_integral = 0.0;  // sum over cells of rho a_w dx^d
  double grid_integral_error = 0.0;  // |grid_integral - expectation| / max(1, |expectation|)
  bool deterministic_pass = false;
  bool monte_carlo_pass = false;
  std::vector<std::string> warnings;
};

inline constexpr double kGridIntegralTolerance = 1e-8;
inline constexpr double kMonteCarloSigmas = 4.0;
inline constexpr double kMaxNodeFraction = 0.01;
inline constexpr double kInterpolationFloor = 1e-6;  // relative, added to the Monte-Carlo band

ObservableStats ensemble_average(const WaveFunction& psi, const Observable& A, std::size_t n, std::uint64_t seed);
/// Same, on points sampled by the caller.
ObservableStats ensemble_average(const WaveFunction& psi, const Observable& A, const std::vector<Point>& points);

struct EquivarianceResult {
  double t_check = 0.0;
  std::vector<double> edges;        // bins + 1 edges on axis 0
  std::vector<std::size_t> counts;  // per bin, completed trajectories
  std::size_t underflow = 0;
  std::size_t overflow = 0;
  std::vector<double> reference;    // integral of |psi_t|^2 over each bin
  double sup_distance = 0.0;        // max over edges of |F_empirical - F_reference|
  double ks_bound = 0.0;
  double chi_square = 0.0;
  std::size_t chi_square_dof = 0;
  std::size_t completed = 0;
  std::size_t aborted = 0;
  bool inconclusive = false;
  bool pass = false;
};

struct EquivarianceOptions {
  std::size_t bins = 64;
  double half_width_sigmas = 5.0;
  double dt_traj = 0.0;
};

/// 1D records only. Bins cover mean +- 5 std of |psi_t|^2.
EquivarianceResult equivariance_test(const EvolutionRecord& record, std::size_t n, std::uint64_t seed, double t_check,
                                     const EquivarianceOptions& options = {});

struct BornRuleOptions {
  EigenTolerance eigen{0.05, 1e-12};
  double lambda_tolerance = 0.05;   // relative to the branch hbar k
  double overlap_threshold = 1e-8;  // relative branch density marking an ambiguous point
  double dt_traj = 0.0;
};

struct BornRuleResult {
  double weight_a = 0.0;
  double weight_b = 0.0;
  std::size_t count_a = 0;
  std::size_t count_b = 0;
  std::size_t excluded = 0;
  std::size_t aborted = 0;
  double frequency_a = 0.0;
  double frequency_b = 0.0;
  double std_error = 0.0;
  double z_a = 0.0;
  double z_b = 0.0;
  double eigen_hold_fraction = 0.0;
  double lambda_match_fraction = 0.0;
  bool pass = false;
};

/// Free two-branch state evolved in `record` (its first snapshot must be the sampled
/// TwoBranch state). Branch membership at the end of the record uses the closed-form
/// free packets.
BornRuleResult born_rule_test(const EvolutionRecord& record, const TwoBranch& spec, std::size_t n,
                              std::uint64_t seed, const BornRuleOptions& options = {});

struct EnsembleReport {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::size_t aborted_count = 0;
  std::vector<ObservableStats> observables;
  std::optional<EquivarianceResult> equivariance;
  std::optional<BornRuleResult> born_rule;
  std::vector<std::string> warnings;

  bool pass() const;
};

nlohmann::json to_json(const ObservableStats& s);
nlohmann::json to_json(const EquivarianceResult& r);
nlohmann::json to_json(const BornRuleResult& r);
nlohmann::json to_json(const EnsembleReport& r);
/// Columns lo, hi, count, empirical, reference.
void write_histogram_csv(const std::filesystem::path& path, const EquivarianceResult& r);

}  // namespace bohmlab
