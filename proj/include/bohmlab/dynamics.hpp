#pragma once

// Weak actual values along trajectories and the three-term evolution equation
// they obey, plus the scripted verification cases.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bohmlab/guidance.hpp"

namespace bohmlab {

struct EvolutionTerms {
  double t = 0.0;
  double a_w = 0.0;
  double quantum_dynamical = 0.0;
  double convective = 0.0;
  double divergence_correction = 0.0;
  double rhs_total = 0.0;
  double lhs_fd = 0.0;
  double residual = 0.0;
};

/// Holds the space-time fields one observable needs along trajectories of one record.
class TermsEvaluator {
 public:
  TermsEvaluator(const EvolutionRecord& record, const Observable& A);

  const FieldHistory& fields() const noexcept { return fields_; }
  const Observable& observable() const noexcept { return A_; }

  WeakValueRecord weak_value(const Point& Q, double t) const;
  /// Right-hand side terms at (Q, t); lhs_fd and residual are left at zero.
  EvolutionTerms rhs(const Point& Q, double t) const;
  /// Full terms at an interior trajectory sample; throws an endpoint error at either end.
  EvolutionTerms terms(const Trajectory& traj, std::size_t sample_index) const;

 private:
  Observable A_;
  FieldHistory fields_;
  LocalForm form_;
};

/// Weak actual value at every sample; samples at nodes are empty.
std::vector<std::optional<WeakValueRecord>> aw_along(const Trajectory& traj, const TermsEvaluator& eval);
std::vector<std::optional<WeakValueRecord>> aw_along(const Trajectory& traj, const EvolutionRecord& record,
                                                     const Observable& A);

EvolutionTerms evolution_terms(const Trajectory& traj, const EvolutionRecord& record, const Observable& A,
                               std::size_t sample_index);

/// Re[psi^dagger (dA/dt) psi]/rho at Q with dA/dt supplied as an observable at psi's time.
double time_dependent_correction(const std::function<Observable(double)>& dA_dt, const WaveFunction& psi,
                                 const Point& Q);

struct VerifyCheck {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::string name;
  std::string observable;
  EvolutionTerms terms;          // at the middle sample
  EvolutionTerms expected;       // analytic values at the same sample
  double max_residual = 0.0;     // over all interior samples
  double residual_tolerance = 0.0;
  double term_tolerance = 0.0;
  std::vector<VerifyCheck> checks;
  bool pass = false;
};

const std::vector<std::string>& verify_case_names();
/// Runs one scripted case on a 1D grid of 1024 points. Unknown names raise a validation error.
VerifyReport verify_case(const std::string& name);
nlohmann::json to_json(const VerifyReport& report);
nlohmann::json to_json(const EvolutionTerms& terms);

/// Spinor weak values at one point of a non-separable spinor state.
struct SpinWeakValueDemo {
  double pointwise_weak_value = 0.0;  // Re[psi^dagger S psi]/psi^dagger psi
  Complex postselected_weak_value;    // chi^dagger S psi / chi^dagger psi
  double bound = 0.0;                 // hbar/2
  bool pointwise_within_bound = false;
  bool postselected_exceeds_bound = false;
};

SpinWeakValueDemo spin_weak_value_demo(const WaveFunction& psi, const Point& Q, const std::array<double, 3>& n,
                                       const Spinor& postselection);

}  // namespace bohmlab
