#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>

#include "bohmlab/ensemble.hpp"
#include "bohmlab/errors.hpp"
#include "bohmlab/parallel.hpp"
#include "oracles.hpp"

using namespace bohmlab;
using oracle::I;

namespace {

Propagator split(double dt, std::size_t stride = 1, std::shared_ptr<const RealField> V = nullptr) {
  Propagator p;
  p.dt = dt;
  p.stride = stride;
  p.potential = std::move(V);
  if (p.potential) p.potential_id = "V";
  return p;
}

struct Oscillator {
  Grid grid = Grid::line(-12.0, 12.0, 256, Boundary::Periodic);
  std::shared_ptr<const RealField> V = std::make_shared<RealField>(harmonic_potential(grid, 1.0, {}, {}));
  WaveFunction psi = analytic_state(grid, HOGround{1.0, {}}, {});
};

// Largest gap between the empirical CDF of xs and the exact one.
template <class Cdf>
double ks_distance(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  return d;
}

}  // namespace

TEST_CASE("sampling a plane wave gives the uniform distribution") {
  const Grid g = Grid::line(0.0, 20.0, 128, Boundary::Periodic);
  const auto psi = analytic_state(g, PlaneWave{{2.0 * oracle::pi * 2.0 / 20.0, 0.0}}, {});
  const auto pts = sample_equilibrium(psi, 20000, 11);
  std::vector<double> xs;
  for (const auto& p : pts) {
    REQUIRE(p[0] >= 0.0);
    REQUIRE(p[0] < 20.0);
    xs.push_back(p[0]);
  }
  CHECK(ks_distance(xs, [](double x) { return x / 20.0; }) < 1.63 / std::sqrt(20000.0));
}

TEST_CASE("sampling is a deterministic function of seed and index") {
  const Oscillator o;
  const auto a = sample_equilibrium(o.psi, 500, 5);
  const auto b = sample_equilibrium(o.psi, 2000, 5);
  const auto c = sample_equilibrium(o.psi, 500, 6);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  CHECK(a != c);
}

TEST_CASE("oscillator ground-state samples have variance hbar/2m omega") {
  const Oscillator o;
  const std::size_t n = 100000;
  const auto pts = sample_equilibrium(o.psi, n, 1);
  double s = 0.0, s2 = 0.0;
  for (const auto& p : pts) {
    s += p[0];
    s2 += p[0] * p[0];
  }
  const double mean = s / n, var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 * std::sqrt(0.5 / n));
  // sampling error of a Gaussian variance is var sqrt(2/n)
  CHECK(std::abs(var - 0.5) < 4.0 * 0.5 * std::sqrt(2.0 / n) + 1e-4);
  std::vector<double> xs;
  for (const auto& p : pts) xs.push_back(p[0]);
  CHECK(ks_distance(xs, [](double x) { return 0.5 * std::erfc(-x); }) < 1.63 / std::sqrt(double(n)) + 2e-3);
}

TEST_CASE("two-branch samples split by branch weight") {
  const Grid g = Grid::line(-40.0, 40.0, 1024, Boundary::Periodic);
  TwoBranch tb;
  tb.a = GaussianPacket{{-15.0, 0.0}, {2.0, 1.0}, {3.0, 0.0}};
  tb.b = GaussianPacket{{15.0, 0.0}, {2.0, 1.0}, {-3.0, 0.0}};
  tb.weight_a = 0.3;
  const auto psi = analytic_state(g, tb, {});
  const std::size_t n = 20000;
  const auto pts = sample_equilibrium(psi, n, 9);
  const double fa = std::count_if(pts.begin(), pts.end(), [](const Point& p) { return p[0] < 0.0; }) / double(n);
  const double w = branch_weight(g, tb, {});
  CHECK(w == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(std::abs(fa - w) < 4.0 * std::sqrt(w * (1 - w) / n));
}

TEST_CASE("plane-wave momentum average is exact") {
  const double k = 2.0 * oracle::pi * 3.0 / 20.0;
  const Grid g = Grid::line(0.0, 20.0, 128, Boundary::Periodic);
  const auto psi = analytic_state(g, PlaneWave{{k, 0.0}}, {});
  const auto st = ensemble_average(psi, Observable::momentum(0), 1000, 3);
  CHECK(st.used == 1000);
  CHECK(st.nodes == 0);
  CHECK(st.mean_aw == doctest::Approx(k).epsilon(1e-9));
  CHECK(st.std_error < 1e-9);
  CHECK(st.expectation == doctest::Approx(k).epsilon(1e-12));
  CHECK(st.deterministic_pass);
  CHECK(st.monte_carlo_pass);
}

TEST_CASE("oscillator energy average is hbar omega / 2") {
  const Oscillator o;
  const auto st = ensemble_average(o.psi, Observable::hamiltonian(o.V), 20000, 4);
  CHECK(st.expectation == doctest::Approx(0.5).epsilon(1e-8));
  // a_w of H on a real eigenstate is the eigenvalue everywhere
  CHECK(st.mean_aw == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(st.deterministic_pass);
  CHECK(st.monte_carlo_pass);
}

TEST_CASE("Gaussian packet momentum and position averages") {
  const Grid g = Grid::line(-20.0, 20.0, 1024, Boundary::Periodic);
  const auto psi = analytic_state(g, GaussianPacket{{1.0, 0.0}, {1.5, 1.0}, {2.0, 0.0}}, {});
  const auto p = ensemble_average(psi, Observable::momentum(0), 20000, 8);
  CHECK(p.expectation == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(p.deterministic_pass);
  CHECK(p.monte_carlo_pass);
  const auto x = ensemble_average(psi, Observable::position(0), 20000, 8);
  CHECK(x.expectation == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::abs(x.z_score) < 4.0);
  CHECK(x.std_error == doctest::Approx(1.5 / std::sqrt(20000.0)).epsilon(0.05));
  CHECK(x.monte_carlo_pass);
}

TEST_CASE("off-grid momentum a_w bias falls as dx^4") {
  // a_w = k0 exactly at t = 0, so the sample mean is pure interpolation error
  std::vector<double> bias;
  for (std::size_t n : {256, 512, 1024}) {
    const Grid g = Grid::line(-20.0, 20.0, n, Boundary::Periodic);
    const auto psi = analytic_state(g, GaussianPacket{{1.0, 0.0}, {1.5, 1.0}, {2.0, 0.0}}, {});
    bias.push_back(std::abs(ensemble_average(psi, Observable::momentum(0), 5000, 8).mean_aw - 2.0));
  }
  for (std::size_t i = 1; i < bias.size(); ++i) {
    const double ratio = bias[i - 1] / bias[i];
    CHECK(ratio > 12.0);
    CHECK(ratio < 20.0);
  }
  CHECK(bias.back() < kInterpolationFloor * 2.0);
}

TEST_CASE("grid integral of rho a_w reproduces the expectation") {
  const Grid g = Grid::line(-12.0, 12.0, 256, Boundary::Periodic);
  const auto V = std::make_shared<RealField>(harmonic_potential(g, 1.0, {}, {}));
  const std::vector<Observable> obs{Observable::position(0), Observable::momentum(0), Observable::hamiltonian(V),
                                    Observable::kinetic()};
  const std::vector<WaveFunction> states{
      analytic_state(g, HOGround{1.0, {}}, {}),
      analytic_state(g, GaussianPacket{{-1.0, 0.0}, {1.2, 1.0}, {1.5, 0.0}}, {}),
      analytic_state(g, GaussianPacket{{2.0, 0.0}, {0.8, 1.0}, {-0.5, 0.0}}, {}, StateOptions{std::nullopt, 1.3}),
  };
  for (const auto& psi : states) {
    for (const auto& A : obs) {
      const auto st = ensemble_average(psi, A, 10, 1);
      CHECK(st.grid_integral_error < kGridIntegralTolerance);
      CHECK(st.deterministic_pass);
    }
  }

  const auto sp = analytic_state(g, GaussianPacket{{0.0, 0.0}, {1.0, 1.0}, {1.0, 0.0}}, {},
                                 StateOptions{Spinor{Complex(0.6, 0.0), Complex(0.0, 0.8)}, 0.0});
  for (const auto& A : {Observable::spin({0, 0, 1}), Observable::spin({1, 0, 0}), Observable::momentum(0)}) {
    const auto st = ensemble_average(sp, A, 10, 1);
    CHECK(st.grid_integral_error < kGridIntegralTolerance);
  }
  CHECK(ensemble_average(sp, Observable::spin({0, 0, 1}), 10, 1).expectation ==
        doctest::Approx(0.5 * (0.36 - 0.64)).epsilon(1e-10));
}

TEST_CASE("ensemble averages do not depend on the thread count") {
  const Grid g = Grid::line(-20.0, 20.0, 512, Boundary::Periodic);
  const auto psi = analytic_state(g, GaussianPacket{{1.0, 0.0}, {1.5, 1.0}, {2.0, 0.0}}, {});
  set_thread_count(1);
  const auto a = to_json(ensemble_average(psi, Observable::kinetic(), 5000, 2)).dump();
  set_thread_count(4);
  const auto b = to_json(ensemble_average(psi, Observable::kinetic(), 5000, 2)).dump();
  set_thread_count(0);
  CHECK(a == b);
}

TEST_CASE("equivariance on a stationary state and a moving coherent state") {
  const Oscillator o;
  {
    const auto rec = evolve(o.psi, split(0.01, 10, o.V), 100);
    const auto r = equivariance_test(rec, 4000, 3, 1.0);
    CHECK(r.completed + r.aborted == 4000);
    CHECK(r.aborted == 0);
    CHECK(r.counts.size() == 64);
    CHECK(r.edges.size() == 65);
    CHECK(r.sup_distance <= r.ks_bound);
    CHECK(r.pass);
  }
  {
    const auto psi = analytic_state(o.grid, GaussianPacket{{3.0, 0.0}, {std::sqrt(0.5), 1.0}, {}}, {});
    const auto rec = evolve(psi, split(0.005, 10, o.V), 400);
    const auto r = equivariance_test(rec, 4000, 5, 2.0, EquivarianceOptions{32, 5.0, 0.005});
    CHECK(r.completed + r.aborted == 4000);
    double ref = 0.0;
    std::size_t counted = r.underflow + r.overflow;
    for (std::size_t b = 0; b < r.counts.size(); ++b) {
      ref += r.reference[b];
      counted += r.counts[b];
    }
    CHECK(counted == r.completed);
    CHECK(ref == doctest::Approx(1.0).epsilon(1e-3));
    // coherent state centre moves as 3 cos t
    const double mid = 0.5 * (r.edges.front() + r.edges.back());
    CHECK(mid == doctest::Approx(3.0 * std::cos(2.0)).epsilon(1e-2));
    CHECK(r.pass);

    const auto dir = std::filesystem::temp_directory_path() / "bohmlab_test_hist";
    std::filesystem::create_directories(dir);
    write_histogram_csv(dir / "h.csv", r);
    std::ifstream in(dir / "h.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "lo,hi,count,empirical,reference");
    std::filesystem::remove_all(dir);
  }
}

TEST_CASE("branch frequencies follow the Born weights") {
  const Grid g = Grid::line(-256.0, 256.0, 2048, Boundary::Periodic);
  TwoBranch tb;
  tb.a = GaussianPacket{{-90.0, 0.0}, {12.5, 1.0}, {4.0, 0.0}};
  tb.b = GaussianPacket{{90.0, 0.0}, {12.5, 1.0}, {-4.0, 0.0}};
  tb.weight_a = 0.3;
  const auto psi = analytic_state(g, tb, {});
  const auto rec = evolve(psi, split(0.01, 10), 200);
  const auto r = born_rule_test(rec, tb, 2000, 3);
  CHECK(r.count_a + r.count_b + r.excluded + r.aborted == 2000);
  CHECK(r.weight_a == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(r.weight_b == doctest::Approx(0.7).epsilon(1e-6));
  CHECK(std::abs(r.z_a) < 4.0);
  CHECK(r.eigen_hold_fraction > 0.95);
  CHECK(r.lambda_match_fraction > 0.95);
  CHECK(r.pass);
}
