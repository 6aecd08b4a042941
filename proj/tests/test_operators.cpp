#include <doctest.h>

#include <memory>
#include <random>

#include "bohmlab/calculus.hpp"
#include "bohmlab/errors.hpp"
#include "bohmlab/evolution.hpp"
#include "bohmlab/interpolation.hpp"
#include "bohmlab/operators.hpp"
#include "oracles.hpp"

using namespace bohmlab;
using oracle::I;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::Validation;
}

std::shared_ptr<const RealField> ho_potential(const Grid& g, double omega) {
  return std::make_shared<const RealField>(harmonic_potential(g, omega, {}, Physics{}));
}

}  // namespace

TEST_CASE("momentum on a plane wave is exact with the spectral scheme") {
  const double L = 20.0, k = 2.0 * oracle::pi * 3.0 / L;
  const Grid g = Grid::line(0.0, L, 128, Boundary::Periodic);
  const auto psi = oracle::sample(g, [&](double x) { return std::exp(I * k * x); });
  const ComplexField p = apply(Observable::momentum(0), psi);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(p.at(0, i) - k * psi.amplitudes().at(0, i)) < 1e-12);
}

TEST_CASE("oscillator Hamiltonian with second-order differences") {
  double previous = 0.0;
  for (std::size_t n : {400u, 800u}) {
    const Grid g = Grid::line(-10.0, 10.0, n, Boundary::Box);
    const auto psi = oracle::sample(g, [](double x) { return oracle::ho_state(0, x, 1.0); });
    const Observable H = Observable::hamiltonian(ho_potential(g, 1.0), DerivativeScheme::CentralFD2);
    const ComplexField h = apply(H, psi);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g.coordinate(0, i)) > 3.0) continue;
      worst = std::max(worst, std::abs(h.at(0, i) / psi.amplitudes().at(0, i) - 0.5));
    }
    const double dx = g.spacing(0);
    CHECK(worst < 2.0 * dx * dx);  // psi''''/psi = x^4 - 6x^2 + 3 peaks at 30 on |x| <= 3
    if (previous > 0.0) CHECK(previous / worst == doctest::Approx(4.0).epsilon(0.05));
    previous = worst;
  }
}

TEST_CASE("momentum of a Gaussian packet against the closed-form derivative") {
  const oracle::Packet pk{0.5, 1.2, 1.7};
  const Grid gp = Grid::line(-16.0, 16.0, 512, Boundary::Periodic);
  const auto psi = oracle::sample(gp, [&](double x) { return pk.value(x, 0.0); });
  const ComplexField p = apply(Observable::momentum(0), psi);
  for (std::size_t i = 0; i < gp.size(); ++i) {
    const double x = gp.coordinate(0, i);
    const Complex ref = -I * pk.log_derivative(x, 0.0) * pk.value(x, 0.0);
    CHECK(std::abs(p.at(0, i) - ref) < 1e-10);
  }

  const Grid gb = Grid::line(-16.0, 16.0, 1601, Boundary::Box);
  const auto psib = oracle::sample(gb, [&](double x) { return pk.value(x, 0.0); });
  const ComplexField pb = apply(Observable::momentum(0), psib);  // fourth-order differences by default
  double worst = 0.0;
  for (std::size_t i = 0; i < gb.size(); ++i) {
    const double x = gb.coordinate(0, i);
    worst = std::max(worst, std::abs(pb.at(0, i) + I * pk.log_derivative(x, 0.0) * pk.value(x, 0.0)));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("operator compatibility errors") {
  const Grid box = Grid::line(-5.0, 5.0, 64, Boundary::Box);
  const auto psi = oracle::sample(box, [](double x) { return std::exp(-x * x); });
  CHECK(kind_of([&] { (void)apply(Observable::momentum(0, DerivativeScheme::Spectral), psi); }) ==
        ErrorKind::Configuration);
  CHECK(kind_of([&] { (void)apply(Observable::spin({0, 0, 1}), psi); }) == ErrorKind::Shape);
  CHECK(kind_of([&] { (void)Observable::spin({0, 0, 2}); }) == ErrorKind::Validation);
}

TEST_CASE("local eigencondition examples") {
  const Grid g = Grid::line(0.0, 20.0, 256, Boundary::Periodic);
  const auto gauss = oracle::sample(g, [](double x) { return std::exp(-(x - 10) * (x - 10) / 4.0 + 0.7 * I * x); });
  for (double Q : {8.3, 10.0, 11.71}) {
    const auto v = local_eigen_check(Observable::position(0), gauss, {Q, 0.0});
    CHECK(v.holds);
    REQUIRE(v.lambda);
    CHECK(*v.lambda == doctest::Approx(Q).epsilon(1e-12));
  }

  const double k = 2.0 * oracle::pi * 3.0 / 20.0;
  const auto plane = oracle::sample(g, [&](double x) { return std::exp(I * k * x); });
  for (double Q : {0.0, 3.33, 17.9}) {
    const auto v = local_eigen_check(Observable::momentum(0), plane, {Q, 0.0});
    CHECK(v.holds);
    CHECK(*v.lambda == doctest::Approx(k).epsilon(1e-10));
  }

  const double kappa = 0.8;
  const Grid box = Grid::line(0.0, 10.0, 2001, Boundary::Box);
  const auto ev = oracle::sample(box, [&](double x) { return std::exp(-kappa * x); });
  const auto v = local_eigen_check(Observable::momentum(0), ev, {3.1, 0.0});
  CHECK_FALSE(v.holds);
  CHECK_FALSE(v.lambda);
  // -i hbar (-kappa) = i hbar kappa
  CHECK(v.ratio.imag() == doctest::Approx(kappa).epsilon(1e-6));
  CHECK(std::abs(v.ratio.real()) < 1e-8);
  CHECK(v.imag_fraction == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("node points raise node errors") {
  const Grid g = Grid::line(-8.0, 8.0, 256, Boundary::Periodic);
  const auto first = oracle::sample(g, [](double x) { return oracle::ho_state(1, x, 1.0); });
  CHECK(kind_of([&] { (void)local_eigen_check(Observable::momentum(0), first, {0.0, 0.0}); }) == ErrorKind::Node);
  CHECK(kind_of([&] { (void)weak_actual_value(Observable::momentum(0), first, {0.0, 0.0}); }) == ErrorKind::Node);
}

TEST_CASE("weak actual value examples") {
  const double k = 2.0 * oracle::pi * 2.0 / 20.0;
  const Grid g = Grid::line(0.0, 20.0, 256, Boundary::Periodic);
  const auto plane = oracle::sample(g, [&](double x) { return std::exp(I * k * x); });
  const auto w = weak_actual_value(Observable::momentum(0), plane, {4.2, 0.0});
  CHECK(w.a_w == doctest::Approx(k).epsilon(1e-12));
  CHECK(std::abs(w.A_w.imag()) < 1e-12);
  CHECK_FALSE(w.spinor_extension);

  const Grid h = Grid::line(-8.0, 8.0, 256, Boundary::Periodic);
  const auto ho = oracle::sample(h, [](double x) { return oracle::ho_state(0, x, 1.0); });
  for (double Q : {-1.3, 0.0, 0.77}) {
    const auto r = weak_actual_value(Observable::momentum(0), ho, {Q, 0.0});
    CHECK(std::abs(r.a_w) < 1e-12);
    CHECK(r.A_w.imag() == doctest::Approx(Q).epsilon(1e-5));  // -i (-x) = i x
  }
}

TEST_CASE("energy weak value of a packet equals kinetic phase term plus potentials") {
  const oracle::Packet pk{0.3, 1.1, 1.4};
  const Grid g = Grid::line(-16.0, 16.0, 512, Boundary::Periodic);
  const auto V = ho_potential(g, 0.5);
  const auto psi = oracle::sample(g, [&](double x) { return pk.value(x, 0.0); });
  const Observable H = Observable::hamiltonian(V);
  for (double Q : {-0.9, 0.3, 1.25}) {
    // polar oracle: S' = hbar Im(psi'/psi), R''/R = Re(psi''/psi) + (Im psi'/psi)^2
    const Complex g1 = pk.log_derivative(Q, 0.0), g2 = pk.second_over_psi(Q, 0.0);
    const double grad_s = g1.imag();
    const double r2_over_r = g2.real() + grad_s * grad_s;
    const double expected = grad_s * grad_s / 2.0 + 0.125 * Q * Q - r2_over_r / 2.0;
    const auto w = weak_actual_value(H, psi, {Q, 0.0});
    CHECK(w.a_w == doctest::Approx(expected).epsilon(1e-5));
  }
}

TEST_CASE("expectation examples") {
  const double k = 2.0 * oracle::pi * 5.0 / 30.0;
  const Grid g = Grid::line(0.0, 30.0, 128, Boundary::Periodic);
  const auto plane = normalize(oracle::sample(g, [&](double x) { return std::exp(I * k * x); }));
  CHECK(expectation(Observable::momentum(0), plane).value == doctest::Approx(k).epsilon(1e-12));

  const Grid h = Grid::line(-10.0, 10.0, 401, Boundary::Box);
  const auto ho = normalize(oracle::sample(h, [](double x) { return oracle::ho_state(0, x, 1.0); }));
  const auto e = expectation(Observable::hamiltonian(ho_potential(h, 1.0)), ho);
  CHECK(e.value == doctest::Approx(0.5).epsilon(1e-6));

  const Complex a(0.6, 0.2), b(0.1, -0.77);
  const auto spin = normalize(oracle::sample_spinor(g, [](double) { return Complex(1.0); }, a, b));
  const double n2 = std::norm(a) + std::norm(b);
  const double sz = 0.5 * (std::norm(a) - std::norm(b)) / n2;
  const double sx = std::real(std::conj(a) * b) / n2;  // (hbar/2) 2 Re(a* b)
  CHECK(expectation(Observable::spin({0, 0, 1}), spin).value == doctest::Approx(sz).epsilon(1e-12));
  CHECK(expectation(Observable::spin({1, 0, 0}), spin).value == doctest::Approx(sx).epsilon(1e-12));
}

TEST_CASE("every built-in observable is self-adjoint on its grid") {
  const oracle::Packet pk{0.2, 1.0, 0.9};
  const Grid per = Grid::line(-12.0, 12.0, 256, Boundary::Periodic);
  const Grid box = Grid::line(-12.0, 12.0, 257, Boundary::Box);
  for (const Grid& g : {per, box}) {
    const auto psi = normalize(oracle::sample(g, [&](double x) { return pk.value(x, 0.0); }));
    const auto spin = normalize(oracle::sample_spinor(g, [&](double x) { return pk.value(x, 0.0); },
                                                     Complex(0.8, 0.1), Complex(0.2, 0.5)));
    const auto V = ho_potential(g, 0.7);
    std::vector<Observable> obs{Observable::position(0), Observable::momentum(0), Observable::kinetic(),
                                Observable::potential(V), Observable::hamiltonian(V),
                                Observable::momentum(0, DerivativeScheme::CentralFD2),
                                Observable::kinetic(DerivativeScheme::CentralFD4),
                                Observable::scaled(-2.5, Observable::momentum(0)),
                                Observable::sum({Observable::position(0), Observable::kinetic()})};
    for (const auto& A : obs) CHECK(std::abs(expectation(A, psi).imag_residual) < 1e-8);
    CHECK(std::abs(expectation(Observable::spin({0.6, 0.0, 0.8}), spin).imag_residual) < 1e-8);
    CHECK(std::abs(expectation(Observable::sum({Observable::momentum(0), Observable::spin({0, 1, 0})}), spin)
                       .imag_residual) < 1e-8);
  }
}

TEST_CASE("a_w and Re A_w agree on random states, observables and points") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const Grid g = Grid::line(-12.0, 12.0, 256, Boundary::Periodic);
  const auto V = ho_potential(g, 1.0);
  std::vector<Observable> obs{Observable::position(0), Observable::momentum(0), Observable::hamiltonian(V),
                              Observable::sum({Observable::scaled(0.5, Observable::position(0)), Observable::kinetic()})};
  for (int trial = 0; trial < 200; ++trial) {
    const oracle::Packet pk{u(rng), 1.0 + 0.3 * u(rng), 2.0 * u(rng)};
    const auto psi = oracle::sample(g, [&](double x) { return pk.value(x, 0.0); });
    const Point Q{pk.x0 + 1.5 * u(rng), 0.0};
    const auto& A = obs[trial % obs.size()];
    const auto w = weak_actual_value(A, psi, Q);
    CHECK(std::abs(w.a_w - w.A_w.real()) <= 1e-10 * std::max(1.0, std::abs(w.a_w)));
  }
}

TEST_CASE("eigenstate compatibility: a held eigenvalue equals the weak actual value") {
  const double L = 20.0;
  const Grid g = Grid::line(0.0, L, 256, Boundary::Periodic);
  for (int m : {-3, 1, 4}) {
    const double k = 2.0 * oracle::pi * m / L;
    const auto psi = oracle::sample(g, [&](double x) { return std::exp(I * k * x); });
    for (const Observable& A : {Observable::momentum(0), Observable::kinetic(), Observable::position(0)}) {
      const Point Q{7.13, 0.0};
      const auto v = local_eigen_check(A, psi, Q);
      REQUIRE(v.holds);
      CHECK(std::abs(weak_actual_value(A, psi, Q).a_w - *v.lambda) < 1e-9);
    }
  }
}

TEST_CASE("momentum and energy polar identities converge at second order") {
  const oracle::Packet pk{0.0, 1.3, 1.1};
  std::vector<double> mom_err, en_err;
  for (std::size_t n : {401u, 801u}) {
    const Grid g = Grid::line(-14.0, 14.0, n, Boundary::Box);
    const auto V = ho_potential(g, 0.4);
    const auto psi = oracle::sample(g, [&](double x) { return pk.value(x, 0.0); });
    const PolarForm pf = to_polar(psi);
    const RealField dS = derivative(pf.phase, 0, 1, DerivativeScheme::CentralFD2);
    const RealField d2R = derivative(pf.amplitude, 0, 2, DerivativeScheme::CentralFD2);
    const Observable P = Observable::momentum(0, DerivativeScheme::CentralFD2);
    const Observable H = Observable::hamiltonian(V, DerivativeScheme::CentralFD2);
    const ComplexField p_psi = apply(P, psi), h_psi = apply(H, psi);
    double em = 0.0, ee = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g.coordinate(0, i)) > 3.0) continue;
      const Complex f = psi.amplitudes().at(0, i);
      const double rho = std::norm(f);
      em = std::max(em, std::abs(std::real(std::conj(f) * p_psi.at(0, i)) / rho - dS[i]));
      const double q_pot = -0.5 * d2R[i] / pf.amplitude[i];
      ee = std::max(ee, std::abs(std::real(std::conj(f) * h_psi.at(0, i)) / rho -
                                 (0.5 * dS[i] * dS[i] + (*V)[i] + q_pot)));
    }
    mom_err.push_back(em);
    en_err.push_back(ee);
  }
  CHECK(mom_err[0] < 5e-3);
  CHECK(en_err[0] < 5e-3);
  CHECK(mom_err[0] / mom_err[1] > 3.0);
  CHECK(en_err[0] / en_err[1] > 3.0);
}

TEST_CASE("robustness probe sequences") {
  const oracle::Packet pk{0.0, 1.0, 1.0};
  const Grid g = Grid::line(-20.0, 20.0, 1024, Boundary::Periodic);
  const auto psi = oracle::sample(g, [&](double x) { return pk.value(x, 0.0); });
  const Point Q{0.5, 0.0};
  const Complex base = -I * pk.log_derivative(Q[0], 0.0);
  const double alpha = base.real(), beta = base.imag();
  REQUIRE(beta == doctest::Approx(0.25));

  SUBCASE("gamma = beta stays at alpha + i beta") {
    const auto r = robustness_probe(Observable::momentum(0), psi, Q, beta, 1000);
    CHECK(std::abs(r.base_ratio - base) < 1e-5);  // interpolation at an off-grid Q
    const Complex z0 = r.base_ratio;
    CHECK(std::abs(r.achieved - r.target) < 1e-8);
    CHECK(std::abs(r.limit - z0) < 1e-6);
    for (const Complex z : r.ratios) CHECK(std::abs(z - z0) < 1e-5);
  }
  SUBCASE("gamma = -beta deviates by -2i beta / n at first order") {
    const auto r = robustness_probe(Observable::momentum(0), psi, Q, -beta, 1000);
    REQUIRE(r.ratios.size() == 1000);
    const Complex z0 = r.base_ratio;
    CHECK(std::abs(r.target - Complex(z0.real(), -beta)) < 1e-12);
    CHECK(std::abs(r.achieved - r.target) < 1e-8);
    for (std::size_t n : {100u, 500u, 1000u}) {
      const Complex dev = (r.ratios[n - 1] - z0) * static_cast<double>(n);
      CHECK(dev.imag() == doctest::Approx(-2.0 * z0.imag()).epsilon(2e-2));
      CHECK(std::abs(dev.real()) < 1e-4);  // bump values at an off-grid Q are interpolated
    }
    // psi_n -> psi in norm, and the ratio at Q follows psi_n: the limit is the unperturbed ratio.
    CHECK(std::abs(r.limit - z0) < 1e-6);
  }
  SUBCASE("an eigencondition point gives a real limit") {
    const double k = 2.0 * oracle::pi * 8.0 / 40.0;
    const auto plane = oracle::sample(g, [&](double x) { return std::exp(I * k * x); });
    const auto r = robustness_probe(Observable::momentum(0), plane, Q, 0.0, 200);
    for (const Complex z : r.ratios) CHECK(std::abs(z - k) < 1e-8);
    CHECK(std::abs(r.limit - k) < 1e-8);
  }
  SUBCASE("a support radius wider than the grid is a configuration error") {
    CHECK(kind_of([&] { (void)robustness_probe(Observable::momentum(0), psi, Q, beta, 10, 100.0); }) ==
          ErrorKind::Configuration);
  }
}

TEST_CASE("extrapolation recovers the limit of smooth sequences in 1/n") {
  std::vector<Complex> z;
  for (int n = 1; n <= 1000; ++n) z.push_back(Complex(1.5, 2.0) + Complex(0.3, -0.7) / double(n) + 0.2 / double(n * n));
  CHECK(std::abs(extrapolate_limit(z) - Complex(1.5, 2.0)) < 1e-9);
}

TEST_CASE("observable descriptors round trip through JSON") {
  const Grid g = Grid::line(-4.0, 4.0, 32, Boundary::Periodic);
  const PotentialBinding binding{ho_potential(g, 1.0), "trap"};
  const Observable A = Observable::sum({Observable::scaled(2.0, Observable::position(0)),
                                        Observable::momentum(0, DerivativeScheme::CentralFD4),
                                        Observable::hamiltonian(binding.field, std::nullopt, "trap"),
                                        Observable::spin({0.0, 1.0, 0.0})});
  const Observable B = observable_from_json(to_json(A), binding);
  CHECK(A.id() == B.id());
  CHECK(to_json(A) == to_json(B));
  CHECK(kind_of([&] { (void)observable_from_json({{"kind", "angular"}}, binding); }) == ErrorKind::Validation);
}

TEST_CASE("spin matrices") {
  const SpinMatrix z = spin_matrix({0, 0, 1}, 1.0);
  CHECK(z[0][0] == Complex(0.5));
  CHECK(z[1][1] == Complex(-0.5));
  const SpinMatrix y = spin_matrix({0, 1, 0}, 2.0);
  CHECK(y[0][1] == Complex(0.0, -1.0));
  CHECK(y[1][0] == Complex(0.0, 1.0));
}
