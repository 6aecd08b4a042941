#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <memory>

#include "bohmlab/calculus.hpp"
#include "bohmlab/errors.hpp"
#include "bohmlab/guidance.hpp"
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

const oracle::Packet kPacket{-3.0, 1.0, 1.0};

EvolutionRecord free_packet_record(std::size_t points = 512, double dt = 0.01, std::size_t steps = 200) {
  const Grid g = Grid::line(-24.0, 24.0, points, Boundary::Periodic);
  const WaveFunction psi0 = analytic_state(g, GaussianPacket{{kPacket.x0, 0.0}, {1.0, 1.0}, {kPacket.k0, 0.0}}, {});
  return evolve(psi0, split(dt, 1), steps);
}

}  // namespace

TEST_CASE("velocity field examples") {
  const double L = 20.0, k = 2.0 * oracle::pi * 3.0 / L;
  const Grid g = Grid::line(0.0, L, 128, Boundary::Periodic);
  const auto plane = oracle::sample(g, [&](double x) { return std::exp(I * k * x); }, 0.0, Physics{2.0, 0.5});
  for (double Q : {0.0, 6.1, 19.9}) {
    CHECK(velocity_at(plane, {Q, 0.0})[0] == doctest::Approx(0.5 * k / 2.0).epsilon(1e-12));
    CHECK(std::abs(velocity_divergence(plane, {Q, 0.0})) < 1e-12);
  }

  const Grid h = Grid::line(-8.0, 8.0, 256, Boundary::Periodic);
  const auto ho = oracle::sample(h, [](double x) { return oracle::ho_state(0, x, 1.0); });
  CHECK(std::abs(velocity_at(ho, {0.37, 0.0})[0]) < 1e-14);
  CHECK(std::abs(velocity_divergence(ho, {0.37, 0.0})) < 1e-12);

  const Grid box = Grid::line(0.0, 10.0, 1001, Boundary::Box);
  const auto ev = oracle::sample(box, [](double x) { return std::exp(-0.9 * x); });
  CHECK(std::abs(velocity_at(ev, {4.4, 0.0})[0]) < 1e-14);

  const oracle::Packet pk{0.0, 1.0, 1.0};
  const Grid gg = Grid::line(-16.0, 16.0, 512, Boundary::Periodic);
  for (double t : {0.0, 1.5}) {
    const auto psi = oracle::sample(gg, [&](double x) { return pk.value(x, t); }, t);
    for (double Q : {-1.0, 0.2, 2.7}) {
      CHECK(velocity_at(psi, {Q, 0.0})[0] == doctest::Approx(pk.velocity(Q, t)).epsilon(1e-4));  // off-grid interpolation
      // v = hbar/m (k0 + u tau / (2 sigma^2 (1 + tau^2))), so div v is uniform
      const double tau = pk.tau(t);
      CHECK(velocity_divergence(psi, {Q, 0.0}) == doctest::Approx(tau / (2.0 * (1.0 + tau * tau))).epsilon(1e-5));
    }
  }
}

TEST_CASE("velocity matches the polar-form phase gradient") {
  const oracle::Packet pk{0.0, 1.2, -0.6};
  std::vector<double> err;
  for (std::size_t n : {401u, 801u}) {
    const Grid g = Grid::line(-14.0, 14.0, n, Boundary::Box);
    const auto psi = oracle::sample(g, [&](double x) { return pk.value(x, 0.8); }, 0.8);
    const PolarForm pf = to_polar(psi);
    const RealField dS = derivative(pf.phase, 0, 1, DerivativeScheme::CentralFD2);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (std::abs(g.coordinate(0, i)) > 3.0) continue;
      worst = std::max(worst, std::abs(velocity_at(psi, g.point(i), DerivativeScheme::CentralFD2)[0] - dS[i]));
    }
    err.push_back(worst);
  }
  CHECK(err[0] < 1e-3);
  CHECK(err[0] / err[1] > 3.5);
}

TEST_CASE("velocity at a node") {
  const Grid g = Grid::line(-8.0, 8.0, 256, Boundary::Periodic);
  const auto first = oracle::sample(g, [](double x) { return oracle::ho_state(1, x, 1.0); });
  try {
    (void)velocity_at(first, {0.0, 0.0});
    FAIL("expected a node error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Node);
  }
}

TEST_CASE("plane-wave trajectory moves uniformly over ten periods") {
  const double L = 20.0, k = 2.0 * oracle::pi * 3.0 / L, period = L / k;
  const Grid g = Grid::line(0.0, L, 128, Boundary::Periodic);
  const std::size_t steps = 2200;
  const auto rec = evolve(analytic_state(g, PlaneWave{{k, 0.0}}, {}), split(0.1, 100), steps);
  REQUIRE(rec.t_end() > 10.0 * period);
  const Trajectory tr = integrate_trajectory(rec, {0.0, 0.0}, 0.5);
  REQUIRE(tr.completed());
  for (const auto& s : tr.samples) {
    CHECK(std::abs(s.Q[0] - k * s.t) < 1e-8);
    CHECK(g.wrap(s.Q)[0] >= 0.0);
  }
}

TEST_CASE("oscillator ground-state trajectory stays put") {
  const Grid g = Grid::line(-10.0, 10.0, 256, Boundary::Periodic);
  const auto V = std::make_shared<const RealField>(harmonic_potential(g, 1.0, {}, {}));
  // Strang splitting moves an exact eigenstate at O(dt^2); a small step keeps the drift below 1e-7.
  const auto rec = evolve(analytic_state(g, HOGround{1.0, {}}, {}), split(0.001, 100, V), 3000);
  for (double Q0 : {0.0, 0.8}) {
    const Trajectory tr = integrate_trajectory(rec, {Q0, 0.0});
    REQUIRE(tr.completed());
    for (const auto& s : tr.samples) CHECK(std::abs(s.Q[0] - Q0) < 1e-7);
  }
}

TEST_CASE("free packet trajectories") {
  const auto rec = free_packet_record();
  const Trajectory centre = integrate_trajectory(rec, {kPacket.x0, 0.0});
  REQUIRE(centre.completed());
  for (const auto& s : centre.samples) CHECK(std::abs(s.Q[0] - kPacket.center(s.t)) < 1e-4);

  SUBCASE("against the closed-form flow") {
    // Trajectories scale with the width: Q(t) = c(t) + (Q0 - x0) sigma(t)/sigma.
    for (double off : {-1.5, 0.7, 2.0}) {
      const Trajectory tr = integrate_trajectory(rec, {kPacket.x0 + off, 0.0});
      REQUIRE(tr.completed());
      const auto& s = tr.back();
      CHECK(std::abs(s.Q[0] - (kPacket.center(s.t) + off * kPacket.width(s.t) / kPacket.sigma)) < 1e-4);
    }
  }

  SUBCASE("div v matches the material derivative of rho") {
    const FieldHistory fields(rec, FieldRequest{.second_derivatives = true});
    const Trajectory tr = integrate_trajectory(fields, {kPacket.x0 + 0.9, 0.0});
    REQUIRE(tr.completed());
    // -(d/dt) ln rho(Q(t), t) from the closed-form density along the computed path
    for (std::size_t i = 8; i + 8 < tr.samples.size(); i += 10) {
      const auto &a = tr.samples[i - 8], &b = tr.samples[i + 8], &s = tr.samples[i];
      const double dlog = (std::log(kPacket.density(b.Q[0], b.t)) - std::log(kPacket.density(a.Q[0], a.t))) / (b.t - a.t);
      CHECK(std::abs(s.div_v + dlog) < 1e-4);
      const double tau = kPacket.tau(s.t);
      CHECK(std::abs(s.div_v - tau / (2.0 * (1.0 + tau * tau))) < 1e-4);
    }
    CHECK(equivariance_drift(tr) < 0.01);
  }

  SUBCASE("no crossing") {
    std::vector<Point> starts;
    for (int i = 0; i < 9; ++i) starts.push_back({kPacket.x0 - 2.0 + 0.5 * i, 0.0});
    const FieldHistory fields(rec, FieldRequest{});
    const auto trs = integrate_trajectories(fields, starts);
    for (std::size_t j = 0; j + 1 < trs.size(); ++j) {
      REQUIRE(trs[j].samples.size() == trs[j + 1].samples.size());
      for (std::size_t i = 0; i < trs[j].samples.size(); ++i)
        CHECK(trs[j].samples[i].Q[0] < trs[j + 1].samples[i].Q[0]);
    }
  }
}

TEST_CASE("trajectory samples are consistent with the velocity") {
  const auto rec = free_packet_record(256, 0.02, 100);
  const Trajectory tr = integrate_trajectory(rec, {kPacket.x0 + 0.3, 0.0});
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    const auto &a = tr.samples[i - 1], &b = tr.samples[i];
    CHECK(b.t > a.t);
    const double step = b.Q[0] - a.Q[0];
    const double mid = 0.5 * (a.v[0] + b.v[0]) * (b.t - a.t);
    CHECK(std::abs(step - mid) < 1e-5);
  }
}

TEST_CASE("aborts: node and leaving a box") {
  SUBCASE("density vanishing at Q stops the trajectory with a partial record") {
    const Grid g = Grid::line(-10.0, 10.0, 128, Boundary::Periodic);
    std::vector<WaveFunction> frames;
    for (int i = 0; i < 6; ++i) {
      const double c = i < 3 ? 0.0 : 6.0;  // the packet jumps away from Q after the third frame
      frames.push_back(oracle::sample(g, [&](double x) { return std::exp(-(x - c) * (x - c)); }, 0.1 * i));
    }
    const auto rec = record_from_snapshots(frames, Method::SplitStep, 0.1, 1, nullptr, "none");
    const Trajectory tr = integrate_trajectory(rec, {0.0, 0.0});
    CHECK(tr.status == TrajectoryStatus::NodeAborted);
    REQUIRE(tr.abort_time);
    CHECK(*tr.abort_time > 0.0);
    CHECK(*tr.abort_time < rec.t_end());
    CHECK_FALSE(tr.samples.empty());
  }
  SUBCASE("uniform flow carries Q out of a box") {
    const Grid g = Grid::line(-10.0, 10.0, 401, Boundary::Box);
    const auto wave = oracle::sample(g, [](double x) { return std::exp(2.0 * I * x); });
    const auto rec = record_from_snapshots({wave, wave.at_time(0.5), wave.at_time(1.0), wave.at_time(1.5)},
                                           Method::CrankNicolson, 0.5, 1, nullptr, "none");
    const Trajectory tr = integrate_trajectory(rec, {8.0, 0.0});
    CHECK(tr.status == TrajectoryStatus::LeftDomain);
    REQUIRE(tr.abort_time);
    CHECK(*tr.abort_time == doctest::Approx(1.0).epsilon(0.1));
    CHECK(tr.back().Q[0] <= 10.0);
  }
  SUBCASE("starting at a node is an error") {
    const Grid g = Grid::line(-8.0, 8.0, 256, Boundary::Periodic);
    const auto first = oracle::sample(g, [](double x) { return oracle::ho_state(1, x, 1.0); });
    const auto rec = record_from_snapshots({first, first.at_time(0.1), first.at_time(0.2)}, Method::SplitStep, 0.1, 1,
                                           nullptr, "none");
    CHECK_THROWS_AS(integrate_trajectory(rec, {0.0, 0.0}), Error);
  }
}

TEST_CASE("parallel trajectories do not depend on the worker count") {
  const auto rec = free_packet_record(256, 0.02, 50);
  const FieldHistory fields(rec, FieldRequest{});
  std::vector<Point> starts;
  for (int i = 0; i < 40; ++i) starts.push_back({kPacket.x0 - 2.0 + 0.1 * i, 0.0});
  set_thread_count(1);
  const auto one = integrate_trajectories(fields, starts);
  set_thread_count(5);
  const auto five = integrate_trajectories(fields, starts);
  set_thread_count(0);
  for (std::size_t j = 0; j < starts.size(); ++j) {
    REQUIRE(one[j].samples.size() == five[j].samples.size());
    for (std::size_t i = 0; i < one[j].samples.size(); ++i) CHECK(one[j].samples[i].Q[0] == five[j].samples[i].Q[0]);
  }
}

TEST_CASE("trajectory CSV layout") {
  const auto rec = free_packet_record(256, 0.02, 10);
  const Trajectory tr = integrate_trajectory(rec, {kPacket.x0, 0.0});
  const auto path = std::filesystem::temp_directory_path() / "bohmlab_test_traj.csv";
  std::vector<double> extra(tr.samples.size(), 1.5);
  write_trajectory_csv(path, tr, {"a_w"}, {extra});
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,Q0,v0,rho,a_w");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == tr.samples.size());
  std::filesystem::remove(path);
}
