#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "safemotion/control.hpp"
#include "safemotion/jbtg.hpp"

using namespace safemotion;
using namespace safemotion::control;
using doctest::Approx;

namespace {

jbtg::JointLimits wide_limits() {
  jbtg::JointLimits lim;
  lim.p_min = -1e6;
  lim.p_max = 1e6;
  lim.v_max = 0.15;
  lim.a_max = 1.0;
  lim.j_max = 100.0;
  return lim;
}

PlantParams quiet_plant() {
  PlantParams p;
  p.f1_amp = 0;
  p.f2_amp = 0;
  p.d1.amplitude = 0;
  p.d2.amplitude = 0;
  return p;
}

jbtg::Trajectory zero_reference(double duration) {
  jbtg::Trajectory traj;
  jbtg::QuinticSegment seg;
  seg.t0 = 0;
  seg.dt = duration;
  traj.segments.push_back(seg);
  traj.start = traj.sample(0);
  traj.end = traj.sample(duration);
  return traj;
}

// A reaching-style reference: seeded velocity commands chained step by step.
jbtg::Trajectory chained_reference(double duration, std::uint64_t seed) {
  const jbtg::JointLimits lim = wide_limits();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> cmd(-0.15, 0.15);
  jbtg::Trajectory traj = jbtg::plan_step(0.0, 0.0, cmd(rng), lim, 0.05);
  while (traj.duration() < duration - 0.05 / 2) {
    jbtg::append_trajectory(
        traj, jbtg::plan_step(traj.end.p, traj.achieved_v2, cmd(rng), lim, 0.05));
  }
  return traj;
}

}  // namespace

TEST_CASE("tracking_transform forms the virtual control") {
  ControllerGains g;
  g.k1 = 2;
  g.k2 = 1;
  ControllerState c;
  c.phi1_hat = 0.5;
  PlantState x{0.1, 0.0};
  const TrackingSignals s = tracking_transform(x, ReferenceSample{0.0, 0.0}, g, c);
  CHECK(s.e1 == Approx(0.1));
  CHECK(s.e2 == Approx(0.0).scale(1.0));
  CHECK(s.z1 == Approx(0.1));
  CHECK(s.u_v == Approx(-0.125));
  CHECK(s.z2 == Approx(0.125));

  // Perfect tracking nulls every signal.
  const TrackingSignals zero =
      tracking_transform(PlantState{0.3, 0.02}, ReferenceSample{0.3, 0.02}, g, c);
  CHECK(zero.z1 == Approx(0.0).scale(1.0));
  CHECK(zero.z2 == Approx(0.0).scale(1.0));
  CHECK(zero.u_v == Approx(0.0).scale(1.0));

  // phi1 = 0 reduces the virtual control to pure proportional.
  c.phi1_hat = 0;
  const TrackingSignals p = tracking_transform(x, ReferenceSample{0.0, 0.0}, g, c);
  CHECK(p.u_v == Approx(-g.k1 / 2 * 0.1));
}

TEST_CASE("control_law affine form") {
  ControllerGains g;
  g.k5 = 4;
  g.k6 = 2;
  ControllerState c;
  c.phi2_hat = 1.0;
  CHECK(control_law(0.05, -0.1, g, c) == Approx(0.25));
  CHECK(control_law(0.0, 0.0, g, c) == Approx(0.0).scale(1.0));
  CHECK(control_law(0.1, -0.2, g, c) == Approx(2 * control_law(0.05, -0.1, g, c)));
}

TEST_CASE("update_adaptive integrates the leakage law") {
  ControllerGains g;
  g.k2 = 1;
  g.k3 = 1;
  g.k4 = 1;
  ControllerState c;
  c.phi1_hat = 0.2;
  const double dt = 1e-3;
  const ControllerState next = update_adaptive(c, 0.3, 0.0, g, dt);
  CHECK(next.phi1_hat == Approx(0.2 + dt * (-0.155 - 0.045 + 0.045)).epsilon(1e-12));
  CHECK(next.phi1_hat == Approx(0.2 - 0.155 * dt).epsilon(1e-12));

  // Pure exponential decay at rate k3*k4 when z = 0.
  ControllerState d;
  d.phi1_hat = 1.0;
  d.phi2_hat = 2.0;
  ControllerGains g2;
  const ControllerState nd = update_adaptive(d, 0.0, 0.0, g2, dt);
  CHECK(nd.phi1_hat == Approx(1.0 - g2.k3 * g2.k4 * dt).epsilon(1e-12));
  CHECK(nd.phi2_hat == Approx(2.0 * (1.0 - g2.k7 * g2.k8 * dt)).epsilon(1e-12));

  // Nonnegative from zero, for any z.
  ControllerState z;
  const ControllerState nz = update_adaptive(z, 5.0, -7.0, g2, dt);
  CHECK(nz.phi1_hat >= 0.0);
  CHECK(nz.phi2_hat >= 0.0);
  CHECK_THROWS_AS(update_adaptive(z, 0, 0, g2, 0.0), std::invalid_argument);
}

TEST_CASE("plant_step integrates the double integrator") {
  const DisturbanceModel none;

  const PlantState ballistic = plant_step(PlantState{0, 1}, 0.0, none, 1.0, 0, 0.1);
  CHECK(ballistic.chi1 == Approx(0.1).epsilon(1e-12));
  CHECK(ballistic.chi2 == Approx(1.0).epsilon(1e-12));

  const PlantState pushed = plant_step(PlantState{0, 0}, 1.0, none, 1.0, 0, 0.1);
  CHECK(pushed.chi1 == Approx(0.005).epsilon(1e-12));
  CHECK(pushed.chi2 == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("plant_step matches a finer-step oracle under disturbance") {
  PlantParams params;
  params.d2.amplitude = 0.5;
  params.d2.harmonics = 1;
  params.f1_amp = 0.0;
  params.f2_amp = 0.0;
  params.d1.amplitude = 0.0;
  const DisturbanceModel dist(params, 99);

  const double h = 5e-4;
  const double u = 0.3;
  PlantState coarse{0.1, -0.05};
  PlantState fine = coarse;
  double t = 0;
  for (int i = 0; i < 2000; ++i) {  // 1 s
    coarse = plant_step(coarse, u, dist, 1.0, t, h);
    // Independent oracle: ten finer steps of classic RK4 written out here.
    for (int k = 0; k < 10; ++k) {
      const double tk = t + k * h / 10;
      const double hh = h / 10;
      const auto f = [&](double tau, double x1, double x2, double& d1, double& d2) {
        d1 = x2 + dist.f1(PlantState{x1, x2}) + dist.d1(tau);
        d2 = u + dist.f2(PlantState{x1, x2}) + dist.d2(tau);
      };
      double a1, a2, b1, b2, c1, c2, d1, d2;
      f(tk, fine.chi1, fine.chi2, a1, a2);
      f(tk + hh / 2, fine.chi1 + hh / 2 * a1, fine.chi2 + hh / 2 * a2, b1, b2);
      f(tk + hh / 2, fine.chi1 + hh / 2 * b1, fine.chi2 + hh / 2 * b2, c1, c2);
      f(tk + hh, fine.chi1 + hh * c1, fine.chi2 + hh * c2, d1, d2);
      fine.chi1 += hh / 6 * (a1 + 2 * b1 + 2 * c1 + d1);
      fine.chi2 += hh / 6 * (a2 + 2 * b2 + 2 * c2 + d2);
    }
    t += h;
  }
  CHECK(std::abs(coarse.chi1 - fine.chi1) < 1e-8);
  CHECK(std::abs(coarse.chi2 - fine.chi2) < 1e-8);
}

TEST_CASE("integrator order: halving the step barely moves the result") {
  PlantParams params;  // default disturbances on
  const DisturbanceModel dist(params, 5);
  const auto run = [&](double h) {
    PlantState x{0, 0};
    double t = 0;
    const long n = std::lround(1.0 / h);
    for (long i = 0; i < n; ++i) {
      x = plant_step(x, 0.2, dist, 1.0, t, h);
      t += h;
    }
    return x;
  };
  const PlantState a = run(5e-4);
  const PlantState b = run(2.5e-4);
  CHECK(std::abs(a.chi1 - b.chi1) < 1e-8);
  CHECK(std::abs(a.chi2 - b.chi2) < 1e-8);
}

TEST_CASE("frozen linear loop has left-half-plane poles") {
  // With disturbances zero and the adaptive parameters frozen at zero the
  // loop is linear: err'' = -A(1 + k1 k5 / 4) err - A (k5 / 2) err'.
  const ControllerGains g;
  const double A = 1.0;
  const double c1 = A * (1.0 + g.k1 * g.k5 / 4.0);
  const double c2 = A * g.k5 / 2.0;
  const std::complex<double> disc = std::sqrt(std::complex<double>(c2 * c2 - 4 * c1, 0));
  const std::complex<double> s1 = (-c2 + disc) / 2.0;
  const std::complex<double> s2 = (-c2 - disc) / 2.0;
  CHECK(s1.real() < 0.0);
  CHECK(s2.real() < 0.0);
}

TEST_CASE("disturbance realizations respect their bounds") {
  PlantParams params;
  const DisturbanceModel dist(params, 1234);
  for (int i = 0; i <= 5000; ++i) {
    const double t = i * 2e-3;
    CHECK(std::abs(dist.d1(t)) <= params.d1.amplitude + 1e-15);
    CHECK(std::abs(dist.d2(t)) <= params.d2.amplitude + 1e-15);
  }
  CHECK(std::abs(dist.f1(PlantState{0, 1e9})) <= params.f1_amp + 1e-15);
  CHECK(std::abs(dist.f2(PlantState{0, -1e9})) <= params.f2_amp + 1e-15);
}

TEST_CASE("disturbance-free regulation decays exponentially") {
  const ControllerGains gains;
  const PlantParams params = quiet_plant();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> e0(-0.1, 0.1);
  for (int trial = 0; trial < 20; ++trial) {
    JointLoop loop(PlantState{e0(rng), 0.0}, ControllerState{}, gains, params,
                   2000.0, 0);
    std::vector<double> norms;
    std::vector<double> log_norm;
    for (int i = 0; i < 800; ++i) {  // 0.4 s
      const TrackingSignals s =
          tracking_transform(loop.plant(), ReferenceSample{}, gains, loop.ctrl());
      const double norm = std::hypot(s.z1, s.z2);
      norms.push_back(norm);
      if (norm > 1e-12) log_norm.push_back(std::log(norm));
      loop.substep(ReferenceSample{});
      CHECK(loop.ctrl().phi1_hat >= 0.0);
      CHECK(loop.ctrl().phi2_hat >= 0.0);
    }
    // The norm ripples at the damped frequency; its envelope must decay.
    // Windows span one oscillation period at the closed-loop frequency.
    const size_t window = 50;
    double prev_peak = 1e300;
    bool envelope_decays = true;
    for (size_t w = window; w + window <= norms.size(); w += window) {
      double peak = 0;
      for (size_t i = w; i < w + window; ++i) peak = std::max(peak, norms[i]);
      if (peak > prev_peak * (1.0 + 1e-9) && peak > 1e-13) envelope_decays = false;
      prev_peak = peak;
    }
    CHECK(envelope_decays);
    // Least-squares slope of log|z| over the recorded window.
    const size_t n = log_norm.size();
    REQUIRE(n > 10);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
      sx += i;
      sy += log_norm[i];
      sxx += double(i) * i;
      sxy += i * log_norm[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope < 0.0);
  }
}

TEST_CASE("step error decays under the default gains") {
  const ControllerGains gains;
  const TrackingResult r = track_trajectory(
      zero_reference(1.0), PlantState{0.05, 0.0}, ControllerState{}, gains,
      quiet_plant(), 2000.0);
  CHECK(std::abs(r.final_state.chi1) < 1e-9);
  CHECK(std::abs(r.rows.back().e1) < 1e-9);
}

TEST_CASE("tracking a long jerk-bounded reference stays tight") {
  const ControllerGains gains;
  const jbtg::Trajectory ref = chained_reference(15.0, 2024);
  const TrackingResult r =
      track_trajectory(ref, PlantState{ref.start.p, ref.start.v},
                       ControllerState{}, gains, quiet_plant(), 2000.0);
  CHECK(r.max_abs_e1 < 1e-4);
  CHECK(r.max_abs_e2 < 1e-3);
}

TEST_CASE("held joint under bounded disturbance keeps millimetre accuracy") {
  const ControllerGains gains;
  const PlantParams params;  // default bounded disturbance model
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const TrackingResult r =
        track_trajectory(zero_reference(10.0), PlantState{}, ControllerState{},
                         gains, params, 2000.0, seed);
    double steady = 0;
    for (const auto& row : r.rows)
      if (row.t > 2.0) steady = std::max(steady, std::abs(row.e1));
    CHECK(steady < 3e-3);
    for (const auto& row : r.rows) {
      CHECK(row.phi1 >= 0.0);
      CHECK(row.phi2 >= 0.0);
    }
  }
}
