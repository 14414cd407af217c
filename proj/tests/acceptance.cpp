// Acceptance suite: every criterion pinned with its stated tolerance and
// printed as one PASS/FAIL line with the measured values.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "safemotion/control.hpp"
#include "safemotion/env.hpp"
#include "safemotion/io.hpp"
#include "safemotion/jbtg.hpp"
#include "safemotion/safety.hpp"

using namespace safemotion;

namespace {

jbtg::JointLimits paper_limits() {
  jbtg::JointLimits lim;
  lim.p_min = 0.14;
  lim.p_max = 0.50;
  lim.v_max = 0.15;
  lim.a_max = 1.0;
  lim.j_max = 100.0;
  return lim;
}

jbtg::JointLimits wide_limits() {
  jbtg::JointLimits lim = paper_limits();
  lim.p_min = -1e9;
  lim.p_max = 1e9;
  return lim;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void report(int criterion, bool pass, const std::string& details) {
  std::printf("[criterion %2d] %s  %s\n", criterion, pass ? "PASS" : "FAIL",
              details.c_str());
  std::fflush(stdout);
}

}  // namespace

TEST_CASE("criterion 1 and 5: kinematic bounds and continuity on 1e4 plans") {
  const jbtg::JointLimits lim = wide_limits();
  std::mt19937_64 rng(20240001);
  std::uniform_real_distribution<double> vs(-0.15, 0.15);
  Timer timer;

  double worst_v = 0, worst_a = 0, worst_j = 0;
  double worst_gap = 0, worst_end_a = 0;
  for (int i = 0; i < 10000; ++i) {
    const double v1 = vs(rng), v2 = vs(rng);
    const jbtg::Trajectory traj = jbtg::plan_step(0.0, v1, v2, lim, 0.05);
    const jbtg::ValidationReport rep = jbtg::validate_trajectory(traj, lim);
    worst_v = std::max(worst_v, rep.max_abs_v / lim.v_max);
    worst_a = std::max(worst_a, rep.max_abs_a / lim.a_max);
    worst_j = std::max(worst_j, rep.max_abs_j / lim.j_max);
    worst_gap = std::max({worst_gap, rep.max_gap_p, rep.max_gap_v, rep.max_gap_a});
    worst_end_a = std::max({worst_end_a, std::abs(rep.initial_a), std::abs(rep.terminal_a)});
  }
  const double elapsed = timer.seconds();

  const bool pass1 = worst_v <= 1.0 + 1e-6 && worst_a <= 1.0 + 1e-6 &&
                     worst_j <= 1.0 + 1e-6 && elapsed < 60.0;
  {
    std::ostringstream d;
    d << "max|v|/v_max=" << worst_v << " max|a|/a_max=" << worst_a
      << " max|j|/j_max=" << worst_j << " runtime=" << elapsed << "s";
    report(1, pass1, d.str());
  }
  CHECK(worst_v <= 1.0 + 1e-6);
  CHECK(worst_a <= 1.0 + 1e-6);
  CHECK(worst_j <= 1.0 + 1e-6);
  CHECK(elapsed < 60.0);

  const bool pass5 = worst_gap < 1e-9 && worst_end_a < 1e-9;
  {
    std::ostringstream d;
    d << "max junction gap=" << worst_gap << " max end |a|=" << worst_end_a;
    report(5, pass5, d.str());
  }
  CHECK(worst_gap < 1e-9);
  CHECK(worst_end_a < 1e-9);
}

TEST_CASE("criterion 2: one-step reachability constant from rest") {
  const jbtg::JointLimits lim = paper_limits();
  const safety::VelocityRange r = safety::reachable_range(0.32, 0.0, lim, 0.05);
  const bool pass = std::abs(r.v_hi - 0.034292037) < 1e-6 &&
                    std::abs(r.v_lo + 0.034292037) < 1e-6;
  std::ostringstream d;
  d << "reachable from rest = [" << r.v_lo << ", " << r.v_hi << "]";
  report(2, pass, d.str());
  CHECK(std::abs(r.v_hi - 0.034292037) < 1e-6);
  CHECK(std::abs(r.v_lo + 0.034292037) < 1e-6);
}

TEST_CASE("criterion 3: braking oracle equivalence and zone conservativeness") {
  const jbtg::JointLimits lim = paper_limits();

  // Full-speed braking distance vs 1 us trapezoid integration.
  const safety::BrakingResult full = safety::braking_profile(lim.v_max, lim);
  const double oracle_full =
      oracles::integrate_swept(safety::braking_trajectory(0.0, lim.v_max, lim), 1e-6)
          .distance;
  const bool brake_ok = std::abs(full.distance - oracle_full) < 1e-6 &&
                        std::abs(full.distance - 1.2428e-2) < 1e-5;

  // Conservativeness on a 200 x 200 (p, v) grid: every velocity at or below
  // the zone cap must brake within the margin, measured by the integration
  // oracle, in both directions.
  const safety::SafeZoneTable table = safety::build_zone_table(lim);
  std::vector<double> v_grid(200), d_oracle(200);
  for (int k = 0; k < 200; ++k) {
    v_grid[k] = lim.v_max * (k + 1) / 200.0;
    d_oracle[k] =
        oracles::integrate_swept(safety::braking_trajectory(0.3, v_grid[k], lim), 5e-6)
            .distance;
  }
  long counterexamples = 0;
  for (int i = 0; i < 200; ++i) {
    const double p = lim.p_min + (lim.p_max - lim.p_min) * i / 199.0;
    const safety::VelocityRange zb = safety::zone_bounds(table, p, lim);
    for (int k = 0; k < 200; ++k) {
      if (v_grid[k] <= zb.v_hi && d_oracle[k] > (lim.p_max - p) + 1e-9) ++counterexamples;
      if (v_grid[k] <= -zb.v_lo && d_oracle[k] > (p - lim.p_min) + 1e-9) ++counterexamples;
    }
  }

  const bool pass = brake_ok && counterexamples == 0;
  std::ostringstream d;
  d << "planner braking distance=" << full.distance << " oracle=" << oracle_full
    << " grid counterexamples=" << counterexamples;
  report(3, pass, d.str());
  CHECK(std::abs(full.distance - oracle_full) < 1e-6);
  CHECK(counterexamples == 0);
}

TEST_CASE("criterion 4: adversarial safety over 1e5 steps") {
  env::EpisodeConfig cfg = env::EpisodeConfig::defaults();
  cfg.max_steps = 100001;
  const safety::SafeZoneTable table =
      safety::build_zone_table(cfg.joints[0].limits, cfg.zone_resolution);
  Timer timer;
  long violations = 0;
  double closest_upper = 1e9, closest_lower = 1e9;
  // Mid-step cap excursions are measured and reported (step-boundary caps are
  // what the scheme guarantees; position safety is what is asserted).
  long midstep_checked = 0, midstep_over_cap = 0;
  double midstep_worst = 0;

  for (const bool positive : {true, false}) {
    env::Environment environment(cfg);
    environment.reset(424242);
    const auto action = positive ? env::policy_max(cfg) : env::policy_min(cfg);
    std::vector<double> prev_p(cfg.joints.size()), prev_v(cfg.joints.size());
    for (long step = 0; step < 100000; ++step) {
      for (size_t j = 0; j < cfg.joints.size(); ++j) {
        prev_p[j] = environment.commanded_position(static_cast<int>(j));
        prev_v[j] = environment.commanded_velocity(static_cast<int>(j));
      }
      const env::StepResult r = environment.step(action);
      for (size_t j = 0; j < cfg.joints.size(); ++j) {
        const auto& limj = cfg.joints[j].limits;
        const double pc = environment.commanded_position(static_cast<int>(j));
        if (pc < limj.p_min - 1e-9 || pc > limj.p_max + 1e-9) ++violations;
        closest_upper = std::min(closest_upper, limj.p_max - pc);
        closest_lower = std::min(closest_lower, pc - limj.p_min);
        if (step % 50 == 0 && !r.joints[j].braking) {
          const jbtg::Trajectory ref =
              jbtg::plan_step(prev_p[j], prev_v[j], r.joints[j].commanded, limj,
                              cfg.rates.agent_dt);
          for (const auto& cp : jbtg::sample_trajectory(ref, 1000.0)) {
            ++midstep_checked;
            const double cap = cp.v >= 0 ? table.cap_upper(limj.p_max - cp.p)
                                         : table.cap_lower(cp.p - limj.p_min);
            const double excess = std::abs(cp.v) - cap;
            if (excess > 1e-9) {
              ++midstep_over_cap;
              midstep_worst = std::max(midstep_worst, excess);
            }
          }
        }
      }
      if (environment.episode_done()) break;
    }
  }
  const double elapsed = timer.seconds();
  const bool pass = violations == 0 && elapsed < 300.0;
  std::ostringstream d;
  d << "violations=" << violations << " min margin to p_max=" << closest_upper
    << " to p_min=" << closest_lower << " runtime=" << elapsed << "s"
    << " | mid-step cap excursions " << midstep_over_cap << "/" << midstep_checked
    << " (worst " << midstep_worst << " m/s, reported only)";
  report(4, pass, d.str());
  CHECK(violations == 0);
  CHECK(elapsed < 300.0);
}

TEST_CASE("criterion 6: quintic solver residuals and derivatives") {
  std::mt19937_64 rng(20240006);
  std::uniform_real_distribution<double> vel(-0.15, 0.15);
  std::uniform_real_distribution<double> acc(-1.0, 1.0);
  std::uniform_real_distribution<double> bal(-0.5, 0.5);
  std::uniform_real_distribution<double> ud(1e-3, 1.0);
  std::uniform_real_distribution<double> ts(0.05, 0.95);

  double worst_residual = 0;
  double worst_fd = 0;
  for (int i = 0; i < 10000; ++i) {
    const double dt = ud(rng);
    const double v1 = vel(rng), v2 = vel(rng);
    const double a1 = acc(rng), a2 = acc(rng);
    const double d = 0.5 * (v1 + v2) * dt + bal(rng) * dt * dt;
    const jbtg::QuinticSegment seg = jbtg::solve_quintic(d, v1, a1, v2, a2, dt);
    worst_residual = std::max(
        worst_residual, oracles::quintic_residual(seg.b, d, v1, a1, v2, a2, dt));

    // Central finite differences against the analytic derivatives.
    const double t = ts(rng) * dt;
    const double h = 1e-6;
    if (t - h < 0 || t + h > dt) continue;
    const auto cp = jbtg::eval_segment(seg, t);
    const auto cp_p = jbtg::eval_segment(seg, t + h);
    const auto cp_m = jbtg::eval_segment(seg, t - h);
    const double fd_v = (cp_p.p - cp_m.p) / (2 * h);
    const double fd_a = (cp_p.v - cp_m.v) / (2 * h);
    const double fd_j = (cp_p.a - cp_m.a) / (2 * h);
    worst_fd = std::max(worst_fd, std::abs(fd_v - cp.v) / std::max(1e-3, std::abs(cp.v)));
    worst_fd = std::max(worst_fd, std::abs(fd_a - cp.a) / std::max(1e-2, std::abs(cp.a)));
    worst_fd = std::max(worst_fd, std::abs(fd_j - cp.j) / std::max(1.0, std::abs(cp.j)));
  }
  const bool pass = worst_residual < 1e-10 && worst_fd < 1e-4;
  std::ostringstream d;
  d << "max residual=" << worst_residual << " max FD mismatch=" << worst_fd;
  report(6, pass, d.str());
  CHECK(worst_residual < 1e-10);
  CHECK(worst_fd < 1e-4);
}

TEST_CASE("criterion 7: controller regulation") {
  const control::ControllerGains gains;

  // Disturbance-free decay with a negative log-norm slope.
  control::PlantParams quiet;
  quiet.f1_amp = quiet.f2_amp = 0;
  quiet.d1.amplitude = quiet.d2.amplitude = 0;
  std::mt19937_64 rng(20240007);
  std::uniform_real_distribution<double> e0(-0.1, 0.1);
  double worst_slope = -1e9;
  bool phi_nonneg = true;
  for (int trial = 0; trial < 100; ++trial) {
    control::JointLoop loop(control::PlantState{e0(rng), 0.0},
                            control::ControllerState{}, gains, quiet, 2000.0, 0);
    std::vector<double> log_norm;
    for (int i = 0; i < 600; ++i) {
      const control::TrackingSignals s = control::tracking_transform(
          loop.plant(), control::ReferenceSample{}, gains, loop.ctrl());
      const double norm = std::hypot(s.z1, s.z2);
      if (norm > 1e-12) log_norm.push_back(std::log(norm));
      loop.substep(control::ReferenceSample{});
      phi_nonneg &= loop.ctrl().phi1_hat >= 0.0 && loop.ctrl().phi2_hat >= 0.0;
    }
    const size_t n = log_norm.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
      sx += i;
      sy += log_norm[i];
      sxx += double(i) * i;
      sxy += i * log_norm[i];
    }
    worst_slope = std::max(worst_slope, (n * sxy - sx * sy) / (n * sxx - sx * sx));
  }

  // Held position under the default bounded disturbance stays within 3 mm.
  jbtg::Trajectory hold;
  jbtg::QuinticSegment seg;
  seg.dt = 10.0;
  hold.segments.push_back(seg);
  hold.start = hold.sample(0);
  hold.end = hold.sample(10.0);
  double worst_held = 0;
  for (std::uint64_t s : {11ull, 22ull, 33ull}) {
    const control::TrackingResult r = control::track_trajectory(
        hold, control::PlantState{}, control::ControllerState{}, gains,
        control::PlantParams{}, 2000.0, s);
    for (const auto& row : r.rows) {
      if (row.t > 2.0) worst_held = std::max(worst_held, std::abs(row.e1));
      phi_nonneg &= row.phi1 >= 0.0 && row.phi2 >= 0.0;
    }
  }

  const bool pass = worst_slope < 0.0 && worst_held < 3e-3 && phi_nonneg;
  std::ostringstream d;
  d << "worst log-norm slope=" << worst_slope << " held |e1|=" << worst_held
    << " phi nonnegative=" << (phi_nonneg ? "yes" : "no");
  report(7, pass, d.str());
  CHECK(worst_slope < 0.0);
  CHECK(worst_held < 3e-3);
  CHECK(phi_nonneg);
}

TEST_CASE("criterion 8: multirate architecture") {
  env::EpisodeConfig cfg = env::EpisodeConfig::defaults();
  env::Environment environment(cfg);
  environment.reset(8);
  const env::StepResult r = environment.step(env::policy_zero(cfg));
  const bool pass = r.planner_samples == 50 && r.controller_substeps == 100;
  std::ostringstream d;
  d << "planner samples/step=" << r.planner_samples
    << " controller substeps/step=" << r.controller_substeps;
  report(8, pass, d.str());
  CHECK(r.planner_samples == 50);
  CHECK(r.controller_substeps == 100);
}

TEST_CASE("criterion 9: scripted reaching smoke test") {
  env::EpisodeConfig cfg = env::EpisodeConfig::defaults();  // easy region active
  env::Environment environment(cfg);
  Timer timer;
  int reached = 0;
  int max_steps_used = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    env::EnvState state = environment.reset(seed);
    while (!environment.episode_done())
      state = environment.step(env::policy_proportional(cfg, state)).state;
    const double tip_speed = std::hypot(state.x_dot[0], state.x_dot[1]);
    if (state.delta_p <= cfg.success.distance && tip_speed < cfg.success.tip_speed &&
        environment.steps_taken() <= 300) {
      ++reached;
      max_steps_used = std::max(max_steps_used, environment.steps_taken());
    }
  }
  const double elapsed = timer.seconds();
  const bool pass = reached >= 95 && elapsed < 120.0;
  std::ostringstream d;
  d << "reached " << reached << "/100 (slowest success " << max_steps_used
    << " steps), runtime=" << elapsed << "s";
  report(9, pass, d.str());
  CHECK(reached >= 95);
  CHECK(elapsed < 120.0);
}

TEST_CASE("criterion 10: byte-identical logs under a fixed seed") {
  const env::EpisodeConfig cfg = env::EpisodeConfig::defaults();
  const auto run = [&cfg]() {
    env::Environment environment(cfg);
    env::EnvState state = environment.reset(1001);
    std::ostringstream out;
    io::write_episode_header(out, cfg);
    int step = 0;
    while (!environment.episode_done() && step < 120) {
      const auto action = env::policy_proportional(cfg, state);
      const env::StepResult r = environment.step(action);
      io::write_episode_row(out, cfg, 0, step++, action, r);
      state = r.state;
    }
    return out.str();
  };
  const std::string a = run();
  const std::string b = run();
  const bool pass = a == b && !a.empty();
  std::ostringstream d;
  d << "two runs, " << a.size() << " bytes each, identical=" << (pass ? "yes" : "no");
  report(10, pass, d.str());
  CHECK(a == b);
}
