#pragma once

// Subsystem-based adaptive robust tracking of jerk-bounded references on a
// per-joint double-integrator plant with bounded uncertainty and load
// disturbances.
//
// The loop per controller substep: sample the reference, form the tracking
// transformation (z1, z2) through the virtual control, apply the control
// law, advance the two scalar adaptive parameters, then integrate the plant
// one fixed step (order 4).

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "safemotion/jbtg.hpp"

namespace safemotion::control {

class simulation_fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Joint integrator states: position chi1 and velocity chi2.
struct PlantState {
  double chi1 = 0;
  double chi2 = 0;
};

/// Seeded sum-of-sinusoids load disturbance description.
struct SinusoidSpec {
  double amplitude = 0;   ///< bound on |d(t)| (sum of harmonic amplitudes)
  int harmonics = 3;
  double freq_lo = 0.2;   ///< Hz
  double freq_hi = 2.0;   ///< Hz
};

/// Plant input gain plus the bounded uncertainty/disturbance generators.
struct PlantParams {
  double input_gain = 1.0;  ///< A > 0
  double f1_amp = 0.004;    ///< velocity-channel model uncertainty bound
  double f2_amp = 0.08;     ///< force-channel model uncertainty bound
  SinusoidSpec d1{0.008};
  SinusoidSpec d2{0.4};
};

/// Positive gains of the virtual control, control law, and adaptive laws.
struct ControllerGains {
  double k1 = 1000, k2 = 10, k3 = 1, k4 = 0.1;
  double k5 = 1000, k6 = 10, k7 = 1, k8 = 0.1;

  void validate() const;
};

/// Adaptive parameters; nonnegative for all time when initialized so.
struct ControllerState {
  double phi1_hat = 0;
  double phi2_hat = 0;
};

struct ReferenceSample {
  double x_r = 0;
  double x_r_dot = 0;
};

/// Intermediate signals of the tracking transformation.
struct TrackingSignals {
  double e1, e2, z1, z2, u_v;
};

TrackingSignals tracking_transform(const PlantState& state,
                                   const ReferenceSample& ref,
                                   const ControllerGains& gains,
                                   const ControllerState& ctrl);

double control_law(double z1, double z2, const ControllerGains& gains,
                   const ControllerState& ctrl);

/// One explicit integration step of both adaptive laws; outputs stay >= 0.
ControllerState update_adaptive(const ControllerState& ctrl, double z1,
                                double z2, const ControllerGains& gains,
                                double dt_c);

/// Frozen realization of the uncertainty and disturbance signals.
class DisturbanceModel {
 public:
  DisturbanceModel() = default;  ///< all zero
  DisturbanceModel(const PlantParams& params, std::uint64_t seed);

  double d1(double t) const;
  double d2(double t) const;
  double f1(const PlantState& state) const;
  double f2(const PlantState& state) const;

 private:
  struct Harmonic {
    double amp, omega, phase;
  };
  std::vector<Harmonic> d1_, d2_;
  double f1_amp_ = 0;
  double f2_amp_ = 0;
};

/// Fixed-step order-4 integration of
///   chi1' = chi2 + f1 + d1,  chi2' = A u + f2 + d2
/// over [t, t + dt_c] with u held constant.
PlantState plant_step(const PlantState& state, double u,
                      const DisturbanceModel& dist, double input_gain,
                      double t, double dt_c);

struct TrackingLogRow {
  double t, x_r, xr_dot, chi1, chi2, e1, e2, u, phi1, phi2;
};

struct TrackingResult {
  std::vector<TrackingLogRow> rows;
  PlantState final_state;
  ControllerState final_ctrl;
  double max_abs_e1 = 0;
  double max_abs_e2 = 0;
};

/// One joint's closed loop at a fixed substep; reusable across references.
class JointLoop {
 public:
  JointLoop(PlantState plant, ControllerState ctrl, ControllerGains gains,
            const PlantParams& params, double rate, std::uint64_t seed);

  /// Runs one substep against the given reference sample and returns the
  /// applied control. Throws simulation_fault on non-finite state.
  double substep(const ReferenceSample& ref);

  const PlantState& plant() const { return plant_; }
  const ControllerState& ctrl() const { return ctrl_; }
  double time() const { return t_; }
  double last_u() const { return last_u_; }
  double dt() const { return dt_c_; }

 private:
  PlantState plant_;
  ControllerState ctrl_;
  ControllerGains gains_;
  DisturbanceModel dist_;
  double input_gain_;
  double dt_c_;
  double t_ = 0;
  double last_u_ = 0;
};

/// Closed-loop tracking of a trajectory sampled at `rate`. The returned log
/// has one row per substep plus a terminal row.
TrackingResult track_trajectory(const jbtg::Trajectory& traj, PlantState state,
                                ControllerState ctrl,
                                const ControllerGains& gains,
                                const PlantParams& params, double rate,
                                std::uint64_t seed = 0);

}  // namespace safemotion::control
