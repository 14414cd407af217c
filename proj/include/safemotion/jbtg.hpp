#pragma once

// Jerk-bounded trajectory generation between velocity waypoints.
//
// Profiles are built from linked quintic segments whose control points come
// from two acceleration-pulse templates: a sustained pulse that cruises at
// a_max (MSAP) and a reduced-peak pulse for short times or small speed
// changes (MAP). Every trajectory starts and ends at zero acceleration, so
// successive planning calls chain cleanly.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace safemotion::jbtg {

/// Kinematic bounds for one joint. Velocity bounds may be asymmetric;
/// acceleration and jerk bounds are magnitudes.
struct JointLimits {
  double p_min = 0.0;   ///< position lower bound (m)
  double p_max = 1.0;   ///< position upper bound (m)
  double v_max = 1.0;   ///< speed cap (m/s)
  double a_max = 1.0;   ///< acceleration cap (m/s^2)
  double j_max = 1.0;   ///< jerk cap (m/s^3)
  /// Optional asymmetric lower velocity bound; NaN means -v_max.
  double v_min = std::numeric_limits<double>::quiet_NaN();

  /// Lower velocity bound in effect.
  double v_lo() const { return std::isnan(v_min) ? -v_max : v_min; }

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;
};

/// Closed-form constants of the acceleration-ramp template.
struct LimitConstants {
  double dt_max;   ///< ramp duration to a_max (s)
  double dv_ramp;  ///< speed gained during one ramp (m/s)
  double dv_min;   ///< speed change of a full a_max pulse (m/s)
};

LimitConstants limit_constants(const JointLimits& limits);

/// Reduced-peak acceleration pulse sized for a speed change dv <= dv_min.
struct PeakPulse {
  double dt_peak;  ///< half duration of the pulse (s)
  double a_peak;   ///< peak acceleration (m/s^2)
};

/// Throws std::domain_error unless 0 < dv <= dv_min.
PeakPulse peak_pulse(double dv, const JointLimits& limits);

/// One sample of a motion profile.
struct ControlPoint {
  double t = 0;  ///< time (s)
  double p = 0;  ///< position (m)
  double v = 0;  ///< velocity (m/s)
  double a = 0;  ///< acceleration (m/s^2)
  double j = 0;  ///< jerk (m/s^3)
};

/// One quintic piece p(t) = b0 + b1 t + ... + b5 t^5 on local t in [0, dt].
struct QuinticSegment {
  double t0 = 0;  ///< start time in the parent trajectory (s)
  double dt = 0;  ///< duration (s)
  std::array<double, 6> b{};
};

/// Solves the five-condition boundary system (displacement, end velocities,
/// end accelerations) for b1..b5; b0 is the absolute start position.
/// Throws std::domain_error for dt <= 0. Sets *ill_conditioned for dt < 1e-6.
QuinticSegment solve_quintic(double d, double v1, double a1, double v2,
                             double a2, double dt, double t0 = 0.0,
                             double p0 = 0.0, bool* ill_conditioned = nullptr);

/// Evaluates a segment at local time t in [0, seg.dt].
/// Throws std::domain_error outside the segment.
ControlPoint eval_segment(const QuinticSegment& seg, double t);

/// Re-expands a segment about `offset` into a piece of length new_dt that
/// starts at parent time new_t0. Used for slicing trajectories.
QuinticSegment shift_segment(const QuinticSegment& seg, double offset,
                             double new_dt, double new_t0);

/// Piecewise-quintic motion profile, contiguous in time with continuous
/// position, velocity, and acceleration at the junctions.
struct Trajectory {
  std::vector<QuinticSegment> segments;
  ControlPoint start;
  ControlPoint end;
  double achieved_v2 = 0;  ///< terminal velocity actually reached (m/s)

  double duration() const;
  double displacement() const { return end.p - start.p; }
  /// Evaluates at global time t in [0, duration()].
  ControlPoint sample(double t) const;
};

/// Extracts [t_a, t_b] of a trajectory, re-anchored at time 0.
Trajectory slice_trajectory(const Trajectory& traj, double t_a, double t_b);

/// Appends `next` after `traj`, shifting its time base. The chained ends
/// must agree in position, velocity, and acceleration to 1e-9.
void append_trajectory(Trajectory& traj, const Trajectory& next);

/// Control points of one acceleration pulse plus the leftover cruise time.
struct PulsePlan {
  std::vector<ControlPoint> points;
  double achieved_v2 = 0;
  double cruise = 0;  ///< dt minus the pulse duration (s)
};

/// Modified Sustained Acceleration Pulse: ramp-up to a_max, acceleration
/// cruise, ramp-down. Emits four control points. Requires sign-normalized
/// inputs with v2 > v1, dt >= 2*dt_max and v2 - v1 >= dv_min; if the pulse
/// does not fit in dt, v2 is reduced so that it fits exactly.
PulsePlan msap(double p0, double v1, double v2, const JointLimits& limits,
               double dt);

/// Modified Acceleration Pulse: reduced-peak pulse for dt < 2*dt_max or
/// v2 - v1 < dv_min. Emits three control points; `cruise` carries the time
/// left for a velocity cruise. achieved_v2 reflects any time-limited
/// reduction.
PulsePlan map_pulse(double p0, double v1, double v2, const JointLimits& limits,
                    double dt);

/// Minimal time of a monotone speed ramp of size dv >= 0.
double ramp_duration(double dv, const JointLimits& limits);

/// Largest speed change achievable within dt.
double max_speed_change(double dt, const JointLimits& limits);

/// Time needed to ramp v1 -> v_limit -> v2 where v_limit sits one full
/// a_max pulse above max(v1, v2). Profiles with peaks above v_limit use
/// sustained pulses on the way down; peaks below it use reduced pulses.
double dt_limit(double v1, double v2, const JointLimits& limits);

/// Peak velocity v_p >= max(v1, v2) such that the two ramps
/// v1 -> v_p -> v2 take exactly dt. Bisection to 1e-9 s; returns the
/// velocity cap when even the capped profile takes less than dt.
/// Requires dt >= ramp_duration(|v2 - v1|). `cap` defaults to v_max.
double solve_peak_velocity(double v1, double v2, const JointLimits& limits,
                           double dt,
                           double cap = std::numeric_limits<double>::quiet_NaN());

/// Below this step time, plan_step degenerates to a velocity hold.
inline constexpr double kDegenerateDt = 1e-4;

/// Plans the profile for one step: start at velocity v1, end at v2 with zero
/// acceleration at both ends, exactly dt long. When v2 cannot be reached in
/// dt the profile ends at the closest achievable velocity (achieved_v2).
/// Decreasing and negative-velocity cases are solved by reflecting the
/// increasing-speed problem and un-reflecting the result.
Trajectory plan_step(double p0, double v1, double v2,
                     const JointLimits& limits, double dt);

/// Like plan_step for a reachable v2, but fills spare time by running up to
/// a peak velocity (at most the cap) instead of cruising at v2, maximizing
/// displacement in the direction of the final velocity.
Trajectory plan_max_displacement(double p0, double v1, double v2,
                                 const JointLimits& limits, double dt);

/// Uniform samples at 1/rate spacing covering [0, duration], endpoint
/// included.
std::vector<ControlPoint> sample_trajectory(const Trajectory& traj,
                                            double rate);

/// Limit-compliance report. Empty `violations` means compliant.
struct ValidationReport {
  double max_abs_v = 0;
  double max_abs_a = 0;
  double max_abs_j = 0;
  double p_lo = 0;
  double p_hi = 0;
  double max_gap_p = 0;   ///< junction position gap
  double max_gap_v = 0;   ///< junction velocity gap
  double max_gap_a = 0;   ///< junction acceleration gap
  double initial_a = 0;
  double terminal_a = 0;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Checks a trajectory against limits (1e-6 relative on v/a/j, 1e-9 absolute
/// on junction gaps and end accelerations, 1e-9 on position bounds).
ValidationReport validate_trajectory(const Trajectory& traj,
                                     const JointLimits& limits);

}  // namespace safemotion::jbtg
