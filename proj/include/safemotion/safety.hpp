#pragma once

// Per-step safe velocity ranges: intersect what the trajectory generator can
// reach within one step with the precomputed braking-zone caps that keep a
// full stop inside the position limits.

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "safemotion/jbtg.hpp"

namespace safemotion::safety {

/// Raised when a position query lies outside the joint limits, which can
/// only happen after a prior violation.
class safety_fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Admissible velocity interval for the next step. `fallback` marks the
/// braking fallback issued when the reachable and zone intervals do not
/// intersect.
struct VelocityRange {
  double v_lo = 0;
  double v_hi = 0;
  bool fallback = false;
};

/// Velocities reachable from (p0, v0) within one step of length dt,
/// with zero acceleration at both ends.
VelocityRange reachable_range(double p0, double v0,
                              const jbtg::JointLimits& limits, double dt);

/// Swept distance and duration of the maximal deceleration to rest.
struct BrakingResult {
  double distance = 0;  ///< m, magnitude of the swept displacement
  double duration = 0;  ///< s
};

BrakingResult braking_profile(double v, const jbtg::JointLimits& limits);

/// The maximal-deceleration trajectory from (p0, v) to rest; ends at v = 0,
/// a = 0.
jbtg::Trajectory braking_trajectory(double p0, double v,
                                    const jbtg::JointLimits& limits);

/// Distance-indexed caps on approach velocity, one table per joint.
/// caps[i] is the largest grid velocity whose braking distance fits within
/// i * resolution; lookups floor the distance, so they never overestimate.
struct SafeZoneTable {
  double resolution = 5e-4;    ///< distance grid step (m)
  double v_grid_step = 1e-3;   ///< velocity grid step used during build (m/s)
  std::uint64_t limits_hash = 0;
  double p_min = 0;
  double p_max = 0;
  std::vector<double> upper_caps;  ///< toward p_max (positive velocity)
  std::vector<double> lower_caps;  ///< toward p_min (|negative velocity|)

  double cap_upper(double margin) const;
  double cap_lower(double margin) const;
};

/// FNV-1a over the limit fields; used to reject stale table files.
std::uint64_t limits_hash(const jbtg::JointLimits& limits);

SafeZoneTable build_zone_table(const jbtg::JointLimits& limits,
                               double resolution = 5e-4);

/// Zone caps at position p. Throws safety_fault when p lies outside
/// [p_min, p_max].
VelocityRange zone_bounds(const SafeZoneTable& table, double p,
                          const jbtg::JointLimits& limits);

/// Final safe range: reachable range intersected with the zone caps at the
/// positions predicted for the extreme commands. On an empty intersection
/// returns the flagged braking fallback (the closest-to-stop velocity
/// reachable this step).
VelocityRange final_range(double p0, double v0, const jbtg::JointLimits& limits,
                          const SafeZoneTable& table, double dt);

/// Linear map of a normalized action in [-1, 1] into a velocity range.
/// Out-of-range actions are clamped; *clamped reports that.
double mask_action(double vbar, const VelocityRange& range,
                   bool* clamped = nullptr);

}  // namespace safemotion::safety
