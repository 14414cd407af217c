#include "safemotion/safety.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace safemotion::safety {

namespace {

double clamp_position(double p, const jbtg::JointLimits& limits) {
  return std::clamp(p, limits.p_min, limits.p_max);
}

}  // namespace

VelocityRange reachable_range(double p0, double v0,
                              const jbtg::JointLimits& limits, double dt) {
  VelocityRange r;
  r.v_hi = jbtg::plan_step(p0, v0, limits.v_max, limits, dt).achieved_v2;
  r.v_lo = jbtg::plan_step(p0, v0, limits.v_lo(), limits, dt).achieved_v2;
  return r;
}

jbtg::Trajectory braking_trajectory(double p0, double v,
                                    const jbtg::JointLimits& limits) {
  if (std::abs(v) < 1e-12) {
    jbtg::Trajectory traj;
    jbtg::QuinticSegment seg;
    seg.t0 = 0;
    seg.dt = jbtg::kDegenerateDt;
    seg.b = {p0, 0, 0, 0, 0, 0};
    traj.segments.push_back(seg);
    traj.start = traj.sample(0);
    traj.end = traj.sample(seg.dt);
    traj.achieved_v2 = 0;
    return traj;
  }
  const double t_brake = jbtg::ramp_duration(std::abs(v), limits);
  // The degenerate-dt guard in plan_step would turn a sub-resolution brake
  // into a hold, so give those a slightly longer window.
  const double dt = std::max(t_brake, 2.0 * jbtg::kDegenerateDt);
  return jbtg::plan_step(p0, v, 0.0, limits, dt);
}

BrakingResult braking_profile(double v, const jbtg::JointLimits& limits) {
  BrakingResult result;
  if (std::abs(v) < 1e-12) return result;
  const jbtg::Trajectory traj = braking_trajectory(0.0, v, limits);
  result.distance = std::abs(traj.displacement());
  result.duration = jbtg::ramp_duration(std::abs(v), limits);
  return result;
}

std::uint64_t limits_hash(const jbtg::JointLimits& limits) {
  const double fields[6] = {limits.p_min, limits.p_max, limits.v_max,
                            limits.a_max, limits.j_max, limits.v_lo()};
  std::uint64_t h = 1469598103934665603ull;
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(fields);
  for (size_t i = 0; i < sizeof(fields); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::vector<double> build_caps(double v_mag, const jbtg::JointLimits& limits,
                               double resolution, double v_step) {
  // Braking distance of every grid velocity, then inverted onto the distance
  // grid: caps[i] = largest grid velocity stoppable within i * resolution.
  std::vector<std::pair<double, double>> dist_vel;  // (distance, velocity)
  dist_vel.emplace_back(0.0, 0.0);
  const long nv = static_cast<long>(std::ceil(v_mag / v_step));
  for (long k = 1; k <= nv; ++k) {
    const double v = std::min(v_mag, k * v_step);
    dist_vel.emplace_back(braking_profile(v, limits).distance, v);
  }
  const double d_full = dist_vel.back().first;
  const long nd = static_cast<long>(std::ceil(d_full / resolution)) + 1;
  std::vector<double> caps(static_cast<size_t>(nd) + 1, 0.0);
  size_t j = 0;
  double best = 0.0;
  for (long i = 0; i <= nd; ++i) {
    const double margin = i * resolution;
    while (j < dist_vel.size() && dist_vel[j].first <= margin)
      best = std::max(best, dist_vel[j++].second);
    caps[static_cast<size_t>(i)] = best;
  }
  return caps;
}

double lookup(const std::vector<double>& caps, double margin,
              double resolution) {
  if (margin <= 0 || caps.empty()) return 0.0;
  const auto idx = static_cast<size_t>(margin / resolution);  // floor
  if (idx >= caps.size()) return caps.back();
  return caps[idx];
}

}  // namespace

double SafeZoneTable::cap_upper(double margin) const {
  return lookup(upper_caps, margin, resolution);
}

double SafeZoneTable::cap_lower(double margin) const {
  return lookup(lower_caps, margin, resolution);
}

SafeZoneTable build_zone_table(const jbtg::JointLimits& limits,
                               double resolution) {
  limits.validate();
  if (!(resolution > 0))
    throw std::invalid_argument("build_zone_table: resolution must be positive");
  if (resolution >= limits.p_max - limits.p_min)
    throw std::invalid_argument("build_zone_table: resolution coarser than the joint range");
  SafeZoneTable table;
  table.resolution = resolution;
  table.limits_hash = limits_hash(limits);
  table.p_min = limits.p_min;
  table.p_max = limits.p_max;
  table.upper_caps = build_caps(limits.v_max, limits, resolution, table.v_grid_step);
  table.lower_caps = build_caps(-limits.v_lo(), limits, resolution, table.v_grid_step);
  return table;
}

VelocityRange zone_bounds(const SafeZoneTable& table, double p,
                          const jbtg::JointLimits& limits) {
  const double slack = 1e-9;
  if (p < limits.p_min - slack || p > limits.p_max + slack)
    throw safety_fault("zone_bounds: position outside the joint limits");
  VelocityRange r;
  r.v_hi = table.cap_upper(limits.p_max - p);
  r.v_lo = -table.cap_lower(p - limits.p_min);
  return r;
}

VelocityRange final_range(double p0, double v0, const jbtg::JointLimits& limits,
                          const SafeZoneTable& table, double dt) {
  const jbtg::Trajectory hi_plan = jbtg::plan_step(p0, v0, limits.v_max, limits, dt);
  const jbtg::Trajectory lo_plan = jbtg::plan_step(p0, v0, limits.v_lo(), limits, dt);
  const double v1_hi = hi_plan.achieved_v2;
  const double v1_lo = lo_plan.achieved_v2;

  // Zone caps evaluated at the positions the extreme commands would reach.
  // Predictions beyond a limit clamp to it, where the cap is zero.
  const double p_plus = clamp_position(p0 + hi_plan.displacement(), limits);
  const double p_minus = clamp_position(p0 + lo_plan.displacement(), limits);
  const double v2_hi = table.cap_upper(limits.p_max - p_plus);
  const double v2_lo = -table.cap_lower(p_minus - limits.p_min);

  VelocityRange r;
  r.v_lo = std::max(v1_lo, v2_lo);
  r.v_hi = std::min(v1_hi, v2_hi);
  if (r.v_lo > r.v_hi) {
    // Empty intersection: command the strongest brake this step allows.
    const double brake = jbtg::plan_step(p0, v0, 0.0, limits, dt).achieved_v2;
    r.v_lo = r.v_hi = brake;
    r.fallback = true;
  }
  return r;
}

double mask_action(double vbar, const VelocityRange& range, bool* clamped) {
  const bool out = vbar < -1.0 || vbar > 1.0;
  if (clamped) *clamped = out;
  if (out) vbar = std::clamp(vbar, -1.0, 1.0);
  return range.v_lo + (1.0 + vbar) / 2.0 * (range.v_hi - range.v_lo);
}

}  // namespace safemotion::safety
