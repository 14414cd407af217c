#include "safemotion/jbtg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace safemotion::jbtg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTimeEps = 1e-12;
constexpr double kVelEps = 1e-12;

// Interior displacement split of an acceleration ramp. The 3/20-7/20 split
// makes the fitted quintic's acceleration the monotone 3s^2-2s^3 ramp, so the
// profile never leaves [0, a] inside a ramp. The split sums to 1/2, which
// keeps every pulse displacement equal to the sustained-pulse closed forms.
constexpr double kRampUpSplit = 3.0 / 20.0;
constexpr double kRampDownSplit = 7.0 / 20.0;

constexpr int kBinomial[6][6] = {
    {1, 0, 0, 0, 0, 0},  {1, 1, 0, 0, 0, 0},  {1, 2, 1, 0, 0, 0},
    {1, 3, 3, 1, 0, 0},  {1, 4, 6, 4, 1, 0},  {1, 5, 10, 10, 5, 1}};

double ramp_up_distance(double a, double dt, double v_start) {
  return kRampUpSplit * a * dt * dt + v_start * dt;
}

double ramp_down_distance(double a, double dt, double v_start) {
  return kRampDownSplit * a * dt * dt + v_start * dt;
}

QuinticSegment cruise_segment(double p0, double v, double dt, double t0) {
  QuinticSegment seg;
  seg.t0 = t0;
  seg.dt = dt;
  seg.b = {p0, v, 0, 0, 0, 0};
  return seg;
}

}  // namespace

void JointLimits::validate() const {
  if (!(p_min < p_max)) throw std::invalid_argument("JointLimits: p_min must be < p_max");
  if (!(v_max > 0)) throw std::invalid_argument("JointLimits: v_max must be > 0");
  if (!(a_max > 0)) throw std::invalid_argument("JointLimits: a_max must be > 0");
  if (!(j_max > 0)) throw std::invalid_argument("JointLimits: j_max must be > 0");
  if (!std::isnan(v_min) && !(v_min < 0))
    throw std::invalid_argument("JointLimits: v_min must be negative");
}

LimitConstants limit_constants(const JointLimits& limits) {
  limits.validate();
  LimitConstants c;
  c.dt_max = kPi * limits.a_max / (2.0 * limits.j_max);
  c.dv_ramp = limits.a_max * c.dt_max / 2.0;
  c.dv_min = 2.0 * c.dv_ramp;
  return c;
}

PeakPulse peak_pulse(double dv, const JointLimits& limits) {
  const LimitConstants c = limit_constants(limits);
  if (!(dv > 0))
    throw std::domain_error("peak_pulse: dv must be positive");
  if (dv > c.dv_min * (1.0 + 1e-12))
    throw std::domain_error("peak_pulse: dv exceeds dv_min, use a sustained pulse");
  PeakPulse p;
  p.dt_peak = std::sqrt(kPi * dv / (2.0 * limits.j_max));
  p.a_peak = 2.0 * limits.j_max * p.dt_peak / kPi;
  return p;
}

QuinticSegment solve_quintic(double d, double v1, double a1, double v2,
                             double a2, double dt, double t0, double p0,
                             bool* ill_conditioned) {
  if (!(dt > 0)) throw std::domain_error("solve_quintic: dt must be positive");
  if (ill_conditioned) *ill_conditioned = dt < 1e-6;

  QuinticSegment seg;
  seg.t0 = t0;
  seg.dt = dt;
  seg.b[0] = p0;
  seg.b[1] = v1;
  seg.b[2] = a1 / 2.0;

  // Reduce the 5x5 boundary system: rows two and three fix b1 and b2, the
  // remaining 3x3 in (b3 t^3, b4 t^4, b5 t^5) evaluated at t = dt solves in
  // closed form.
  const double r1 = d - v1 * dt - 0.5 * a1 * dt * dt;
  const double r2 = (v2 - v1 - a1 * dt) * dt;
  const double r3 = (a2 - a1) * dt * dt;
  const double c5 = 0.5 * (r3 - 6.0 * r2 + 12.0 * r1);
  const double c4 = (r2 - 3.0 * r1) - 2.0 * c5;
  const double c3 = r1 - c4 - c5;
  const double dt3 = dt * dt * dt;
  seg.b[3] = c3 / dt3;
  seg.b[4] = c4 / (dt3 * dt);
  seg.b[5] = c5 / (dt3 * dt * dt);
  return seg;
}

ControlPoint eval_segment(const QuinticSegment& seg, double t) {
  const double slack = 1e-9 * std::max(1.0, seg.dt) + kTimeEps;
  if (t < -slack || t > seg.dt + slack)
    throw std::domain_error("eval_segment: t outside segment");
  t = std::clamp(t, 0.0, seg.dt);
  const auto& b = seg.b;
  ControlPoint cp;
  cp.t = seg.t0 + t;
  cp.p = ((((b[5] * t + b[4]) * t + b[3]) * t + b[2]) * t + b[1]) * t + b[0];
  cp.v = (((5 * b[5] * t + 4 * b[4]) * t + 3 * b[3]) * t + 2 * b[2]) * t + b[1];
  cp.a = ((20 * b[5] * t + 12 * b[4]) * t + 6 * b[3]) * t + 2 * b[2];
  cp.j = (60 * b[5] * t + 24 * b[4]) * t + 6 * b[3];
  return cp;
}

QuinticSegment shift_segment(const QuinticSegment& seg, double offset,
                             double new_dt, double new_t0) {
  QuinticSegment out;
  out.t0 = new_t0;
  out.dt = new_dt;
  for (int i = 0; i <= 5; ++i) {
    double c = 0;
    double pw = 1.0;
    for (int m = i; m <= 5; ++m) {
      c += seg.b[m] * kBinomial[m][i] * pw;
      pw *= offset;
    }
    out.b[i] = c;
  }
  return out;
}

double Trajectory::duration() const {
  if (segments.empty()) return 0;
  return segments.back().t0 + segments.back().dt - segments.front().t0;
}

ControlPoint Trajectory::sample(double t) const {
  if (segments.empty()) throw std::domain_error("Trajectory::sample: empty trajectory");
  const double t_end = segments.back().t0 + segments.back().dt;
  const double slack = 1e-9 * std::max(1.0, t_end) + kTimeEps;
  if (t < segments.front().t0 - slack || t > t_end + slack)
    throw std::domain_error("Trajectory::sample: t outside trajectory");
  t = std::clamp(t, segments.front().t0, t_end);
  // Segments are few; linear scan keeps this trivially correct.
  const QuinticSegment* cover = &segments.back();
  for (const auto& seg : segments) {
    if (t <= seg.t0 + seg.dt) {
      cover = &seg;
      break;
    }
  }
  return eval_segment(*cover, t - cover->t0);
}

Trajectory slice_trajectory(const Trajectory& traj, double t_a, double t_b) {
  if (!(t_b > t_a)) throw std::domain_error("slice_trajectory: t_b must exceed t_a");
  Trajectory out;
  for (const auto& seg : traj.segments) {
    const double s0 = std::max(seg.t0, t_a);
    const double s1 = std::min(seg.t0 + seg.dt, t_b);
    if (s1 - s0 < kTimeEps) continue;
    out.segments.push_back(shift_segment(seg, s0 - seg.t0, s1 - s0, s0 - t_a));
  }
  if (out.segments.empty())
    throw std::domain_error("slice_trajectory: window outside trajectory");
  out.start = out.sample(0.0);
  out.end = out.sample(out.duration());
  out.achieved_v2 = out.end.v;
  return out;
}

void append_trajectory(Trajectory& traj, const Trajectory& next) {
  if (next.segments.empty()) return;
  if (traj.segments.empty()) {
    traj = next;
    return;
  }
  const ControlPoint tail = traj.end;
  const ControlPoint head = next.start;
  if (std::abs(tail.p - head.p) > 1e-9 || std::abs(tail.v - head.v) > 1e-9 ||
      std::abs(tail.a - head.a) > 1e-9)
    throw std::domain_error("append_trajectory: chained ends do not match");
  const double shift = traj.duration() - next.segments.front().t0;
  for (QuinticSegment seg : next.segments) {
    seg.t0 += shift;
    traj.segments.push_back(seg);
  }
  traj.end = next.end;
  traj.end.t = traj.segments.back().t0 + traj.segments.back().dt;
  traj.achieved_v2 = next.achieved_v2;
}

PulsePlan msap(double p0, double v1, double v2, const JointLimits& limits,
               double dt) {
  const LimitConstants c = limit_constants(limits);
  double dv = v2 - v1;
  if (dv < c.dv_min * (1.0 - 1e-9))
    throw std::domain_error("msap: speed change below dv_min, route to MAP");
  if (dt < 2.0 * c.dt_max * (1.0 - 1e-9))
    throw std::domain_error("msap: dt below 2*dt_max, route to MAP");

  const double a = limits.a_max;
  double va = v1 + c.dv_ramp;
  double vb = v2 - c.dv_ramp;
  double t2 = (vb - va) / a;

  if (2.0 * c.dt_max + t2 > dt) {
    // Reduce v2 so the pulse fits exactly.
    t2 = dt - 2.0 * c.dt_max;
    vb = va + a * t2;
    v2 = vb + c.dv_ramp;
  }
  t2 = std::max(t2, 0.0);

  const double d1 = ramp_up_distance(a, c.dt_max, v1);
  const double d2 = (vb * vb - va * va) / (2.0 * a);
  const double d3 = ramp_down_distance(a, c.dt_max, vb);

  PulsePlan plan;
  plan.points = {
      {0.0, p0, v1, 0.0, 0.0},
      {c.dt_max, p0 + d1, va, a, 0.0},
      {c.dt_max + t2, p0 + d1 + d2, vb, a, 0.0},
      {2.0 * c.dt_max + t2, p0 + d1 + d2 + d3, v2, 0.0, 0.0},
  };
  plan.achieved_v2 = v2;
  plan.cruise = std::max(0.0, dt - (2.0 * c.dt_max + t2));
  return plan;
}

PulsePlan map_pulse(double p0, double v1, double v2, const JointLimits& limits,
                    double dt) {
  const LimitConstants c = limit_constants(limits);
  const double dv = v2 - v1;
  if (dv < 0) throw std::domain_error("map_pulse: decreasing input, normalize first");

  PulsePlan plan;
  if (dv < kVelEps) {
    // Routing contract: equal velocities cruise; emit a degenerate pulse.
    plan.points = {{0.0, p0, v1, 0.0, 0.0}};
    plan.achieved_v2 = v1;
    plan.cruise = dt;
    return plan;
  }

  double dt_peak;
  if (dt < 2.0 * c.dt_max) {
    // Time-limited window: the pulse may use at most the whole of dt.
    dt_peak = dt / 2.0;
    const double dv_window = 2.0 * limits.j_max * dt_peak * dt_peak / kPi;
    if (dv < dv_window) dt_peak = std::sqrt(kPi * dv / (2.0 * limits.j_max));
  } else {
    // Speed-limited: dv < dv_min, the sized pulse fits inside dt.
    dt_peak = std::sqrt(kPi * dv / (2.0 * limits.j_max));
  }
  const double a_pk = 2.0 * limits.j_max * dt_peak / kPi;
  const double dv_achieved = a_pk * dt_peak;
  const double v_mid = v1 + dv_achieved / 2.0;
  const double d1 = ramp_up_distance(a_pk, dt_peak, v1);
  const double d2 = ramp_down_distance(a_pk, dt_peak, v_mid);

  plan.points = {
      {0.0, p0, v1, 0.0, 0.0},
      {dt_peak, p0 + d1, v_mid, a_pk, 0.0},
      {2.0 * dt_peak, p0 + d1 + d2, v1 + dv_achieved, 0.0, 0.0},
  };
  plan.achieved_v2 = v1 + dv_achieved;
  plan.cruise = std::max(0.0, dt - 2.0 * dt_peak);
  return plan;
}

double ramp_duration(double dv, const JointLimits& limits) {
  if (dv < 0) throw std::domain_error("ramp_duration: dv must be nonnegative");
  const LimitConstants c = limit_constants(limits);
  if (dv >= c.dv_min) return 2.0 * c.dt_max + (dv - c.dv_min) / limits.a_max;
  return 2.0 * std::sqrt(kPi * dv / (2.0 * limits.j_max));
}

double max_speed_change(double dt, const JointLimits& limits) {
  if (dt < 0) throw std::domain_error("max_speed_change: dt must be nonnegative");
  const LimitConstants c = limit_constants(limits);
  if (dt >= 2.0 * c.dt_max) return c.dv_min + limits.a_max * (dt - 2.0 * c.dt_max);
  return limits.j_max * dt * dt / (2.0 * kPi);
}

double dt_limit(double v1, double v2, const JointLimits& limits) {
  const LimitConstants c = limit_constants(limits);
  const double dv = std::abs(v2 - v1);
  return ramp_duration(dv + c.dv_min, limits) + 2.0 * c.dt_max;
}

double solve_peak_velocity(double v1, double v2, const JointLimits& limits,
                           double dt, double cap) {
  if (std::isnan(cap)) cap = limits.v_max;
  const double hi = std::max(v1, v2);
  // Total ramp time v1 -> vp -> v2 as a function of the peak.
  const auto f = [&](double vp) {
    return ramp_duration(std::abs(vp - v1), limits) +
           ramp_duration(std::abs(vp - v2), limits);
  };
  if (f(hi) > dt * (1.0 + 1e-12) + kTimeEps)
    throw std::domain_error("solve_peak_velocity: dt below the direct ramp time");
  if (f(cap) <= dt) return cap;

  double a = hi, b = cap;
  for (int i = 0; i < 200 && (b - a) > kVelEps * std::max(1.0, cap); ++i) {
    const double mid = 0.5 * (a + b);
    if (f(mid) <= dt)
      a = mid;
    else
      b = mid;
    if (std::abs(f(a) - dt) < 1e-9) break;
  }
  return a;
}

namespace {

// Appends the quintic segments for consecutive control points.
// Constant-acceleration arcs (velocity and acceleration cruises) get their
// exact quadratic; very short arcs would otherwise amplify displacement
// round-off through the boundary solve.
void append_segments(Trajectory& traj, const std::vector<ControlPoint>& pts) {
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const ControlPoint& a = pts[i];
    const ControlPoint& b = pts[i + 1];
    const double dt = b.t - a.t;
    if (dt < kTimeEps) continue;
    const double d = b.p - a.p;
    const bool constant_acc = a.a == b.a &&
                              std::abs(b.v - (a.v + a.a * dt)) < 1e-12 &&
                              std::abs(d - (a.v * dt + 0.5 * a.a * dt * dt)) < 1e-12;
    if (constant_acc) {
      QuinticSegment seg;
      seg.t0 = a.t;
      seg.dt = dt;
      seg.b = {a.p, a.v, a.a / 2.0, 0, 0, 0};
      traj.segments.push_back(seg);
    } else {
      traj.segments.push_back(solve_quintic(d, a.v, a.a, b.v, b.a, dt, a.t, a.p));
    }
  }
}

// Increasing-speed plan in the normalized frame, starting at position 0.
// Reaches vb when ramp_duration allows, otherwise reduces. Appends a
// velocity cruise so the total duration is exactly dt.
std::vector<ControlPoint> plan_increasing_points(double va, double vb,
                                                 const JointLimits& limits,
                                                 double dt, double* achieved) {
  const LimitConstants c = limit_constants(limits);
  const double dv = vb - va;
  std::vector<ControlPoint> pts;

  if (dv < kVelEps) {
    pts = {{0.0, 0.0, va, 0.0, 0.0}, {dt, va * dt, va, 0.0, 0.0}};
    *achieved = va;
    return pts;
  }

  PulsePlan pulse;
  const double t_ramp = ramp_duration(dv, limits);
  if (t_ramp <= dt * (1.0 + 1e-12) + kTimeEps) {
    pulse = (dv >= c.dv_min * (1.0 - 1e-12)) ? msap(0.0, va, vb, limits, dt)
                                             : map_pulse(0.0, va, vb, limits, dt);
  } else if (dt >= 2.0 * c.dt_max * (1.0 - 1e-12)) {
    pulse = msap(0.0, va, vb, limits, dt);  // reduces vb to fit
  } else {
    pulse = map_pulse(0.0, va, vb, limits, dt);  // time-limited pulse
  }

  pts = pulse.points;
  *achieved = pulse.achieved_v2;
  if (pulse.cruise > kTimeEps) {
    const ControlPoint& last = pts.back();
    pts.push_back({last.t + pulse.cruise, last.p + pulse.achieved_v2 * pulse.cruise,
                   pulse.achieved_v2, 0.0, 0.0});
  }
  return pts;
}

Trajectory finalize(Trajectory traj) {
  traj.start = traj.sample(0.0);
  traj.end = traj.sample(traj.duration());
  return traj;
}

Trajectory reverse_trajectory(const Trajectory& traj) {
  const double t_total = traj.duration();
  const double d_total =
      eval_segment(traj.segments.back(), traj.segments.back().dt).p;
  Trajectory out;
  out.segments.reserve(traj.segments.size());
  for (auto it = traj.segments.rbegin(); it != traj.segments.rend(); ++it) {
    const QuinticSegment& s = *it;
    QuinticSegment r;
    r.t0 = t_total - (s.t0 + s.dt);
    r.dt = s.dt;
    // q(tau) = d_total - p(dt - tau)
    for (int i = 0; i <= 5; ++i) {
      double e = 0;
      double pw = 1.0;
      for (int m = i; m <= 5; ++m) {
        e += s.b[m] * kBinomial[m][i] * pw;
        pw *= s.dt;
      }
      if (i % 2 != 0) e = -e;
      r.b[i] = (i == 0) ? d_total - e : -e;
    }
    out.segments.push_back(r);
  }
  return out;
}

void negate_trajectory(Trajectory& traj) {
  for (auto& seg : traj.segments)
    for (auto& coeff : seg.b) coeff = -coeff;
}

void offset_trajectory(Trajectory& traj, double p0) {
  for (auto& seg : traj.segments) seg.b[0] += p0;
}

void check_velocity(double v, const JointLimits& limits, const char* name) {
  const double hi = limits.v_max;
  const double lo = limits.v_lo();
  const double slack = 1e-9 * limits.v_max + 1e-15;
  if (v > hi + slack || v < lo - slack)
    throw std::domain_error(std::string(name) + " outside the velocity bounds");
}

}  // namespace

Trajectory plan_step(double p0, double v1, double v2, const JointLimits& limits,
                     double dt) {
  limits.validate();
  if (!(dt > 0)) throw std::domain_error("plan_step: dt must be positive");
  check_velocity(v1, limits, "plan_step: v1");
  check_velocity(v2, limits, "plan_step: v2");

  Trajectory traj;
  if (dt < kDegenerateDt) {
    // No pulse physically fits; hold the current velocity.
    traj.segments.push_back(cruise_segment(p0, v1, dt, 0.0));
    traj.achieved_v2 = v1;
    return finalize(std::move(traj));
  }

  const bool negate = (v2 < 0.0) || (v2 == 0.0 && v1 < 0.0);
  const double w1 = negate ? -v1 : v1;
  const double w2 = negate ? -v2 : v2;
  const bool reverse = w2 < w1;

  double achieved_w = 0;
  std::vector<ControlPoint> pts;
  if (!reverse) {
    pts = plan_increasing_points(w1, w2, limits, dt, &achieved_w);
  } else {
    // Decreasing speed: plan the increasing problem and mirror it in time.
    // The reduction must anchor at the fixed current velocity w1, so cap the
    // decrease before planning the reflected ramp.
    const double dv_cap = max_speed_change(dt, limits);
    const double start_w = std::max(w2, w1 - dv_cap);
    double end_w = 0;
    pts = plan_increasing_points(start_w, w1, limits, dt, &end_w);
    achieved_w = start_w;
  }

  append_segments(traj, pts);
  if (traj.segments.empty())
    traj.segments.push_back(cruise_segment(0.0, w1, dt, 0.0));
  if (reverse) traj = reverse_trajectory(traj);
  if (negate) negate_trajectory(traj);
  offset_trajectory(traj, p0);
  traj.achieved_v2 = negate ? -achieved_w : achieved_w;
  return finalize(std::move(traj));
}

Trajectory plan_max_displacement(double p0, double v1, double v2,
                                 const JointLimits& limits, double dt) {
  limits.validate();
  if (!(dt > 0)) throw std::domain_error("plan_max_displacement: dt must be positive");
  check_velocity(v1, limits, "plan_max_displacement: v1");
  check_velocity(v2, limits, "plan_max_displacement: v2");
  if (dt < kDegenerateDt) return plan_step(p0, v1, v2, limits, dt);

  const bool negate = (v2 < 0.0) || (v2 == 0.0 && v1 < 0.0);
  const double w1 = negate ? -v1 : v1;
  const double w2 = negate ? -v2 : v2;
  const double cap = negate ? -limits.v_lo() : limits.v_max;
  const double lo = std::min(w1, w2);
  const double hi = std::max(w1, w2);

  const double t_direct = ramp_duration(hi - lo, limits);
  if (t_direct > dt * (1.0 + 1e-12) + kTimeEps || hi >= cap * (1.0 - 1e-12))
    return plan_step(p0, v1, v2, limits, dt);  // no room to run higher

  // Peak selection. Above dt_limit both ramps sustain a_max; below it at
  // least the shorter ramp is a reduced pulse. The bracket follows that
  // comparison, the bisection is shared.
  const LimitConstants c = limit_constants(limits);
  const double v_limit = std::min(cap, hi + c.dv_min);
  const double t_at_limit =
      ramp_duration(v_limit - w1, limits) + ramp_duration(v_limit - w2, limits);
  const double t_at_cap =
      ramp_duration(cap - w1, limits) + ramp_duration(cap - w2, limits);

  double v_peak;
  double cap_cruise = 0;
  if (dt >= t_at_cap) {
    v_peak = cap;
    cap_cruise = dt - t_at_cap;
  } else if (dt >= t_at_limit) {
    v_peak = std::max(solve_peak_velocity(w1, w2, limits, dt, cap), v_limit);
  } else {
    v_peak = std::min(solve_peak_velocity(w1, w2, limits, dt, cap), v_limit);
  }

  const auto ramp_points = [&](double from, double to) {
    const double dv = to - from;
    const double t = ramp_duration(std::abs(dv), limits);
    double dummy = 0;
    return plan_increasing_points(std::min(from, to), std::max(from, to),
                                  limits, t, &dummy);
  };

  // Up-ramp w1 -> v_peak, optional cruise at the cap, down-ramp v_peak -> w2.
  std::vector<ControlPoint> pts = ramp_points(w1, v_peak);
  if (cap_cruise > kTimeEps) {
    const ControlPoint& last = pts.back();
    pts.push_back({last.t + cap_cruise, last.p + v_peak * cap_cruise, v_peak, 0.0, 0.0});
  }
  if (v_peak - w2 > kVelEps) {
    std::vector<ControlPoint> down = ramp_points(w2, v_peak);
    // Mirror the increasing ramp in time to descend from the peak.
    const double t_dn = down.back().t;
    const double d_dn = down.back().p;
    const ControlPoint& anchor = pts.back();
    for (size_t i = down.size(); i-- > 1;) {
      const ControlPoint& q = down[i - 1];
      pts.push_back({anchor.t + (t_dn - q.t), anchor.p + (d_dn - q.p), q.v,
                     -q.a, q.j});
    }
  }

  Trajectory traj;
  append_segments(traj, pts);
  if (negate) negate_trajectory(traj);
  offset_trajectory(traj, p0);
  traj.achieved_v2 = negate ? -w2 : w2;
  return finalize(std::move(traj));
}

std::vector<ControlPoint> sample_trajectory(const Trajectory& traj,
                                            double rate) {
  if (!(rate > 0)) throw std::domain_error("sample_trajectory: rate must be positive");
  const double t_end = traj.duration();
  const long n = static_cast<long>(std::floor(t_end * rate + 1e-9));
  std::vector<ControlPoint> samples;
  samples.reserve(static_cast<size_t>(n) + 2);
  for (long k = 0; k <= n; ++k) samples.push_back(traj.sample(k / rate));
  if (t_end - n / rate > 1e-12) samples.push_back(traj.sample(t_end));
  return samples;
}

ValidationReport validate_trajectory(const Trajectory& traj,
                                     const JointLimits& limits) {
  ValidationReport rep;
  if (traj.segments.empty()) {
    rep.violations.push_back("trajectory has no segments");
    return rep;
  }

  rep.p_lo = traj.start.p;
  rep.p_hi = traj.start.p;
  const int kSamplesPerSegment = 256;
  for (const auto& seg : traj.segments) {
    // Jerk is quadratic and acceleration cubic per segment, so their extrema
    // are closed-form; velocity and position are swept densely.
    const auto consider = [&](double t) {
      if (t < 0 || t > seg.dt) return;
      const ControlPoint cp = eval_segment(seg, t);
      rep.max_abs_v = std::max(rep.max_abs_v, std::abs(cp.v));
      rep.max_abs_a = std::max(rep.max_abs_a, std::abs(cp.a));
      rep.max_abs_j = std::max(rep.max_abs_j, std::abs(cp.j));
      rep.p_lo = std::min(rep.p_lo, cp.p);
      rep.p_hi = std::max(rep.p_hi, cp.p);
    };
    for (int k = 0; k <= kSamplesPerSegment; ++k)
      consider(seg.dt * k / kSamplesPerSegment);
    if (std::abs(seg.b[5]) > 0) {
      consider(-seg.b[4] / (5.0 * seg.b[5]));  // jerk vertex
      const double a2 = 60.0 * seg.b[5], a1 = 24.0 * seg.b[4], a0 = 6.0 * seg.b[3];
      const double disc = a1 * a1 - 4.0 * a2 * a0;
      if (disc >= 0) {  // acceleration extrema where jerk crosses zero
        const double sq = std::sqrt(disc);
        consider((-a1 + sq) / (2.0 * a2));
        consider((-a1 - sq) / (2.0 * a2));
      }
    } else if (std::abs(seg.b[4]) > 0) {
      const double root = -6.0 * seg.b[3] / (24.0 * seg.b[4]);
      consider(root);
    }
  }

  for (size_t i = 0; i + 1 < traj.segments.size(); ++i) {
    const ControlPoint a = eval_segment(traj.segments[i], traj.segments[i].dt);
    const ControlPoint b = eval_segment(traj.segments[i + 1], 0.0);
    rep.max_gap_p = std::max(rep.max_gap_p, std::abs(a.p - b.p));
    rep.max_gap_v = std::max(rep.max_gap_v, std::abs(a.v - b.v));
    rep.max_gap_a = std::max(rep.max_gap_a, std::abs(a.a - b.a));
  }
  rep.initial_a = traj.start.a;
  rep.terminal_a = traj.end.a;

  const double rel = 1e-6;
  if (rep.max_abs_v > limits.v_max * (1.0 + rel))
    rep.violations.push_back("velocity exceeds v_max");
  if (rep.max_abs_a > limits.a_max * (1.0 + rel))
    rep.violations.push_back("acceleration exceeds a_max");
  if (rep.max_abs_j > limits.j_max * (1.0 + rel))
    rep.violations.push_back("jerk exceeds j_max");
  if (rep.p_lo < limits.p_min - 1e-9 || rep.p_hi > limits.p_max + 1e-9)
    rep.violations.push_back("position leaves [p_min, p_max]");
  if (rep.max_gap_p > 1e-9 || rep.max_gap_v > 1e-9 || rep.max_gap_a > 1e-9)
    rep.violations.push_back("junction discontinuity");
  if (std::abs(rep.initial_a) > 1e-9 || std::abs(rep.terminal_a) > 1e-9)
    rep.violations.push_back("nonzero end acceleration");
  return rep;
}

}  // namespace safemotion::jbtg
