#include "safemotion/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace safemotion::control {

void ControllerGains::validate() const {
  for (double k : {k1, k2, k3, k4, k5, k6, k7, k8})
    if (!(k > 0)) throw std::invalid_argument("ControllerGains: gains must be positive");
}

TrackingSignals tracking_transform(const PlantState& state,
                                   const ReferenceSample& ref,
                                   const ControllerGains& gains,
                                   const ControllerState& ctrl) {
  TrackingSignals s;
  s.e1 = state.chi1 - ref.x_r;
  s.e2 = state.chi2 - ref.x_r_dot;
  s.z1 = s.e1;
  s.u_v = -0.5 * (gains.k1 + gains.k2 * ctrl.phi1_hat) * s.z1;
  s.z2 = s.e2 - s.u_v;
  return s;
}

double control_law(double z1, double z2, const ControllerGains& gains,
                   const ControllerState& ctrl) {
  return -z1 - 0.5 * (gains.k5 + gains.k6 * ctrl.phi2_hat) * z2;
}

ControllerState update_adaptive(const ControllerState& ctrl, double z1,
                                double z2, const ControllerGains& gains,
                                double dt_c) {
  if (!(dt_c > 0)) throw std::invalid_argument("update_adaptive: dt_c must be positive");
  ControllerState next;
  const double rate1 =
      -gains.k3 * gains.k4 * ctrl.phi1_hat + 0.5 * gains.k2 * gains.k3 * z1 * z1;
  const double rate2 =
      -gains.k7 * gains.k8 * ctrl.phi2_hat + 0.5 * gains.k6 * gains.k7 * z2 * z2;
  // Explicit step with a clamp at zero against round-off.
  next.phi1_hat = std::max(0.0, ctrl.phi1_hat + dt_c * rate1);
  next.phi2_hat = std::max(0.0, ctrl.phi2_hat + dt_c * rate2);
  return next;
}

DisturbanceModel::DisturbanceModel(const PlantParams& params,
                                   std::uint64_t seed)
    : f1_amp_(params.f1_amp), f2_amp_(params.f2_amp) {
  std::mt19937_64 rng(seed);
  const auto realize = [&rng](const SinusoidSpec& spec) {
    std::vector<Harmonic> out;
    if (spec.amplitude <= 0 || spec.harmonics <= 0) return out;
    std::uniform_real_distribution<double> freq(spec.freq_lo, spec.freq_hi);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> weight(0.2, 1.0);
    double total = 0;
    for (int i = 0; i < spec.harmonics; ++i) {
      out.push_back({weight(rng), 2.0 * std::numbers::pi * freq(rng), phase(rng)});
      total += out.back().amp;
    }
    for (auto& h : out) h.amp *= spec.amplitude / total;  // sum of |amp| = bound
    return out;
  };
  d1_ = realize(params.d1);
  d2_ = realize(params.d2);
}

double DisturbanceModel::d1(double t) const {
  double v = 0;
  for (const auto& h : d1_) v += h.amp * std::sin(h.omega * t + h.phase);
  return v;
}

double DisturbanceModel::d2(double t) const {
  double v = 0;
  for (const auto& h : d2_) v += h.amp * std::sin(h.omega * t + h.phase);
  return v;
}

double DisturbanceModel::f1(const PlantState& state) const {
  return f1_amp_ * std::tanh(state.chi2);
}

double DisturbanceModel::f2(const PlantState& state) const {
  return f2_amp_ * std::tanh(state.chi2);
}

PlantState plant_step(const PlantState& state, double u,
                      const DisturbanceModel& dist, double input_gain,
                      double t, double dt_c) {
  if (!(dt_c > 0)) throw std::invalid_argument("plant_step: dt_c must be positive");
  const auto deriv = [&](double tau, const PlantState& x) {
    PlantState dx;
    dx.chi1 = x.chi2 + dist.f1(x) + dist.d1(tau);
    dx.chi2 = input_gain * u + dist.f2(x) + dist.d2(tau);
    return dx;
  };
  const auto advance = [](const PlantState& x, const PlantState& dx, double h) {
    return PlantState{x.chi1 + h * dx.chi1, x.chi2 + h * dx.chi2};
  };
  const PlantState k1 = deriv(t, state);
  const PlantState k2 = deriv(t + dt_c / 2, advance(state, k1, dt_c / 2));
  const PlantState k3 = deriv(t + dt_c / 2, advance(state, k2, dt_c / 2));
  const PlantState k4 = deriv(t + dt_c, advance(state, k3, dt_c));
  PlantState next;
  next.chi1 = state.chi1 + dt_c / 6 * (k1.chi1 + 2 * k2.chi1 + 2 * k3.chi1 + k4.chi1);
  next.chi2 = state.chi2 + dt_c / 6 * (k1.chi2 + 2 * k2.chi2 + 2 * k3.chi2 + k4.chi2);
  return next;
}

JointLoop::JointLoop(PlantState plant, ControllerState ctrl,
                     ControllerGains gains, const PlantParams& params,
                     double rate, std::uint64_t seed)
    : plant_(plant),
      ctrl_(ctrl),
      gains_(gains),
      dist_(params, seed),
      input_gain_(params.input_gain) {
  gains_.validate();
  if (!(rate > 0)) throw std::invalid_argument("JointLoop: rate must be positive");
  if (!(params.input_gain > 0))
    throw std::invalid_argument("JointLoop: input gain must be positive");
  dt_c_ = 1.0 / rate;
}

double JointLoop::substep(const ReferenceSample& ref) {
  const TrackingSignals s = tracking_transform(plant_, ref, gains_, ctrl_);
  const double u = control_law(s.z1, s.z2, gains_, ctrl_);
  ctrl_ = update_adaptive(ctrl_, s.z1, s.z2, gains_, dt_c_);
  plant_ = plant_step(plant_, u, dist_, input_gain_, t_, dt_c_);
  t_ += dt_c_;
  last_u_ = u;
  if (!std::isfinite(plant_.chi1) || !std::isfinite(plant_.chi2))
    throw simulation_fault("joint loop diverged at t = " + std::to_string(t_));
  return u;
}

TrackingResult track_trajectory(const jbtg::Trajectory& traj, PlantState state,
                                ControllerState ctrl,
                                const ControllerGains& gains,
                                const PlantParams& params, double rate,
                                std::uint64_t seed) {
  JointLoop loop(state, ctrl, gains, params, rate, seed);
  const double duration = traj.duration();
  const long n = std::lround(duration * rate);

  TrackingResult result;
  result.rows.reserve(static_cast<size_t>(n) + 1);
  for (long i = 0; i <= n; ++i) {
    const double t = std::min(duration, i / rate);
    const jbtg::ControlPoint cp = traj.sample(t);
    const ReferenceSample ref{cp.p, cp.v};
    const TrackingSignals s =
        tracking_transform(loop.plant(), ref, gains, loop.ctrl());
    TrackingLogRow row{t,    ref.x_r,  ref.x_r_dot,        loop.plant().chi1,
                       loop.plant().chi2, s.e1, s.e2,      loop.last_u(),
                       loop.ctrl().phi1_hat, loop.ctrl().phi2_hat};
    result.max_abs_e1 = std::max(result.max_abs_e1, std::abs(s.e1));
    result.max_abs_e2 = std::max(result.max_abs_e2, std::abs(s.e2));
    if (i < n) {
      row.u = loop.substep(ref);
    }
    result.rows.push_back(row);
  }
  result.final_state = loop.plant();
  result.final_ctrl = loop.ctrl();
  return result;
}

}  // namespace safemotion::control
