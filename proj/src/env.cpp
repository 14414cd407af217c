#include "safemotion/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace safemotion::env {

namespace {

constexpr std::uint64_t kSeedMix = 0x9e3779b97f4a7c15ull;

std::uint64_t joint_seed(std::uint64_t seed, size_t joint) {
  return seed ^ ((joint + 1) * kSeedMix);
}

// Bounded least squares ||D e - y||^2 over the extension box, by projected
// gradient. Used to test reachability of region corners.
double box_residual(const EpisodeConfig& cfg, double x, double y) {
  const size_t n = cfg.joints.size();
  std::vector<double> e(n);
  for (size_t j = 0; j < n; ++j)
    e[j] = 0.5 * (cfg.joints[j].limits.p_min + cfg.joints[j].limits.p_max);
  double lipschitz = 0;
  for (const auto& d : cfg.directions) lipschitz += d[0] * d[0] + d[1] * d[1];
  const double step = 1.0 / std::max(lipschitz, 1e-9);
  const double tx = x - cfg.base[0];
  const double ty = y - cfg.base[1];
  double rx = 0, ry = 0;
  for (int it = 0; it < 4000; ++it) {
    rx = -tx;
    ry = -ty;
    for (size_t j = 0; j < n; ++j) {
      rx += cfg.directions[j][0] * e[j];
      ry += cfg.directions[j][1] * e[j];
    }
    for (size_t j = 0; j < n; ++j) {
      const double grad = cfg.directions[j][0] * rx + cfg.directions[j][1] * ry;
      e[j] = std::clamp(e[j] - step * grad, cfg.joints[j].limits.p_min,
                        cfg.joints[j].limits.p_max);
    }
  }
  return std::hypot(rx, ry);
}

}  // namespace

EpisodeConfig EpisodeConfig::defaults() {
  EpisodeConfig cfg;
  jbtg::JointLimits lim;
  lim.p_min = 0.14;
  lim.p_max = 0.50;
  lim.v_max = 0.15;
  lim.a_max = 1.0;
  lim.j_max = 100.0;
  for (int i = 0; i < 3; ++i) cfg.joints.push_back({lim, control::PlantParams{}});
  const double r = std::sqrt(0.5);
  cfg.directions = {{1.0, 0.0}, {0.0, 1.0}, {r, r}};
  cfg.regions = {
      {0.50, 0.60, 0.50, 0.60},  // easy
      {0.45, 0.70, 0.45, 0.70},  // intermediate
      {0.40, 0.75, 0.40, 0.75},  // full task area
  };
  return cfg;
}

void EpisodeConfig::validate() const {
  if (joints.empty()) throw std::invalid_argument("config: no joints");
  if (directions.size() != joints.size())
    throw std::invalid_argument("config: directions must match joints");
  for (const auto& j : joints) j.limits.validate();
  gains.validate();
  for (const auto& d : directions) {
    const double norm = std::hypot(d[0], d[1]);
    if (std::abs(norm - 1.0) > 1e-6)
      throw std::invalid_argument("config: directions must be unit vectors");
  }
  if (!(rates.agent_dt > 0) || !(rates.planner_hz > 0) || !(rates.controller_hz > 0))
    throw std::invalid_argument("config: rates must be positive");
  const double planner_per_step = rates.agent_dt * rates.planner_hz;
  const double ctrl_per_planner = rates.controller_hz / rates.planner_hz;
  if (std::abs(planner_per_step - std::round(planner_per_step)) > 1e-9 ||
      std::round(planner_per_step) < 1)
    throw std::invalid_argument("config: planner rate must divide the agent step");
  if (std::abs(ctrl_per_planner - std::round(ctrl_per_planner)) > 1e-9 ||
      std::round(ctrl_per_planner) < 1)
    throw std::invalid_argument("config: controller rate must be a multiple of the planner rate");
  if (max_steps <= 0) throw std::invalid_argument("config: max_steps must be positive");
  if (!(success.distance > 0) || !(success.tip_speed > 0))
    throw std::invalid_argument("config: success thresholds must be positive");
  if (!(reward.w_force >= 0) || !(reward.w_dist >= 0) || !(reward.w_vel >= 0) ||
      !(reward.r_reach > 0))
    throw std::invalid_argument("config: reward weights must be nonnegative, bonus positive");
  if (regions.empty()) throw std::invalid_argument("config: no target regions");
  if (active_region < 0 || active_region >= static_cast<int>(regions.size()))
    throw std::invalid_argument("config: active_region out of range");
  if (!(zone_resolution > 0))
    throw std::invalid_argument("config: zone_resolution must be positive");
  for (const auto& region : regions) {
    if (region.x_hi < region.x_lo || region.y_hi < region.y_lo)
      throw std::invalid_argument("config: malformed region");
    for (double cx : {region.x_lo, region.x_hi})
      for (double cy : {region.y_lo, region.y_hi})
        if (box_residual(*this, cx, cy) > 1e-6)
          throw std::invalid_argument("config: target region outside the tip workspace");
  }
}

std::vector<double> EnvState::flatten() const {
  std::vector<double> out;
  out.reserve(f.size() * 3 + 7);
  out.insert(out.end(), f.begin(), f.end());
  out.insert(out.end(), p.begin(), p.end());
  out.insert(out.end(), p_dot.begin(), p_dot.end());
  out.insert(out.end(), {x[0], x[1], x_dot[0], x_dot[1], target[0], target[1], delta_p});
  return out;
}

const char* to_string(DoneCause cause) {
  switch (cause) {
    case DoneCause::none: return "none";
    case DoneCause::reached: return "reached";
    case DoneCause::timeout: return "timeout";
    case DoneCause::fault: return "fault";
  }
  return "none";
}

std::pair<std::array<double, 2>, std::array<double, 2>> forward_kinematics(
    const EpisodeConfig& cfg, std::span<const double> p,
    std::span<const double> p_dot) {
  std::array<double, 2> x = cfg.base;
  std::array<double, 2> x_dot = {0.0, 0.0};
  for (size_t j = 0; j < cfg.directions.size(); ++j) {
    x[0] += cfg.directions[j][0] * p[j];
    x[1] += cfg.directions[j][1] * p[j];
    x_dot[0] += cfg.directions[j][0] * p_dot[j];
    x_dot[1] += cfg.directions[j][1] * p_dot[j];
  }
  return {x, x_dot};
}

double reward(const EnvState& state, std::span<const double> u, bool reached,
              const RewardWeights& weights) {
  double u_norm = 0;
  for (double f : u) u_norm += f * f;
  u_norm = std::sqrt(u_norm);
  const double tip_speed = std::hypot(state.x_dot[0], state.x_dot[1]);
  return -weights.w_force * u_norm - weights.w_dist * state.delta_p -
         weights.w_vel * tip_speed + (reached ? weights.r_reach : 0.0);
}

Environment::Environment(EpisodeConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  tables_.reserve(cfg_.joints.size());
  for (const auto& joint : cfg_.joints)
    tables_.push_back(safety::build_zone_table(joint.limits, cfg_.zone_resolution));
  joints_.resize(cfg_.joints.size());
}

void Environment::set_active_region(int index) {
  if (index < 0 || index >= static_cast<int>(cfg_.regions.size()))
    throw std::invalid_argument("set_active_region: index out of range");
  cfg_.active_region = index;
}

EnvState Environment::observe() const {
  EnvState s;
  const size_t n = joints_.size();
  s.f.resize(n);
  s.p.resize(n);
  s.p_dot.resize(n);
  for (size_t j = 0; j < n; ++j) {
    s.f[j] = joints_[j].last_u;
    s.p[j] = joints_[j].loop->plant().chi1;
    s.p_dot[j] = joints_[j].loop->plant().chi2;
  }
  auto [x, x_dot] = forward_kinematics(cfg_, s.p, s.p_dot);
  s.x = x;
  s.x_dot = x_dot;
  s.target = target_;
  s.delta_p = std::hypot(x[0] - target_[0], x[1] - target_[1]);
  return s;
}

EnvState Environment::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (size_t j = 0; j < joints_.size(); ++j) {
    const auto& lim = cfg_.joints[j].limits;
    std::uniform_real_distribution<double> pos(lim.p_min, lim.p_max);
    JointRuntime& rt = joints_[j];
    rt.p_cmd = pos(rng);
    rt.v_cmd = 0;
    rt.latch.reset();
    rt.latch_elapsed = 0;
    rt.last_u = 0;
    rt.loop.emplace(control::PlantState{rt.p_cmd, 0.0}, control::ControllerState{},
                    cfg_.gains, cfg_.joints[j].plant, cfg_.rates.controller_hz,
                    joint_seed(seed, j));
  }
  const Region& region = cfg_.regions[static_cast<size_t>(cfg_.active_region)];
  std::uniform_real_distribution<double> tx(region.x_lo, region.x_hi);
  std::uniform_real_distribution<double> ty(region.y_lo, region.y_hi);
  target_[0] = tx(rng);
  target_[1] = ty(rng);

  step_count_ = 0;
  done_ = false;
  has_episode_ = true;
  cause_ = DoneCause::none;
  state_ = observe();
  return state_;
}

StepResult Environment::step(std::span<const double> action) {
  if (!has_episode_) throw std::logic_error("step: reset the environment first");
  if (done_) throw std::logic_error("step: episode finished");
  if (action.size() != joints_.size())
    throw std::invalid_argument("step: action size mismatch");

  const double dt = cfg_.rates.agent_dt;
  const int n_planner = static_cast<int>(std::lround(dt * cfg_.rates.planner_hz));
  const int n_ctrl = static_cast<int>(std::lround(dt * cfg_.rates.controller_hz));
  const int ratio = n_ctrl / n_planner;

  StepResult result;
  result.joints.resize(joints_.size());
  result.planner_samples = n_planner;
  result.controller_substeps = n_ctrl;

  // Command chain: either follow the braking latch or mask-and-plan.
  std::vector<jbtg::Trajectory> refs(joints_.size());
  for (size_t j = 0; j < joints_.size(); ++j) {
    JointRuntime& rt = joints_[j];
    JointDiagnostics& diag = result.joints[j];
    const auto& lim = cfg_.joints[j].limits;

    const auto follow_latch = [&]() {
      const jbtg::Trajectory& brake = *rt.latch;
      const double remain = brake.duration() - rt.latch_elapsed;
      const double take = std::min(remain, dt);
      jbtg::Trajectory ref = jbtg::slice_trajectory(brake, rt.latch_elapsed,
                                                    rt.latch_elapsed + take);
      rt.latch_elapsed += take;
      diag.braking = true;
      if (brake.duration() - rt.latch_elapsed < 1e-12) {
        rt.p_cmd = brake.end.p;
        rt.v_cmd = 0;
        rt.latch.reset();
        rt.latch_elapsed = 0;
        if (take < dt - 1e-12) {
          // Pad the remainder of the step at rest.
          jbtg::Trajectory pad;
          jbtg::QuinticSegment seg;
          seg.dt = dt - take;
          seg.b = {rt.p_cmd, 0, 0, 0, 0, 0};
          pad.segments.push_back(seg);
          pad.start = pad.sample(0);
          pad.end = pad.sample(seg.dt);
          jbtg::append_trajectory(ref, pad);
        }
      } else {
        rt.p_cmd = ref.end.p;
        rt.v_cmd = ref.end.v;
      }
      diag.range = {ref.end.v, ref.end.v, true};
      diag.commanded = ref.end.v;
      diag.achieved = ref.end.v;
      return ref;
    };

    if (rt.latch) {
      refs[j] = follow_latch();
      continue;
    }

    const safety::VelocityRange range =
        safety::final_range(rt.p_cmd, rt.v_cmd, lim, tables_[j], dt);
    if (range.fallback) {
      rt.latch = safety::braking_trajectory(rt.p_cmd, rt.v_cmd, lim);
      rt.latch_elapsed = 0;
      refs[j] = follow_latch();
      result.joints[j].fallback = true;
      continue;
    }

    bool clamped = false;
    const double v_next = safety::mask_action(action[j], range, &clamped);
    refs[j] = jbtg::plan_step(rt.p_cmd, rt.v_cmd, v_next, lim, dt);
    rt.p_cmd = refs[j].end.p;
    rt.v_cmd = refs[j].achieved_v2;
    diag.range = range;
    diag.commanded = v_next;
    diag.achieved = refs[j].achieved_v2;
    diag.action_clamped = clamped;
  }

  // Inner loops: reference sampled at the planner rate, held for the
  // controller substeps in between.
  bool fault = false;
  std::vector<std::vector<jbtg::ControlPoint>> samples(joints_.size());
  for (size_t j = 0; j < joints_.size(); ++j)
    samples[j] = jbtg::sample_trajectory(refs[j], cfg_.rates.planner_hz);
  for (int k = 0; k < n_ctrl && !fault; ++k) {
    const int idx = k / ratio;
    for (size_t j = 0; j < joints_.size(); ++j) {
      const jbtg::ControlPoint& cp = samples[j][static_cast<size_t>(idx)];
      try {
        joints_[j].last_u = joints_[j].loop->substep({cp.p, cp.v});
      } catch (const control::simulation_fault&) {
        fault = true;
      }
    }
  }

  for (size_t j = 0; j < joints_.size(); ++j) {
    result.joints[j].pos_dev = std::abs(joints_[j].loop->plant().chi1 - joints_[j].p_cmd);
    result.joints[j].vel_dev = std::abs(joints_[j].loop->plant().chi2 - joints_[j].v_cmd);
  }

  ++step_count_;
  state_ = observe();
  const double tip_speed = std::hypot(state_.x_dot[0], state_.x_dot[1]);
  const bool reached = !fault && state_.delta_p <= cfg_.success.distance &&
                       tip_speed < cfg_.success.tip_speed;
  if (fault) {
    done_ = true;
    cause_ = DoneCause::fault;
  } else if (reached) {
    done_ = true;
    cause_ = DoneCause::reached;
  } else if (step_count_ >= cfg_.max_steps) {
    done_ = true;
    cause_ = DoneCause::timeout;
  }

  result.state = state_;
  result.reward = reward(state_, state_.f, reached, cfg_.reward);
  result.done = done_;
  result.cause = done_ ? cause_ : DoneCause::none;
  return result;
}

double Environment::commanded_position(int joint) const {
  return joints_.at(static_cast<size_t>(joint)).p_cmd;
}

double Environment::commanded_velocity(int joint) const {
  return joints_.at(static_cast<size_t>(joint)).v_cmd;
}

bool Environment::braking_latched(int joint) const {
  return joints_.at(static_cast<size_t>(joint)).latch.has_value();
}

std::vector<double> policy_max(const EpisodeConfig& cfg) {
  return std::vector<double>(cfg.joints.size(), 1.0);
}

std::vector<double> policy_min(const EpisodeConfig& cfg) {
  return std::vector<double>(cfg.joints.size(), -1.0);
}

std::vector<double> policy_zero(const EpisodeConfig& cfg) {
  return std::vector<double>(cfg.joints.size(), 0.0);
}

std::vector<double> policy_proportional(const EpisodeConfig& cfg,
                                        const EnvState& state) {
  // Desired tip velocity proportional to the tip error, distributed over the
  // joints by the minimum-norm inverse of the direction matrix.
  const double kGain = 1.5;
  const double ex = state.target[0] - state.x[0];
  const double ey = state.target[1] - state.x[1];
  double a = 0, b = 0, c = 0;  // D D^T = [a b; b c]
  for (const auto& d : cfg.directions) {
    a += d[0] * d[0];
    b += d[0] * d[1];
    c += d[1] * d[1];
  }
  const double det = a * c - b * b;
  const double vx = kGain * ex;
  const double vy = kGain * ey;
  double wx, wy;  // (D D^T)^-1 v
  if (std::abs(det) > 1e-12) {
    wx = (c * vx - b * vy) / det;
    wy = (a * vy - b * vx) / det;
  } else {
    wx = vx / std::max(a, 1e-12);
    wy = vy / std::max(c, 1e-12);
  }
  std::vector<double> action(cfg.joints.size());
  for (size_t j = 0; j < cfg.joints.size(); ++j) {
    const double v_des = cfg.directions[j][0] * wx + cfg.directions[j][1] * wy;
    // The masked range is centered near the current velocity, so act on the
    // velocity change relative to the one-step reachability radius.
    const double dv_cap =
        jbtg::max_speed_change(cfg.rates.agent_dt, cfg.joints[j].limits);
    action[j] = std::clamp((v_des - state.p_dot[j]) / dv_cap, -1.0, 1.0);
  }
  return action;
}

}  // namespace safemotion::env
