#pragma once

// Multirate reaching-task environment: per agent step, mask the normalized
// action into the joint's safe velocity range, plan a jerk-bounded reference
// over the step, and track it with the adaptive controller at the inner
// rate. Planar prismatic kinematics map joint extensions to the tip.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "safemotion/control.hpp"
#include "safemotion/jbtg.hpp"
#include "safemotion/safety.hpp"

namespace safemotion::env {

struct JointSetup {
  jbtg::JointLimits limits;
  control::PlantParams plant;
};

/// Axis-aligned target region in tip space; degenerate boxes are points.
struct Region {
  double x_lo = 0, x_hi = 0, y_lo = 0, y_hi = 0;
  bool contains(double x, double y, double tol = 1e-12) const {
    return x >= x_lo - tol && x <= x_hi + tol && y >= y_lo - tol && y <= y_hi + tol;
  }
};

struct RewardWeights {
  double w_force = 1e-3;
  double w_dist = 1.0;
  double w_vel = 0.1;
  double r_reach = 100.0;
};

struct SuccessRule {
  double distance = 0.05;   ///< m
  double tip_speed = 0.10;  ///< m/s, strict upper bound
};

struct Rates {
  double agent_dt = 0.05;
  double planner_hz = 1000.0;
  double controller_hz = 2000.0;
};

struct EpisodeConfig {
  std::vector<JointSetup> joints;
  std::vector<std::array<double, 2>> directions;  ///< unit tip directions
  std::array<double, 2> base = {0.0, 0.0};
  Rates rates;
  std::vector<Region> regions;  ///< nested curriculum regions
  int active_region = 0;
  int max_steps = 300;
  SuccessRule success;
  RewardWeights reward;
  control::ControllerGains gains;
  double zone_resolution = 5e-4;
  std::uint64_t seed = 1;

  /// Paper-parameter three-joint planar setup.
  static EpisodeConfig defaults();

  /// Throws std::invalid_argument on inconsistent sizes, non-unit
  /// directions, rates that do not divide evenly, or target regions whose
  /// corners the tip cannot reach.
  void validate() const;

  int state_dim() const { return 3 * static_cast<int>(joints.size()) + 7; }
};

/// Observation built from the actual plant states.
struct EnvState {
  std::vector<double> f;      ///< per-joint force proxy (controller output)
  std::vector<double> p;      ///< joint positions (m)
  std::vector<double> p_dot;  ///< joint velocities (m/s)
  std::array<double, 2> x{};      ///< tip position (m)
  std::array<double, 2> x_dot{};  ///< tip velocity (m/s)
  std::array<double, 2> target{};
  double delta_p = 0;  ///< tip-to-target distance (m)

  /// Fixed layout: f..., p..., p_dot..., x, x_dot, target, delta_p.
  std::vector<double> flatten() const;
};

enum class DoneCause { none, reached, timeout, fault };

const char* to_string(DoneCause cause);

struct JointDiagnostics {
  safety::VelocityRange range;  ///< the step's admissible interval
  double commanded = 0;         ///< velocity handed to the planner
  double achieved = 0;          ///< end-of-step commanded velocity
  bool fallback = false;        ///< empty intersection seen this step
  bool braking = false;         ///< braking latch active this step
  bool action_clamped = false;
  double pos_dev = 0;  ///< |actual - commanded| position at step end
  double vel_dev = 0;  ///< |actual - commanded| velocity at step end
};

struct StepResult {
  EnvState state;
  double reward = 0;
  bool done = false;
  DoneCause cause = DoneCause::none;
  std::vector<JointDiagnostics> joints;
  int planner_samples = 0;
  int controller_substeps = 0;
};

/// Tip position and velocity of the planar prismatic chain.
std::pair<std::array<double, 2>, std::array<double, 2>> forward_kinematics(
    const EpisodeConfig& cfg, std::span<const double> p,
    std::span<const double> p_dot);

///  -w_force |u| - w_dist delta_p - w_vel |x_dot| + r_reach [reached]
double reward(const EnvState& state, std::span<const double> u, bool reached,
              const RewardWeights& weights);

/// One sequential episode state machine. Instances are independent; a single
/// instance must not be stepped concurrently.
class Environment {
 public:
  explicit Environment(EpisodeConfig cfg);

  EnvState reset(std::uint64_t seed);
  StepResult step(std::span<const double> action);

  bool episode_done() const { return done_; }
  bool has_episode() const { return has_episode_; }
  int steps_taken() const { return step_count_; }
  const EnvState& state() const { return state_; }
  const EpisodeConfig& config() const { return cfg_; }
  void set_active_region(int index);

  double commanded_position(int joint) const;
  double commanded_velocity(int joint) const;
  bool braking_latched(int joint) const;

 private:
  struct JointRuntime {
    double p_cmd = 0;
    double v_cmd = 0;
    std::optional<control::JointLoop> loop;
    std::optional<jbtg::Trajectory> latch;
    double latch_elapsed = 0;
    double last_u = 0;
  };

  EnvState observe() const;

  EpisodeConfig cfg_;
  std::vector<safety::SafeZoneTable> tables_;
  std::vector<JointRuntime> joints_;
  std::array<double, 2> target_{};
  EnvState state_;
  int step_count_ = 0;
  bool done_ = false;
  bool has_episode_ = false;
  DoneCause cause_ = DoneCause::none;
};

/// Scripted policies for rollouts and smoke tests. `proportional` is a pure
/// function of the observation (no access to the masked ranges).
std::vector<double> policy_max(const EpisodeConfig& cfg);
std::vector<double> policy_min(const EpisodeConfig& cfg);
std::vector<double> policy_zero(const EpisodeConfig& cfg);
std::vector<double> policy_proportional(const EpisodeConfig& cfg,
                                        const EnvState& state);

/// Line-delimited JSON session on the given streams; see README for the
/// request/response schema. Returns after "close" or end of input.
void policy_protocol_serve(const EpisodeConfig& cfg, std::istream& in,
                           std::ostream& out);

}  // namespace safemotion::env
