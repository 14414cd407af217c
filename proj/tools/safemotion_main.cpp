// Command-line front end: plan single steps, build safe-zone tables, roll
// out episodes with scripted or protocol-driven policies, run the tracking
// demo, and validate trajectory files.
//
// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 simulation fault,
// 5 safety violation detected.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "safemotion/control.hpp"
#include "safemotion/env.hpp"
#include "safemotion/io.hpp"
#include "safemotion/jbtg.hpp"
#include "safemotion/safety.hpp"

namespace {

using namespace safemotion;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitSimFault = 4;
constexpr int kExitSafety = 5;

// Bare or relative config paths fall back to $SAFEMOTION_CONFIG_DIR.
std::string resolve_config_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::exists(path)) return path;
  if (const char* dir = std::getenv("SAFEMOTION_CONFIG_DIR");
      dir != nullptr && fs::path(path).is_relative()) {
    const fs::path candidate = fs::path(dir) / path;
    if (fs::exists(candidate)) return candidate.string();
  }
  return path;
}

jbtg::JointLimits load_limits(const std::string& config_path) {
  if (config_path.empty()) {
    jbtg::JointLimits lim;
    lim.p_min = 0.14;
    lim.p_max = 0.50;
    lim.v_max = 0.15;
    lim.a_max = 1.0;
    lim.j_max = 100.0;
    return lim;
  }
  return io::limits_from_json(io::read_file(resolve_config_path(config_path)));
}

env::EpisodeConfig load_episode_config(const std::string& config_path) {
  if (config_path.empty()) return env::EpisodeConfig::defaults();
  return io::episode_config_from_json(io::read_file(resolve_config_path(config_path)));
}

std::ofstream open_output(const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::ios_base::failure("cannot open output file: " + path);
  return out;
}

int run_plan(const std::string& config_path, double p0, double v1, double v2,
             double dt, double rate, const std::string& out_path) {
  const jbtg::JointLimits limits = load_limits(config_path);
  const jbtg::Trajectory traj = jbtg::plan_step(p0, v1, v2, limits, dt);
  const auto samples = jbtg::sample_trajectory(traj, rate);
  if (!out_path.empty()) {
    std::ofstream out = open_output(out_path);
    io::write_trajectory_csv(out, samples);
    if (!out.good()) throw std::ios_base::failure("write failed: " + out_path);
  }
  jbtg::JointLimits wide = limits;
  wide.p_min = -1e9;
  wide.p_max = 1e9;  // position windows are the safety module's concern
  const jbtg::ValidationReport rep = jbtg::validate_trajectory(traj, wide);
  std::cout << "achieved_v2 " << traj.achieved_v2 << "\n"
            << "segments " << traj.segments.size() << "\n"
            << "duration " << traj.duration() << "\n"
            << "displacement " << traj.displacement() << "\n"
            << "max_abs_v " << rep.max_abs_v << "\n"
            << "max_abs_a " << rep.max_abs_a << "\n"
            << "max_abs_j " << rep.max_abs_j << "\n";
  if (!rep.ok()) {
    for (const auto& v : rep.violations) std::cerr << "violation: " << v << "\n";
    return kExitSafety;
  }
  return kExitOk;
}

int run_zone(const std::string& config_path, double resolution,
             const std::string& out_path) {
  const jbtg::JointLimits limits = load_limits(config_path);
  const safety::SafeZoneTable table = safety::build_zone_table(limits, resolution);
  if (!out_path.empty()) {
    std::ofstream out = open_output(out_path);
    io::write_zone_table(out, table);
    if (!out.good()) throw std::ios_base::failure("write failed: " + out_path);
  }
  std::cout << "entries " << table.upper_caps.size() + table.lower_caps.size() << "\n"
            << "full_speed_braking_distance "
            << safety::braking_profile(limits.v_max, limits).distance << "\n"
            << "limits_hash " << table.limits_hash << "\n";
  return kExitOk;
}

int run_check(const std::string& config_path, const std::string& input_path) {
  const jbtg::JointLimits limits = load_limits(config_path);
  std::ifstream in(input_path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open trajectory file: " + input_path);
  const auto samples = io::read_trajectory_csv(in);
  const jbtg::ValidationReport rep = io::validate_samples(samples, limits);
  std::cout << "samples " << samples.size() << "\n"
            << "max_abs_v " << rep.max_abs_v << "\n"
            << "max_abs_a " << rep.max_abs_a << "\n"
            << "max_abs_j " << rep.max_abs_j << "\n"
            << "p_range [" << rep.p_lo << ", " << rep.p_hi << "]\n";
  if (!rep.ok()) {
    for (const auto& v : rep.violations) std::cerr << "violation: " << v << "\n";
    return kExitSafety;
  }
  std::cout << "compliant\n";
  return kExitOk;
}

int run_track(const std::string& config_path, double duration,
              std::uint64_t seed, bool disturbance, const std::string& out_path) {
  jbtg::JointLimits limits;
  control::ControllerGains gains;
  control::PlantParams plant;
  if (!config_path.empty()) {
    const auto j = nlohmann::json::parse(io::read_file(resolve_config_path(config_path)));
    if (j.contains("limits"))
      limits = io::limits_from_json(j.at("limits").dump());
    else
      limits = load_limits("");
    if (j.contains("gains")) gains = io::gains_from_json(j.at("gains").dump());
    if (j.contains("plant")) {
      const auto& p = j.at("plant");
      plant.input_gain = p.value("input_gain", plant.input_gain);
      plant.f1_amp = p.value("f1_amp", plant.f1_amp);
      plant.f2_amp = p.value("f2_amp", plant.f2_amp);
    }
  } else {
    limits = load_limits("");
  }
  if (!disturbance) {
    plant.f1_amp = plant.f2_amp = 0;
    plant.d1.amplitude = plant.d2.amplitude = 0;
  }

  // Demo reference: run up to the cap, hold, brake, reverse at half speed,
  // return to rest; repeated to fill the duration.
  const double step_dt = 0.05;
  const double p_start = 0.5 * (limits.p_min + limits.p_max);
  const std::array<double, 4> schedule{limits.v_max, 0.0, -limits.v_max / 2, 0.0};
  jbtg::Trajectory ref = jbtg::plan_step(p_start, 0.0, schedule[0], limits, step_dt);
  size_t phase = 0;
  while (ref.duration() < duration - step_dt / 2) {
    phase = (static_cast<size_t>(ref.duration() / (duration / 4.0))) % schedule.size();
    jbtg::append_trajectory(ref, jbtg::plan_step(ref.end.p, ref.achieved_v2,
                                                 schedule[phase], limits, step_dt));
  }

  const control::TrackingResult result = control::track_trajectory(
      ref, control::PlantState{ref.start.p, ref.start.v}, control::ControllerState{},
      gains, plant, 2000.0, seed);
  if (!out_path.empty()) {
    std::ofstream out = open_output(out_path);
    io::write_tracking_csv(out, result);
    if (!out.good()) throw std::ios_base::failure("write failed: " + out_path);
  }
  std::cout << "duration " << ref.duration() << "\n"
            << "max_abs_e1 " << result.max_abs_e1 << "\n"
            << "max_abs_e2 " << result.max_abs_e2 << "\n";
  return kExitOk;
}

int run_simulate(const std::string& config_path, const std::string& policy,
                 int episodes, long step_budget, std::uint64_t seed,
                 const std::string& out_path) {
  env::EpisodeConfig cfg = load_episode_config(config_path);
  if (step_budget > 0 && step_budget > cfg.max_steps) cfg.max_steps = static_cast<int>(step_budget);

  if (policy == "protocol") {
    env::policy_protocol_serve(cfg, std::cin, std::cout);
    return kExitOk;
  }

  std::optional<std::ofstream> out;
  if (!out_path.empty()) {
    out.emplace(open_output(out_path));
    io::write_episode_header(*out, cfg);
  }

  env::Environment environment(cfg);
  long safety_violations = 0;
  long fallback_engagements = 0;
  long total_steps = 0;
  long fault_step = -1;
  const long budget = step_budget > 0 ? step_budget : static_cast<long>(episodes) * cfg.max_steps;
  int episode = 0;
  bool fault = false;
  while (total_steps < budget && episode < (step_budget > 0 ? 1 << 20 : episodes) && !fault) {
    env::EnvState state = environment.reset(seed + static_cast<std::uint64_t>(episode));
    int step = 0;
    while (!environment.episode_done() && total_steps < budget) {
      std::vector<double> action;
      if (policy == "max")
        action = env::policy_max(cfg);
      else if (policy == "min")
        action = env::policy_min(cfg);
      else if (policy == "zero")
        action = env::policy_zero(cfg);
      else
        action = env::policy_proportional(cfg, state);
      const env::StepResult r = environment.step(action);
      state = r.state;
      if (out) io::write_episode_row(*out, cfg, episode, step, action, r);
      for (size_t j = 0; j < cfg.joints.size(); ++j) {
        const auto& lim = cfg.joints[j].limits;
        const double pc = environment.commanded_position(static_cast<int>(j));
        if (pc < lim.p_min - 1e-9 || pc > lim.p_max + 1e-9) ++safety_violations;
        const auto& d = r.joints[j];
        if (d.commanded < d.range.v_lo - 1e-12 || d.commanded > d.range.v_hi + 1e-12)
          ++safety_violations;
        if (d.fallback) ++fallback_engagements;
      }
      ++step;
      ++total_steps;
      if (r.done && r.cause == env::DoneCause::fault) {
        fault = true;
        fault_step = total_steps;
      }
    }
    ++episode;
  }
  if (out && !out->good()) throw std::ios_base::failure("write failed: " + out_path);

  std::cout << "episodes " << episode << "\n"
            << "steps " << total_steps << "\n"
            << "fallback_engagements " << fallback_engagements << "\n"
            << "safety_violations " << safety_violations << "\n";
  if (fault) {
    std::cerr << "simulation fault at step " << fault_step << "\n";
    return kExitSimFault;
  }
  if (safety_violations > 0) return kExitSafety;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kinematically safe motion toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, input_path, policy = "proportional";
  double p0 = 0.32, v1 = 0.0, v2 = 0.0, dt = 0.05, rate = 1000.0;
  double resolution = 5e-4, duration = 15.0;
  std::uint64_t seed = 1;
  int episodes = 1;
  long steps = 0;
  bool no_disturbance = false;

  auto* plan = app.add_subcommand("plan", "Plan one velocity step and write t,p,v,a,j CSV");
  plan->add_option("--config", config_path, "joint limits JSON");
  plan->add_option("--p0", p0, "start position (m)");
  plan->add_option("--v1", v1, "start velocity (m/s)")->required();
  plan->add_option("--v2", v2, "target velocity (m/s)")->required();
  plan->add_option("--dt", dt, "step time (s)")->required();
  plan->add_option("--rate", rate, "sampling rate (Hz)");
  plan->add_option("--out", out_path, "output CSV path");

  auto* zone = app.add_subcommand("zone", "Build the safe velocity zone table");
  zone->add_option("--config", config_path, "joint limits JSON");
  zone->add_option("--resolution", resolution, "distance grid step (m)");
  zone->add_option("--out", out_path, "output table path");

  auto* simulate = app.add_subcommand("simulate", "Roll out episodes with a policy");
  simulate->add_option("--config", config_path, "episode config JSON");
  simulate->add_option("--policy", policy, "max|min|zero|proportional|protocol");
  simulate->add_option("--episodes", episodes, "number of episodes");
  simulate->add_option("--steps", steps, "total step budget (overrides max_steps)");
  simulate->add_option("--seed", seed, "base seed");
  simulate->add_option("--out", out_path, "episode log CSV path");

  auto* track = app.add_subcommand("track", "Controller demo on a scripted reference");
  track->add_option("--config", config_path, "limits/gains/plant JSON");
  track->add_option("--duration", duration, "reference duration (s)");
  track->add_option("--seed", seed, "disturbance seed");
  track->add_flag("--no-disturbance", no_disturbance, "disable disturbances");
  track->add_option("--out", out_path, "tracking log CSV path");

  auto* check = app.add_subcommand("check", "Validate a trajectory CSV against limits");
  check->add_option("--config", config_path, "joint limits JSON");
  check->add_option("--input", input_path, "trajectory CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (plan->parsed()) return run_plan(config_path, p0, v1, v2, dt, rate, out_path);
    if (zone->parsed()) return run_zone(config_path, resolution, out_path);
    if (simulate->parsed())
      return run_simulate(config_path, policy, episodes, steps, seed, out_path);
    if (track->parsed())
      return run_track(config_path, duration, seed, !no_disturbance, out_path);
    if (check->parsed()) return run_check(config_path, input_path);
  } catch (const std::ios_base::failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const control::simulation_fault& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSimFault;
  } catch (const safety::safety_fault& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSafety;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;
}
