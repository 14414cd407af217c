#include "safemotion/io.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace safemotion::io {

namespace {

using nlohmann::json;

// 9 significant digits for plot-ready files.
std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

// Full round-trip precision for logs that must be byte-stable.
std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

jbtg::JointLimits limits_from(const json& j) {
  jbtg::JointLimits lim;
  lim.p_min = j.at("p_min").get<double>();
  lim.p_max = j.at("p_max").get<double>();
  lim.v_max = j.at("v_max").get<double>();
  lim.a_max = j.at("a_max").get<double>();
  lim.j_max = j.at("j_max").get<double>();
  if (j.contains("v_min")) lim.v_min = j.at("v_min").get<double>();
  lim.validate();
  return lim;
}

json limits_to(const jbtg::JointLimits& lim) {
  json j{{"p_min", lim.p_min}, {"p_max", lim.p_max}, {"v_max", lim.v_max},
         {"a_max", lim.a_max}, {"j_max", lim.j_max}};
  if (!std::isnan(lim.v_min)) j["v_min"] = lim.v_min;
  return j;
}

control::SinusoidSpec sinusoid_from(const json& j, control::SinusoidSpec spec) {
  spec.amplitude = j.value("amplitude", spec.amplitude);
  spec.harmonics = j.value("harmonics", spec.harmonics);
  spec.freq_lo = j.value("freq_lo", spec.freq_lo);
  spec.freq_hi = j.value("freq_hi", spec.freq_hi);
  return spec;
}

control::PlantParams plant_from(const json& j) {
  control::PlantParams p;
  p.input_gain = j.value("input_gain", p.input_gain);
  p.f1_amp = j.value("f1_amp", p.f1_amp);
  p.f2_amp = j.value("f2_amp", p.f2_amp);
  if (j.contains("d1")) p.d1 = sinusoid_from(j.at("d1"), p.d1);
  if (j.contains("d2")) p.d2 = sinusoid_from(j.at("d2"), p.d2);
  return p;
}

control::ControllerGains gains_from(const json& j) {
  control::ControllerGains g;
  g.k1 = j.value("k1", g.k1);
  g.k2 = j.value("k2", g.k2);
  g.k3 = j.value("k3", g.k3);
  g.k4 = j.value("k4", g.k4);
  g.k5 = j.value("k5", g.k5);
  g.k6 = j.value("k6", g.k6);
  g.k7 = j.value("k7", g.k7);
  g.k8 = j.value("k8", g.k8);
  g.validate();
  return g;
}

}  // namespace

void write_trajectory_csv(std::ostream& out,
                          const std::vector<jbtg::ControlPoint>& samples) {
  out << "t,p,v,a,j\n";
  for (const auto& s : samples)
    out << g9(s.t) << ',' << g9(s.p) << ',' << g9(s.v) << ',' << g9(s.a) << ','
        << g9(s.j) << '\n';
}

std::vector<jbtg::ControlPoint> read_trajectory_csv(std::istream& in) {
  std::vector<jbtg::ControlPoint> samples;
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,p,v,a,j", 0) != 0)
    throw std::runtime_error("trajectory csv: missing t,p,v,a,j header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    jbtg::ControlPoint cp;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &cp.t, &cp.p, &cp.v,
                    &cp.a, &cp.j) != 5)
      throw std::runtime_error("trajectory csv: malformed row: " + line);
    samples.push_back(cp);
  }
  return samples;
}

jbtg::ValidationReport validate_samples(
    const std::vector<jbtg::ControlPoint>& samples,
    const jbtg::JointLimits& limits) {
  jbtg::ValidationReport rep;
  if (samples.empty()) {
    rep.violations.push_back("no samples");
    return rep;
  }
  rep.p_lo = rep.p_hi = samples.front().p;
  for (const auto& s : samples) {
    rep.max_abs_v = std::max(rep.max_abs_v, std::abs(s.v));
    rep.max_abs_a = std::max(rep.max_abs_a, std::abs(s.a));
    rep.max_abs_j = std::max(rep.max_abs_j, std::abs(s.j));
    rep.p_lo = std::min(rep.p_lo, s.p);
    rep.p_hi = std::max(rep.p_hi, s.p);
  }
  rep.initial_a = samples.front().a;
  rep.terminal_a = samples.back().a;
  const double rel = 1e-6;
  if (rep.max_abs_v > limits.v_max * (1.0 + rel))
    rep.violations.push_back("velocity exceeds v_max");
  if (rep.max_abs_a > limits.a_max * (1.0 + rel))
    rep.violations.push_back("acceleration exceeds a_max");
  if (rep.max_abs_j > limits.j_max * (1.0 + rel))
    rep.violations.push_back("jerk exceeds j_max");
  if (rep.p_lo < limits.p_min - 1e-9 || rep.p_hi > limits.p_max + 1e-9)
    rep.violations.push_back("position leaves [p_min, p_max]");
  return rep;
}

void write_zone_table(std::ostream& out, const safety::SafeZoneTable& table) {
  json header{{"version", 1},
              {"limits_hash", table.limits_hash},
              {"resolution", table.resolution},
              {"v_grid_step", table.v_grid_step},
              {"p_min", table.p_min},
              {"p_max", table.p_max}};
  out << "# " << header.dump() << "\n";
  out << "direction,distance_m,v_cap_mps\n";
  for (size_t i = 0; i < table.upper_caps.size(); ++i)
    out << "upper," << g9(i * table.resolution) << ',' << g9(table.upper_caps[i]) << '\n';
  for (size_t i = 0; i < table.lower_caps.size(); ++i)
    out << "lower," << g9(i * table.resolution) << ',' << g9(table.lower_caps[i]) << '\n';
}

safety::SafeZoneTable read_zone_table(std::istream& in,
                                      const jbtg::JointLimits& limits) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw std::runtime_error("zone table: missing header line");
  const json header = json::parse(line.substr(2));
  safety::SafeZoneTable table;
  table.limits_hash = header.at("limits_hash").get<std::uint64_t>();
  table.resolution = header.at("resolution").get<double>();
  table.v_grid_step = header.value("v_grid_step", table.v_grid_step);
  table.p_min = header.value("p_min", limits.p_min);
  table.p_max = header.value("p_max", limits.p_max);
  if (table.limits_hash != safety::limits_hash(limits))
    throw std::runtime_error("zone table: stale table (limits hash mismatch)");
  if (!std::getline(in, line) || line.rfind("direction,", 0) != 0)
    throw std::runtime_error("zone table: missing column header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    char direction[16];
    double distance = 0, cap = 0;
    if (std::sscanf(line.c_str(), "%15[^,],%lf,%lf", direction, &distance, &cap) != 3)
      throw std::runtime_error("zone table: malformed row: " + line);
    if (std::string(direction) == "upper")
      table.upper_caps.push_back(cap);
    else
      table.lower_caps.push_back(cap);
  }
  if (table.upper_caps.empty() || table.lower_caps.empty())
    throw std::runtime_error("zone table: no rows");
  return table;
}

void write_tracking_csv(std::ostream& out, const control::TrackingResult& result) {
  out << "t,x_r,xr_dot,chi1,chi2,e1,e2,u,phi1,phi2\n";
  for (const auto& r : result.rows)
    out << g9(r.t) << ',' << g9(r.x_r) << ',' << g9(r.xr_dot) << ',' << g9(r.chi1)
        << ',' << g9(r.chi2) << ',' << g9(r.e1) << ',' << g9(r.e2) << ','
        << g9(r.u) << ',' << g9(r.phi1) << ',' << g9(r.phi2) << '\n';
}

void write_episode_header(std::ostream& out, const env::EpisodeConfig& cfg) {
  const size_t n = cfg.joints.size();
  out << "episode,step,reward,done,cause";
  for (size_t j = 0; j < n; ++j)
    out << ",action" << j << ",v_lo" << j << ",v_hi" << j << ",v_cmd" << j
        << ",fallback" << j << ",braking" << j << ",pos_dev" << j << ",vel_dev" << j;
  for (size_t j = 0; j < n; ++j) out << ",f" << j;
  for (size_t j = 0; j < n; ++j) out << ",p" << j;
  for (size_t j = 0; j < n; ++j) out << ",p_dot" << j;
  out << ",x,y,x_dot,y_dot,target_x,target_y,delta_p\n";
}

void write_episode_row(std::ostream& out, const env::EpisodeConfig& cfg,
                       int episode, int step,
                       const std::vector<double>& action,
                       const env::StepResult& result) {
  out << episode << ',' << step << ',' << g17(result.reward) << ','
      << (result.done ? 1 : 0) << ',' << env::to_string(result.cause);
  for (size_t j = 0; j < cfg.joints.size(); ++j) {
    const auto& d = result.joints[j];
    out << ',' << g17(action[j]) << ',' << g17(d.range.v_lo) << ','
        << g17(d.range.v_hi) << ',' << g17(d.commanded) << ','
        << (d.fallback ? 1 : 0) << ',' << (d.braking ? 1 : 0) << ','
        << g17(d.pos_dev) << ',' << g17(d.vel_dev);
  }
  for (double v : result.state.flatten()) out << ',' << g17(v);
  out << '\n';
}

jbtg::JointLimits limits_from_json(const std::string& text) {
  return limits_from(json::parse(text));
}

std::string limits_to_json(const jbtg::JointLimits& limits) {
  return limits_to(limits).dump(2);
}

control::ControllerGains gains_from_json(const std::string& text) {
  return gains_from(json::parse(text));
}

env::EpisodeConfig episode_config_from_json(const std::string& text) {
  const json j = json::parse(text);
  env::EpisodeConfig cfg = env::EpisodeConfig::defaults();
  if (j.contains("joints")) {
    cfg.joints.clear();
    for (const auto& joint : j.at("joints")) {
      env::JointSetup setup;
      setup.limits = limits_from(joint.at("limits"));
      if (joint.contains("plant")) setup.plant = plant_from(joint.at("plant"));
      cfg.joints.push_back(setup);
    }
  }
  if (j.contains("directions")) {
    cfg.directions.clear();
    for (const auto& d : j.at("directions"))
      cfg.directions.push_back({d.at(0).get<double>(), d.at(1).get<double>()});
  }
  if (j.contains("base")) {
    cfg.base = {j.at("base").at(0).get<double>(), j.at("base").at(1).get<double>()};
  }
  if (j.contains("rates")) {
    const auto& r = j.at("rates");
    cfg.rates.agent_dt = r.value("agent_dt", cfg.rates.agent_dt);
    cfg.rates.planner_hz = r.value("planner_hz", cfg.rates.planner_hz);
    cfg.rates.controller_hz = r.value("controller_hz", cfg.rates.controller_hz);
  }
  if (j.contains("regions")) {
    cfg.regions.clear();
    for (const auto& r : j.at("regions"))
      cfg.regions.push_back({r.at("x_lo").get<double>(), r.at("x_hi").get<double>(),
                             r.at("y_lo").get<double>(), r.at("y_hi").get<double>()});
  }
  cfg.active_region = j.value("active_region", cfg.active_region);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  if (j.contains("success")) {
    cfg.success.distance = j.at("success").value("distance", cfg.success.distance);
    cfg.success.tip_speed = j.at("success").value("tip_speed", cfg.success.tip_speed);
  }
  if (j.contains("reward")) {
    const auto& r = j.at("reward");
    cfg.reward.w_force = r.value("w_force", cfg.reward.w_force);
    cfg.reward.w_dist = r.value("w_dist", cfg.reward.w_dist);
    cfg.reward.w_vel = r.value("w_vel", cfg.reward.w_vel);
    cfg.reward.r_reach = r.value("r_reach", cfg.reward.r_reach);
  }
  if (j.contains("gains")) cfg.gains = gains_from(j.at("gains"));
  cfg.zone_resolution = j.value("zone_resolution", cfg.zone_resolution);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.validate();
  return cfg;
}

std::string episode_config_to_json(const env::EpisodeConfig& cfg) {
  json j;
  for (const auto& joint : cfg.joints) {
    json setup{{"limits", limits_to(joint.limits)}};
    setup["plant"] = json{{"input_gain", joint.plant.input_gain},
                          {"f1_amp", joint.plant.f1_amp},
                          {"f2_amp", joint.plant.f2_amp},
                          {"d1",
                           {{"amplitude", joint.plant.d1.amplitude},
                            {"harmonics", joint.plant.d1.harmonics},
                            {"freq_lo", joint.plant.d1.freq_lo},
                            {"freq_hi", joint.plant.d1.freq_hi}}},
                          {"d2",
                           {{"amplitude", joint.plant.d2.amplitude},
                            {"harmonics", joint.plant.d2.harmonics},
                            {"freq_lo", joint.plant.d2.freq_lo},
                            {"freq_hi", joint.plant.d2.freq_hi}}}};
    j["joints"].push_back(setup);
  }
  for (const auto& d : cfg.directions) j["directions"].push_back({d[0], d[1]});
  j["base"] = {cfg.base[0], cfg.base[1]};
  j["rates"] = {{"agent_dt", cfg.rates.agent_dt},
                {"planner_hz", cfg.rates.planner_hz},
                {"controller_hz", cfg.rates.controller_hz}};
  for (const auto& r : cfg.regions)
    j["regions"].push_back(
        {{"x_lo", r.x_lo}, {"x_hi", r.x_hi}, {"y_lo", r.y_lo}, {"y_hi", r.y_hi}});
  j["active_region"] = cfg.active_region;
  j["max_steps"] = cfg.max_steps;
  j["success"] = {{"distance", cfg.success.distance}, {"tip_speed", cfg.success.tip_speed}};
  j["reward"] = {{"w_force", cfg.reward.w_force},
                 {"w_dist", cfg.reward.w_dist},
                 {"w_vel", cfg.reward.w_vel},
                 {"r_reach", cfg.reward.r_reach}};
  j["gains"] = {{"k1", cfg.gains.k1}, {"k2", cfg.gains.k2}, {"k3", cfg.gains.k3},
                {"k4", cfg.gains.k4}, {"k5", cfg.gains.k5}, {"k6", cfg.gains.k6},
                {"k7", cfg.gains.k7}, {"k8", cfg.gains.k8}};
  j["zone_resolution"] = cfg.zone_resolution;
  j["seed"] = cfg.seed;
  return j.dump(2);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace safemotion::io
