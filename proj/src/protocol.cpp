#include <json.hpp>

#include <istream>
#include <ostream>
#include <string>

#include "safemotion/env.hpp"

namespace safemotion::env {

namespace {

using nlohmann::json;

json error_response(const std::string& message) {
  return json{{"v", 1}, {"error", message}};
}

json state_json(const EnvState& state) { return json(state.flatten()); }

json diagnostics_json(const StepResult& result) {
  json d;
  for (const auto& j : result.joints) {
    d["v_lo"].push_back(j.range.v_lo);
    d["v_hi"].push_back(j.range.v_hi);
    d["commanded"].push_back(j.commanded);
    d["achieved"].push_back(j.achieved);
    d["fallback"].push_back(j.fallback);
    d["braking"].push_back(j.braking);
    d["clamped"].push_back(j.action_clamped);
    d["pos_dev"].push_back(j.pos_dev);
    d["vel_dev"].push_back(j.vel_dev);
  }
  d["planner_samples"] = result.planner_samples;
  d["controller_substeps"] = result.controller_substeps;
  return d;
}

}  // namespace

void policy_protocol_serve(const EpisodeConfig& cfg, std::istream& in,
                           std::ostream& out) {
  Environment environment(cfg);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json response;
    try {
      const json request = json::parse(line);
      const std::string cmd = request.value("cmd", "");
      if (cmd == "close") {
        out << json{{"v", 1}, {"ok", true}}.dump() << "\n";
        break;
      } else if (cmd == "spec") {
        json layout = json::array();
        const size_t n = cfg.joints.size();
        for (size_t i = 0; i < n; ++i) layout.push_back("f" + std::to_string(i));
        for (size_t i = 0; i < n; ++i) layout.push_back("p" + std::to_string(i));
        for (size_t i = 0; i < n; ++i) layout.push_back("p_dot" + std::to_string(i));
        for (const char* name : {"x", "y", "x_dot", "y_dot", "target_x", "target_y", "delta_p"})
          layout.push_back(name);
        response = json{{"v", 1},
                        {"protocol", "safemotion-env/1"},
                        {"state_dim", cfg.state_dim()},
                        {"action_dim", n},
                        {"state_layout", layout},
                        {"agent_dt", cfg.rates.agent_dt}};
      } else if (cmd == "reset") {
        const std::uint64_t seed = request.value("seed", cfg.seed);
        const EnvState state = environment.reset(seed);
        response = json{{"v", 1}, {"state", state_json(state)}, {"done", false}};
      } else if (cmd == "step") {
        if (!environment.has_episode()) {
          response = error_response("no active episode, send reset first");
        } else if (environment.episode_done()) {
          response = error_response("episode finished");
        } else if (!request.contains("action") || !request["action"].is_array()) {
          response = error_response("step requires an action array");
        } else {
          std::vector<double> action;
          for (const auto& a : request["action"]) {
            if (!a.is_number()) throw std::invalid_argument("action entries must be numbers");
            action.push_back(a.get<double>());
          }
          if (action.size() != cfg.joints.size()) {
            response = error_response("action size mismatch");
          } else {
            const StepResult r = environment.step(action);
            response = json{{"v", 1},
                            {"state", state_json(r.state)},
                            {"reward", r.reward},
                            {"done", r.done},
                            {"cause", to_string(r.cause)},
                            {"diag", diagnostics_json(r)}};
          }
        }
      } else {
        response = error_response("unknown command");
      }
    } catch (const json::exception& e) {
      response = error_response(std::string("malformed request: ") + e.what());
    } catch (const std::exception& e) {
      response = error_response(e.what());
    }
    out << response.dump() << "\n";
    out.flush();
  }
}

}  // namespace safemotion::env
