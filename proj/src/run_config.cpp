// Copyright 2026 The modecal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "modecal/run_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "modecal/errors.hpp"

namespace modecal {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string("cannot open ") + what + ": " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

ModeVector mode_vector_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != kModeCount) {
    throw ConfigError(where + ": must name exactly the 8 modes");
  }
  ModeVector out{};
  for (const auto& [name, v] : j.items()) {
    std::optional<int> m = mode_index(name);
    if (!m) throw ConfigError(where + ": unknown mode '" + name + "'");
    if (!v.is_number()) throw ConfigError(where + ": '" + name + "' must be numeric");
    out[static_cast<std::size_t>(*m)] = v.get<double>();
  }
  return out;
}

ParameterSpace parse_space(const json& j, const Scenario& scenario, const std::string& origin) {
  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    if (!b.is_object() || b.size() != kModeCount) {
      throw ConfigError(origin + ": space.bounds must name exactly the 8 modes");
    }
    std::array<Interval, kModeCount> bounds;
    for (const auto& [name, v] : b.items()) {
      std::optional<int> m = mode_index(name);
      if (!m) throw ConfigError(origin + ": unknown mode '" + name + "' in space.bounds");
      if (!v.is_array() || v.size() != 2) {
        throw ConfigError(origin + ": space.bounds." + name + " must be [lower, upper]");
      }
      bounds[static_cast<std::size_t>(*m)] = Interval{v[0].get<double>(), v[1].get<double>()};
    }
    return ParameterSpace::from_bounds(bounds);
  }
  if (j.contains("center")) {
    ModeVector center{};
    if (j["center"].is_string() && j["center"].get<std::string>() == "scenario_ground_truth") {
      if (!scenario.ground_truth) {
        throw ConfigError(origin + ": space.center is scenario_ground_truth but the scenario has no"
                          " ground_truth block");
      }
      center = *scenario.ground_truth;
    } else {
      center = mode_vector_from_json(j["center"], origin + ": space.center");
    }
    double halfwidth = j.value("relative_halfwidth", 0.2);
    double floor = j.value("absolute_floor", 0.01);
    return centered_space(center, halfwidth, floor);
  }
  throw ConfigError(origin + ": space needs either 'bounds' or 'center'");
}

OptimizerConfig parse_optimizer(const json& j, const std::string& origin) {
  OptimizerConfig cfg;
  if (j.contains("backend")) cfg.backend = backend_from_string(j["backend"].get<std::string>());
  cfg.b_min = j.value("b_min", cfg.b_min);
  cfg.b_max = j.value("b_max", cfg.b_max);
  cfg.eta = j.value("eta", cfg.eta);
  cfg.gamma = j.value("gamma", cfg.gamma);
  cfg.rho = j.value("rho", cfg.rho);
  cfg.n_iterations = j.value("n_iterations", cfg.n_iterations);
  cfg.max_full_budget_trials = j.value("max_full_budget_trials", cfg.max_full_budget_trials);
  cfg.n_initial_random = j.value("n_initial_random", cfg.n_initial_random);
  cfg.n_candidates = j.value("n_candidates", cfg.n_candidates);
  cfg.h_min = j.value("h_min", cfg.h_min);
  cfg.min_points = j.value("min_points", cfg.min_points);

  if (j.contains("early_stop")) {
    const json& e = j["early_stop"];
    cfg.early_stop.t_start = e.value("t_start", cfg.early_stop.t_start);
    cfg.early_stop.t_end = e.value("t_end", cfg.early_stop.t_end);
    cfg.early_stop.threshold_start = e.value("threshold_start", cfg.early_stop.threshold_start);
    cfg.early_stop.threshold_end = e.value("threshold_end", cfg.early_stop.threshold_end);
    cfg.early_stop.check_iteration = e.value("check_iteration", cfg.early_stop.check_iteration);
  }

  if (j.contains("gp")) {
    const json& g = j["gp"];
    cfg.gp.signal_variance = g.value("signal_variance", cfg.gp.signal_variance);
    cfg.gp.length_scale_fraction = g.value("length_scale_fraction", cfg.gp.length_scale_fraction);
    cfg.gp.noise_variance = g.value("noise_variance", cfg.gp.noise_variance);
    cfg.gp.prior_mean = g.value("prior_mean", cfg.gp.prior_mean);
    cfg.gp.min_points = g.value("min_points", cfg.gp.min_points);
    cfg.gp.max_points = g.value("max_points", cfg.gp.max_points);
  }

  if (j.contains("sga")) {
    const json& s = j["sga"];
    cfg.gp.sga.restarts = s.value("restarts", cfg.gp.sga.restarts);
    cfg.gp.sga.steps = s.value("steps", cfg.gp.sga.steps);
    cfg.gp.sga.step_a = s.value("step_a", cfg.gp.sga.step_a);
    cfg.gp.sga.step_big_a = s.value("step_A", cfg.gp.sga.step_big_a);
    cfg.gp.sga.grad_draws = s.value("grad_draws", cfg.gp.sga.grad_draws);
    cfg.gp.sga.eval_draws = s.value("eval_draws", cfg.gp.sga.eval_draws);
  }

  cfg.validate();
  (void)origin;
  return cfg;
}

}  // namespace

RunConfig run_config_from_texts(const std::string& config_text, const std::string& scenario_text,
                                const std::string& origin) {
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  RunConfig cfg;
  cfg.config_text = config_text;
  cfg.scenario_text = scenario_text;
  cfg.scenario = Scenario::from_json_text(scenario_text, origin + " (scenario)");
  cfg.regenerate_benchmark = j.value("regenerate_benchmark", false);
  if (cfg.regenerate_benchmark && !cfg.scenario.ground_truth) {
    throw ConfigError(origin + ": regenerate_benchmark requires scenario ground_truth");
  }

  if (!j.contains("space")) throw ConfigError(origin + ": missing 'space'");
  cfg.space = parse_space(j["space"], cfg.scenario, origin);

  cfg.optimizer = j.contains("optimizer") ? parse_optimizer(j["optimizer"], origin)
                                          : OptimizerConfig{};

  if (j.contains("clock")) {
    const json& c = j["clock"];
    std::string mode = c.value("mode", "wall");
    if (mode == "virtual") {
      cfg.clock.use_virtual = true;
    } else if (mode != "wall") {
      throw ConfigError(origin + ": clock.mode must be 'wall' or 'virtual'");
    }
    cfg.clock.minutes_per_iteration = c.value("minutes_per_iteration", 1.0);
  }

  if (j.contains("heartbeat")) {
    const json& h = j["heartbeat"];
    cfg.heartbeat.interval_seconds = h.value("interval_seconds", 5.0);
    cfg.heartbeat.timeout_beats = h.value("timeout_beats", 3);
  }

  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::string config_text = read_file(path, "run config");
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.contains("scenario") || !j["scenario"].is_string()) {
    throw ConfigError(path.string() + ": missing 'scenario' path");
  }
  std::filesystem::path scenario_path = j["scenario"].get<std::string>();
  if (scenario_path.is_relative()) scenario_path = path.parent_path() / scenario_path;
  std::string scenario_text = read_file(scenario_path, "scenario file");
  return run_config_from_texts(config_text, scenario_text, path.string());
}

}  // namespace modecal
