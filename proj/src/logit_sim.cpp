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

#include "modecal/logit_sim.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "modecal/errors.hpp"
#include "modecal/numerics.hpp"
#include "modecal/rng.hpp"

namespace modecal {

namespace {

using nlohmann::json;

// Substream salts so agent draws, choice draws, etc. never collide.
constexpr std::uint64_t kAgentSalt = 0xa6e17a1e5ULL;
constexpr std::uint64_t kChoiceSalt = 0xc401ce5a17ULL;

double require_number(const json& j, const char* key, const std::string& origin) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ConfigError(origin + ": missing or non-numeric field '" + key + "'");
  }
  return j[key].get<double>();
}

}  // namespace

void Scenario::validate() const {
  if (population < 1) throw ConfigError("scenario: population must be >= 1");
  if (!(capacity > 0.0)) throw ConfigError("scenario: capacity must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("scenario: damping must be in (0, 1]");
  if (!(bpr_beta >= 0.0) || !(bpr_alpha >= 0.0)) {
    throw ConfigError("scenario: bpr_alpha and bpr_beta must be >= 0");
  }
  for (int m = 0; m < kModeCount; ++m) {
    const AttributeDistribution& d = attributes[static_cast<std::size_t>(m)];
    if (!(d.cost_median >= 0.0) || !(d.time_median > 0.0) || !(d.transfers_mean >= 0.0) ||
        !(d.cost_sigma >= 0.0) || !(d.time_sigma >= 0.0)) {
      throw ConfigError(std::string("scenario: invalid attribute distribution for '") +
                        std::string(kModeNames[static_cast<std::size_t>(m)]) + "'");
    }
  }
}

Scenario Scenario::from_json_text(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  Scenario s;
  s.population = static_cast<int>(require_number(j, "population", origin));
  s.seed = j.value("seed", std::uint64_t{0});
  s.capacity = require_number(j, "capacity", origin);
  s.bpr_alpha = j.value("bpr_alpha", 0.15);
  s.bpr_beta = j.value("bpr_beta", 4.0);
  s.damping = j.value("damping", 0.5);

  if (j.contains("coefficients")) {
    const json& c = j["coefficients"];
    s.coefficients.cost = require_number(c, "cost", origin + ".coefficients");
    s.coefficients.time = require_number(c, "time", origin + ".coefficients");
    s.coefficients.transfers = require_number(c, "transfers", origin + ".coefficients");
  }

  if (!j.contains("attributes") || !j["attributes"].is_object()) {
    throw ConfigError(origin + ": missing 'attributes' object");
  }
  for (const auto& [name, spec] : j["attributes"].items()) {
    std::optional<int> m = mode_index(name);
    if (!m) throw ConfigError(origin + ": unknown mode '" + name + "' in attributes");
    AttributeDistribution d;
    d.cost_median = require_number(spec, "cost_median", origin + ".attributes." + name);
    d.cost_sigma = spec.value("cost_sigma", 0.3);
    d.time_median = require_number(spec, "time_median", origin + ".attributes." + name);
    d.time_sigma = spec.value("time_sigma", 0.3);
    d.transfers_mean = spec.value("transfers_mean", 0.0);
    s.attributes[static_cast<std::size_t>(*m)] = d;
  }
  for (int m = 0; m < kModeCount; ++m) {
    if (!j["attributes"].contains(std::string(kModeNames[static_cast<std::size_t>(m)]))) {
      throw ConfigError(origin + ": attributes missing mode '" +
                        std::string(kModeNames[static_cast<std::size_t>(m)]) + "'");
    }
  }

  if (j.contains("benchmark")) {
    const json& b = j["benchmark"];
    if (!b.is_object() || b.size() != kModeCount) {
      throw ConfigError(origin + ": benchmark must list exactly the 8 modes");
    }
    ModeVector shares{};
    for (const auto& [name, v] : b.items()) {
      std::optional<int> m = mode_index(name);
      if (!m) throw ConfigError(origin + ": unknown mode '" + name + "' in benchmark");
      if (!v.is_number()) throw ConfigError(origin + ": benchmark '" + name + "' must be numeric");
      shares[static_cast<std::size_t>(*m)] = v.get<double>();
    }
    s.benchmark = ModeShare::from_percentages(shares);
  }

  if (j.contains("ground_truth")) {
    const json& g = j["ground_truth"];
    if (!g.is_object() || g.size() != kModeCount) {
      throw ConfigError(origin + ": ground_truth must list exactly the 8 modes");
    }
    ModeVector truth{};
    for (const auto& [name, v] : g.items()) {
      std::optional<int> m = mode_index(name);
      if (!m) throw ConfigError(origin + ": unknown mode '" + name + "' in ground_truth");
      truth[static_cast<std::size_t>(*m)] = v.get<double>();
    }
    s.ground_truth = truth;
  }

  s.validate();
  return s;
}

Scenario Scenario::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str(), path.string());
}

std::array<double, kModeCount> choice_probabilities(
    const std::array<double, kModeCount>& utilities) {
  std::array<double, kModeCount> probs{};
  softmax_into(utilities, probs);
  return probs;
}

double congestion_update(double base_time, double car_volume, double capacity, double bpr_alpha,
                         double bpr_beta) {
  if (!(capacity > 0.0)) throw ConfigError("congestion_update: capacity must be > 0");
  return base_time * (1.0 + bpr_alpha * std::pow(car_volume / capacity, bpr_beta));
}

AgentPopulation AgentPopulation::generate(const Scenario& scenario) {
  scenario.validate();
  AgentPopulation pop;
  pop.agents_.resize(static_cast<std::size_t>(scenario.population));
  for (int a = 0; a < scenario.population; ++a) {
    Rng rng(mix_seed({scenario.seed, kAgentSalt, static_cast<std::uint64_t>(a)}));
    auto& modes = pop.agents_[static_cast<std::size_t>(a)];
    for (int m = 0; m < kModeCount; ++m) {
      const AttributeDistribution& d = scenario.attributes[static_cast<std::size_t>(m)];
      ModeAttributes attrs;
      attrs.cost = d.cost_median * std::exp(d.cost_sigma * rng.normal());
      attrs.time = d.time_median * std::exp(d.time_sigma * rng.normal());
      attrs.transfers = static_cast<double>(rng.poisson(d.transfers_mean));
      modes[static_cast<std::size_t>(m)] = attrs;
    }
  }
  return pop;
}

SimulationRun::SimulationRun(const Scenario& scenario, const AgentPopulation& population,
                             const InterceptConfig& config, std::uint64_t seed)
    : scenario_(scenario), population_(population), intercepts_(config.values), seed_(seed) {
  if (population.size() != scenario.population) {
    throw ConfigError("simulation: population table does not match scenario population");
  }
}

void SimulationRun::step() {
  const int n = population_.size();
  const UtilityCoefficients& c = scenario_.coefficients;
  const std::uint64_t iter = static_cast<std::uint64_t>(iteration_ + 1);

  std::array<std::int64_t, kModeCount> counts{};
  std::array<double, kModeCount> utilities{};
  std::array<double, kModeCount> probs{};

  for (int a = 0; a < n; ++a) {
    const auto& attrs = population_.agent(a);
    for (int m = 0; m < kModeCount; ++m) {
      ModeAttributes eff = attrs[static_cast<std::size_t>(m)];
      if (m == kCarMode) eff.time *= car_time_factor_;
      utilities[static_cast<std::size_t>(m)] =
          utility(intercepts_[static_cast<std::size_t>(m)], eff, c);
    }
    softmax_into(utilities, probs);

    double u = keyed_uniform({seed_, kChoiceSalt, static_cast<std::uint64_t>(a), iter});
    double cum = 0.0;
    int chosen = kModeCount - 1;
    for (int m = 0; m < kModeCount; ++m) {
      cum += probs[static_cast<std::size_t>(m)];
      if (u < cum) {
        chosen = m;
        break;
      }
    }
    ++counts[static_cast<std::size_t>(chosen)];
  }

  ModeShare share = ModeShare::from_counts(counts);
  shares_.push_back(share);
  losses_.push_back(l1_objective(share, scenario_.benchmark));

  double car_volume = static_cast<double>(counts[kCarMode]);
  double target = congestion_update(1.0, car_volume, scenario_.capacity, scenario_.bpr_alpha,
                                    scenario_.bpr_beta);
  car_time_factor_ = (1.0 - scenario_.damping) * car_time_factor_ + scenario_.damping * target;

  ++iteration_;
}

const ModeShare& SimulationRun::current_share() const {
  if (shares_.empty()) throw ConfigError("simulation: no iterations run yet");
  return shares_.back();
}

double SimulationRun::current_loss() const {
  if (losses_.empty()) throw ConfigError("simulation: no iterations run yet");
  return losses_.back();
}

SimulationResult SimulationRun::result() const {
  SimulationResult r;
  r.final_share = current_share();
  r.share_trajectory = shares_;
  r.loss_trajectory = losses_;
  r.iterations_run = iteration_;
  return r;
}

SimulationResult run_simulation(const Scenario& scenario, const AgentPopulation& population,
                                const InterceptConfig& config, int budget, std::uint64_t seed) {
  if (budget < 1) throw ConfigError("run_simulation: budget must be >= 1");
  SimulationRun run(scenario, population, config, seed);
  for (int i = 0; i < budget; ++i) run.step();
  return run.result();
}

SimulationResult run_simulation(const Scenario& scenario, const InterceptConfig& config, int budget,
                                std::uint64_t seed) {
  AgentPopulation pop = AgentPopulation::generate(scenario);
  return run_simulation(scenario, pop, config, budget, seed);
}

std::string trajectory_csv(const SimulationResult& result) {
  std::ostringstream oss;
  oss << "iteration,mode,share\n";
  for (std::size_t i = 0; i < result.share_trajectory.size(); ++i) {
    for (int m = 0; m < kModeCount; ++m) {
      oss << (i + 1) << "," << kModeNames[static_cast<std::size_t>(m)] << ","
          << result.share_trajectory[i][m] << "\n";
    }
  }
  return oss.str();
}

}  // namespace modecal
