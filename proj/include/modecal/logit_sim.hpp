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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "modecal/config_space.hpp"
#include "modecal/mode_share.hpp"
#include "modecal/modes.hpp"

namespace modecal {

// Fixed per-agent, per-mode trip characteristics.
struct ModeAttributes {
  double cost = 0.0;       // dollars, >= 0
  double time = 1.0;       // minutes, > 0
  double transfers = 0.0;  // count, >= 0
};

struct UtilityCoefficients {
  double cost = 0.0;       // utility per dollar
  double time = 0.0;       // utility per minute
  double transfers = 0.0;  // utility per transfer
};

// Generator parameters for one mode's attribute draws: log-normal cost and
// time (parameterized by median and log-space sigma), Poisson transfers.
struct AttributeDistribution {
  double cost_median = 1.0;
  double cost_sigma = 0.3;
  double time_median = 20.0;
  double time_sigma = 0.3;
  double transfers_mean = 0.0;
};

struct Scenario {
  int population = 10000;
  std::uint64_t seed = 0;  // drives agent attribute draws only
  double capacity = 3500.0;  // road capacity, vehicle-equivalents
  double bpr_alpha = 0.15;
  double bpr_beta = 4.0;
  double damping = 0.5;  // travel-time relaxation factor, in (0, 1]
  UtilityCoefficients coefficients;
  std::array<AttributeDistribution, kModeCount> attributes;
  ModeShare benchmark = ModeShare::from_counts({2, 49, 4, 3, 2, 1, 22, 17});
  // Present when the scenario was built around known intercepts; used by
  // calibration setups that regenerate the benchmark from them.
  std::optional<ModeVector> ground_truth;

  void validate() const;  // throws ConfigError
  static Scenario from_json_file(const std::filesystem::path& path);
  static Scenario from_json_text(const std::string& text, const std::string& origin);
};

// Eq-style linear utility: intercept + cost/time/transfer terms.
inline double utility(double intercept, const ModeAttributes& attrs,
                      const UtilityCoefficients& coeffs) {
  return intercept + coeffs.cost * attrs.cost + coeffs.time * attrs.time +
         coeffs.transfers * attrs.transfers;
}

// Softmax over the 8 mode utilities, computed with max-subtraction.
std::array<double, kModeCount> choice_probabilities(const std::array<double, kModeCount>& utilities);

// BPR volume-delay curve: base_time * (1 + alpha * (volume / capacity)^beta).
double congestion_update(double base_time, double car_volume, double capacity, double bpr_alpha,
                         double bpr_beta);

// All agents' drawn attributes; immutable once generated and shareable across
// concurrent simulations.
class AgentPopulation {
 public:
  static AgentPopulation generate(const Scenario& scenario);

  int size() const { return static_cast<int>(agents_.size()); }
  const std::array<ModeAttributes, kModeCount>& agent(int i) const {
    return agents_[static_cast<std::size_t>(i)];
  }

 private:
  std::vector<std::array<ModeAttributes, kModeCount>> agents_;
};

struct SimulationResult {
  ModeShare final_share = ModeShare::from_counts({1, 1, 1, 1, 1, 1, 1, 1});
  std::vector<ModeShare> share_trajectory;  // one entry per iteration run
  std::vector<double> loss_trajectory;      // L1 percent vs benchmark
  int iterations_run = 0;
};

// Step-at-a-time simulation. One step: utilities under current car travel
// times -> stochastic mode choice per agent -> share aggregation -> damped
// BPR update of the car time factor. The per-agent choice draw is a pure
// function of (seed, agent, iteration), so runs at budgets b and b' > b
// share their first b iterations exactly.
class SimulationRun {
 public:
  SimulationRun(const Scenario& scenario, const AgentPopulation& population,
                const InterceptConfig& config, std::uint64_t seed);

  void step();
  int iterations_run() const { return iteration_; }
  const ModeShare& current_share() const;
  double current_loss() const;  // L1 vs scenario benchmark
  const std::vector<ModeShare>& share_trajectory() const { return shares_; }
  const std::vector<double>& loss_trajectory() const { return losses_; }
  SimulationResult result() const;

 private:
  const Scenario& scenario_;
  const AgentPopulation& population_;
  ModeVector intercepts_;
  std::uint64_t seed_;
  int iteration_ = 0;
  double car_time_factor_ = 1.0;  // free flow at start
  std::vector<ModeShare> shares_;
  std::vector<double> losses_;
};

// Runs `budget` iterations (throws ConfigError on budget < 1). Deterministic
// given (scenario, population, config, budget, seed).
SimulationResult run_simulation(const Scenario& scenario, const AgentPopulation& population,
                                const InterceptConfig& config, int budget, std::uint64_t seed);

// Convenience overload that generates the population first.
SimulationResult run_simulation(const Scenario& scenario, const InterceptConfig& config, int budget,
                                std::uint64_t seed);

// Per-iteration share export: header plus one (iteration, mode, share) row
// per mode per iteration.
std::string trajectory_csv(const SimulationResult& result);

}  // namespace modecal
