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

#include <cstdint>
#include <optional>
#include <vector>

namespace modecal {

// Geometric fidelity ladder between the low- and high-fidelity iteration
// budgets, downsampled by eta per stage.
struct BudgetLadder {
  int b_min = 1;
  int b_max = 1;
  double eta = 3.0;
  int s_max = 0;  // floor(log_eta(b_max / b_min))

  // Throws ConfigError unless b_min >= 1, b_max >= b_min, eta > 1.
  static BudgetLadder build(int b_min, int b_max, double eta);

  // Budget s rungs below the top: b_max * eta^-s, rounded, clamped to b_min.
  int stage_budget(int s) const;
};

struct Stage {
  int n_configs = 0;
  int budget = 0;
};

// One successive-halving bracket: n0 = ceil((s_max+1)/(s+1) * eta^s) configs
// starting s rungs below b_max, keeping max(1, floor(n/eta)) per promotion.
struct BracketPlan {
  int s = 0;
  std::vector<Stage> stages;
};

BracketPlan bracket_schedule(const BudgetLadder& ladder, int s);

// Elapsed-time pruning rule: the allowed intermediate L1 decays linearly from
// threshold_start (up to t_start minutes) to threshold_end (from t_end on).
struct EarlyStopRule {
  double t_start = 150.0;
  double t_end = 750.0;
  double threshold_start = 115.0;
  double threshold_end = 5.0;
  int check_iteration = 3;

  void validate() const;  // throws ConfigError
};

double early_stop_threshold(const EarlyStopRule& rule, double elapsed_minutes);

// True = prune. A trial is pruned when its intermediate L1 exceeds the
// current threshold (strictly).
bool should_stop(double intermediate_l1, const EarlyStopRule& rule, double elapsed_minutes);

// One rung entry as seen by promotion: trials that failed carry no loss and
// rank last; ties break by earlier submission.
struct RungEntry {
  std::uint64_t config_id = 0;
  std::optional<double> loss;
  std::uint64_t submit_order = 0;
};

// Top max(1, floor(n/eta)) config ids by ascending loss. Throws ConfigError
// on an empty rung.
std::vector<std::uint64_t> sh_promote(const std::vector<RungEntry>& rung, double eta);

}  // namespace modecal
