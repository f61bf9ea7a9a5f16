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

#include "modecal/hyperband.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modecal/errors.hpp"

namespace modecal {

BudgetLadder BudgetLadder::build(int b_min, int b_max, double eta) {
  if (b_min < 1) throw ConfigError("budget ladder: b_min must be >= 1");
  if (b_max < b_min) throw ConfigError("budget ladder: b_max must be >= b_min");
  if (!(eta > 1.0)) throw ConfigError("budget ladder: eta must be > 1");
  BudgetLadder ladder;
  ladder.b_min = b_min;
  ladder.b_max = b_max;
  ladder.eta = eta;
  // Guard against log round-off on exact powers (e.g. 9/1 at eta 3).
  double ratio = std::log(static_cast<double>(b_max) / static_cast<double>(b_min)) / std::log(eta);
  ladder.s_max = static_cast<int>(std::floor(ratio + 1e-9));
  return ladder;
}

int BudgetLadder::stage_budget(int s) const {
  double b = static_cast<double>(b_max) * std::pow(eta, -static_cast<double>(s));
  int rounded = static_cast<int>(std::lround(b));
  return std::max(rounded, b_min);
}

BracketPlan bracket_schedule(const BudgetLadder& ladder, int s) {
  if (s < 0 || s > ladder.s_max) throw ConfigError("bracket_schedule: s out of [0, s_max]");
  BracketPlan plan;
  plan.s = s;
  int n = static_cast<int>(std::ceil(static_cast<double>(ladder.s_max + 1) /
                                     static_cast<double>(s + 1) * std::pow(ladder.eta, s)));
  for (int stage = 0; stage <= s; ++stage) {
    plan.stages.push_back(Stage{n, ladder.stage_budget(s - stage)});
    n = std::max(1, static_cast<int>(std::floor(static_cast<double>(n) / ladder.eta)));
  }
  return plan;
}

void EarlyStopRule::validate() const {
  if (!(t_start < t_end)) throw ConfigError("early stop rule: t_start must be < t_end");
  if (!(threshold_start >= threshold_end)) {
    throw ConfigError("early stop rule: threshold_start must be >= threshold_end");
  }
  if (check_iteration < 1) throw ConfigError("early stop rule: check_iteration must be >= 1");
}

double early_stop_threshold(const EarlyStopRule& rule, double elapsed_minutes) {
  if (elapsed_minutes < 0.0) throw ConfigError("early_stop_threshold: elapsed must be >= 0");
  if (elapsed_minutes <= rule.t_start) return rule.threshold_start;
  if (elapsed_minutes >= rule.t_end) return rule.threshold_end;
  double frac = (elapsed_minutes - rule.t_start) / (rule.t_end - rule.t_start);
  return rule.threshold_start + frac * (rule.threshold_end - rule.threshold_start);
}

bool should_stop(double intermediate_l1, const EarlyStopRule& rule, double elapsed_minutes) {
  return intermediate_l1 > early_stop_threshold(rule, elapsed_minutes);
}

std::vector<std::uint64_t> sh_promote(const std::vector<RungEntry>& rung, double eta) {
  if (rung.empty()) throw ConfigError("sh_promote: empty rung");
  if (!(eta > 1.0)) throw ConfigError("sh_promote: eta must be > 1");

  std::vector<RungEntry> sorted = rung;
  std::sort(sorted.begin(), sorted.end(), [](const RungEntry& a, const RungEntry& b) {
    double la = a.loss.value_or(std::numeric_limits<double>::infinity());
    double lb = b.loss.value_or(std::numeric_limits<double>::infinity());
    if (la != lb) return la < lb;
    return a.submit_order < b.submit_order;
  });

  int keep = std::max(1, static_cast<int>(std::floor(static_cast<double>(rung.size()) / eta)));
  std::vector<std::uint64_t> survivors;
  survivors.reserve(static_cast<std::size_t>(keep));
  for (int i = 0; i < keep; ++i) survivors.push_back(sorted[static_cast<std::size_t>(i)].config_id);
  return survivors;
}

}  // namespace modecal
