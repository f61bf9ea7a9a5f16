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

#include "modecal/report.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "modecal/errors.hpp"
#include "modecal/run_config.hpp"

namespace modecal {

using nlohmann::json;

RunSummary summarize(const JournalData& journal, int full_budget) {
  RunSummary s;
  s.trials = static_cast<int>(journal.results.size());
  double high = -std::numeric_limits<double>::infinity();
  double low = std::numeric_limits<double>::infinity();
  double best_full = std::numeric_limits<double>::infinity();
  for (const ResultRecord& r : journal.results) {
    s.elapsed_minutes = std::max(s.elapsed_minutes, r.t_finish);
    switch (r.status) {
      case TrialStatus::completed: ++s.completed; break;
      case TrialStatus::pruned: ++s.pruned; break;
      case TrialStatus::failed: ++s.failed; break;
      default: break;
    }
    if (r.loss) {
      high = std::max(high, *r.loss);
      low = std::min(low, *r.loss);
    }
    if (r.status == TrialStatus::completed && r.budget == full_budget && r.loss) {
      best_full = std::min(best_full, *r.loss);
      ++s.full_budget_completions;
    }
  }
  if (std::isfinite(high)) s.high_l1 = high;
  if (std::isfinite(low)) s.low_l1 = low;
  if (std::isfinite(best_full)) s.best_full_budget_l1 = best_full;
  return s;
}

std::string best_so_far_csv(const JournalData& journal) {
  std::ostringstream oss;
  oss << "t_finish_minutes,trial,best_l1\n";
  double best = std::numeric_limits<double>::infinity();
  for (const ResultRecord& r : journal.results) {
    if (!r.loss) continue;
    best = std::min(best, *r.loss);
    oss << r.t_finish << "," << r.trial << "," << best << "\n";
  }
  return oss.str();
}

std::string trials_csv(const JournalData& journal) {
  std::ostringstream oss;
  oss << "trial,config,budget,status,loss,iterations_run,t_submit,t_start,t_finish,worker\n";
  for (const ResultRecord& r : journal.results) {
    oss << r.trial << "," << r.config << "," << r.budget << "," << to_string(r.status) << ",";
    if (r.loss) oss << *r.loss;
    oss << "," << r.iterations_run << "," << r.t_submit << "," << r.t_start << "," << r.t_finish
        << "," << r.worker << "\n";
  }
  return oss.str();
}

RunSummary write_report(const std::filesystem::path& run_dir) {
  JournalData journal = read_journal(run_dir);

  int b_max = 0;
  {
    std::ifstream in(run_dir / "run.json");
    if (in) {
      try {
        json meta = json::parse(in);
        RunConfig config = run_config_from_texts(meta.at("config_text").get<std::string>(),
                                                 meta.at("scenario_text").get<std::string>(),
                                                 (run_dir / "run.json").string());
        b_max = config.optimizer.b_max;
      } catch (const std::exception&) {
        b_max = 0;  // summary still usable without the full-budget split
      }
    }
  }

  RunSummary summary = summarize(journal, b_max);

  std::ofstream curve(run_dir / "best_so_far.csv");
  curve << best_so_far_csv(journal);
  std::ofstream trials(run_dir / "trials.csv");
  trials << trials_csv(journal);

  json j;
  j["trials"] = summary.trials;
  j["completed"] = summary.completed;
  j["pruned"] = summary.pruned;
  j["failed"] = summary.failed;
  j["high_l1"] = summary.high_l1;
  j["low_l1"] = summary.low_l1;
  j["best_full_budget_l1"] = summary.best_full_budget_l1;
  j["full_budget_completions"] = summary.full_budget_completions;
  j["elapsed_minutes"] = summary.elapsed_minutes;
  std::ofstream out(run_dir / "summary.json");
  out << j.dump(2) << "\n";

  return summary;
}

std::string RunSummary::to_string() const {
  std::ostringstream oss;
  oss << "trials " << trials << " (completed " << completed << ", pruned " << pruned << ", failed "
      << failed << ")\n"
      << "full-budget completions " << full_budget_completions << "\n"
      << "high L1 " << high_l1 << "%  low L1 " << low_l1 << "%  best full-budget L1 "
      << best_full_budget_l1 << "%\n"
      << "elapsed " << elapsed_minutes << " minutes\n";
  return oss.str();
}

}  // namespace modecal
