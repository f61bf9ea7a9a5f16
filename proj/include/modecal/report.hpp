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

#include <filesystem>
#include <string>

#include "modecal/journal.hpp"

namespace modecal {

struct RunSummary {
  int trials = 0;
  int completed = 0;
  int pruned = 0;
  int failed = 0;
  double high_l1 = 0.0;  // worst loss observed (completed or pruned)
  double low_l1 = 0.0;   // best loss observed
  // Best loss among trials completed at the given budget; 0 when none.
  double best_full_budget_l1 = 0.0;
  int full_budget_completions = 0;
  double elapsed_minutes = 0.0;

  std::string to_string() const;
};

// full_budget: the b_max the run used; reports count completed trials at that
// budget separately ("optimization runs" in the summary).
RunSummary summarize(const JournalData& journal, int full_budget);

// Rows (t_finish, trial, best_l1) in completion order; the best column is the
// running minimum over completed and pruned losses.
std::string best_so_far_csv(const JournalData& journal);

// One row per trial outcome with the full journal schema.
std::string trials_csv(const JournalData& journal);

// Writes best_so_far.csv, trials.csv, and summary.json into the run
// directory; returns the summary. Requires run.json to discover b_max.
RunSummary write_report(const std::filesystem::path& run_dir);

}  // namespace modecal
