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
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <vector>

#include "modecal/modes.hpp"
#include "modecal/scheduler.hpp"

namespace modecal {

// One line of results.jsonl. Timestamps are minutes since run start on the
// run's clock.
struct ResultRecord {
  std::uint64_t trial = 0;
  std::uint64_t config = 0;
  int budget = 0;
  TrialStatus status = TrialStatus::completed;
  std::optional<double> loss;
  int iterations_run = 0;
  double t_submit = 0.0;
  double t_start = 0.0;
  double t_finish = 0.0;
  std::uint64_t worker = 0;
};

// Parsed journal contents. Configs are one record per distinct config; every
// result references one of them (validated on read).
struct JournalData {
  std::map<std::uint64_t, ModeVector> configs;
  std::vector<ResultRecord> results;
};

// Reads and validates both journal files; missing files read as empty.
// Throws JournalCorruption naming the first bad record as file:line.
JournalData read_journal(const std::filesystem::path& run_dir);

/// Append-only writer over configs.jsonl and results.jsonl. Each record is
/// one line, flushed before the caller acknowledges the event. Re-appending a
/// config id is a no-op when the values match (resume re-dispatches in-flight
/// work) and corruption when they do not.
class JournalWriter {
 public:
  // Opens for append, creating files as needed; `existing` seeds the
  // duplicate-config guard on resume.
  JournalWriter(const std::filesystem::path& run_dir, const JournalData& existing);

  void append_config(std::uint64_t config_id, const ModeVector& values);
  void append_result(const ResultRecord& record);

 private:
  std::ofstream configs_;
  std::ofstream results_;
  std::map<std::uint64_t, ModeVector> written_configs_;
};

std::filesystem::path configs_path(const std::filesystem::path& run_dir);
std::filesystem::path results_path(const std::filesystem::path& run_dir);

}  // namespace modecal
