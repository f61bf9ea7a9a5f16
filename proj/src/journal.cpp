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

#include "modecal/journal.hpp"

#include <string>

#include <nlohmann/json.hpp>

#include "modecal/errors.hpp"

namespace modecal {

namespace {

using nlohmann::json;

json values_to_json(const ModeVector& values) {
  json j = json::object();
  for (int m = 0; m < kModeCount; ++m) {
    j[std::string(kModeNames[static_cast<std::size_t>(m)])] = values[static_cast<std::size_t>(m)];
  }
  return j;
}

ModeVector values_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || j.size() != kModeCount) {
    throw JournalCorruption(where + ": values must name exactly the 8 modes");
  }
  ModeVector values{};
  for (const auto& [name, v] : j.items()) {
    std::optional<int> m = mode_index(name);
    if (!m || !v.is_number()) throw JournalCorruption(where + ": bad mode entry '" + name + "'");
    values[static_cast<std::size_t>(*m)] = v.get<double>();
  }
  return values;
}

}  // namespace

std::filesystem::path configs_path(const std::filesystem::path& run_dir) {
  return run_dir / "configs.jsonl";
}

std::filesystem::path results_path(const std::filesystem::path& run_dir) {
  return run_dir / "results.jsonl";
}

JournalData read_journal(const std::filesystem::path& run_dir) {
  JournalData data;

  {
    std::ifstream in(configs_path(run_dir));
    std::string line;
    int line_no = 0;
    while (in && std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::string where = "configs.jsonl:" + std::to_string(line_no);
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw JournalCorruption(where + ": " + e.what());
      }
      if (!j.contains("config") || !j["config"].is_number_unsigned()) {
        throw JournalCorruption(where + ": missing config id");
      }
      std::uint64_t id = j["config"].get<std::uint64_t>();
      ModeVector values = values_from_json(j.value("values", json::object()), where);
      auto [it, inserted] = data.configs.emplace(id, values);
      if (!inserted && it->second != values) {
        throw JournalCorruption(where + ": config " + std::to_string(id) +
                                " redefined with different values");
      }
    }
  }

  {
    std::ifstream in(results_path(run_dir));
    std::string line;
    int line_no = 0;
    while (in && std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::string where = "results.jsonl:" + std::to_string(line_no);
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw JournalCorruption(where + ": " + e.what());
      }
      ResultRecord r;
      try {
        r.trial = j.at("trial").get<std::uint64_t>();
        r.config = j.at("config").get<std::uint64_t>();
        r.budget = j.at("budget").get<int>();
        r.status = trial_status_from_string(j.at("status").get<std::string>());
        if (j.contains("loss") && !j["loss"].is_null()) r.loss = j["loss"].get<double>();
        r.iterations_run = j.at("iterations_run").get<int>();
        r.t_submit = j.at("t_submit").get<double>();
        r.t_start = j.at("t_start").get<double>();
        r.t_finish = j.at("t_finish").get<double>();
        r.worker = j.at("worker").get<std::uint64_t>();
      } catch (const json::exception& e) {
        throw JournalCorruption(where + ": " + e.what());
      } catch (const ConfigError& e) {
        throw JournalCorruption(where + ": " + e.what());
      }
      if (r.status != TrialStatus::completed && r.status != TrialStatus::pruned &&
          r.status != TrialStatus::failed) {
        throw JournalCorruption(where + ": non-terminal status journaled");
      }
      if ((r.status == TrialStatus::completed || r.status == TrialStatus::pruned) && !r.loss) {
        throw JournalCorruption(where + ": completed/pruned record missing loss");
      }
      if (!data.configs.count(r.config)) {
        throw JournalCorruption(where + ": result references missing config " +
                                std::to_string(r.config));
      }
      data.results.push_back(r);
    }
  }

  return data;
}

JournalWriter::JournalWriter(const std::filesystem::path& run_dir, const JournalData& existing)
    : written_configs_(existing.configs) {
  std::filesystem::create_directories(run_dir);
  configs_.open(configs_path(run_dir), std::ios::app);
  results_.open(results_path(run_dir), std::ios::app);
  if (!configs_ || !results_) {
    throw ConfigError("cannot open journal files for append under " + run_dir.string());
  }
}

void JournalWriter::append_config(std::uint64_t config_id, const ModeVector& values) {
  auto it = written_configs_.find(config_id);
  if (it != written_configs_.end()) {
    if (it->second != values) {
      throw JournalCorruption("config " + std::to_string(config_id) +
                              " re-dispatched with different values than journaled");
    }
    return;  // already on disk (in-flight at a previous crash)
  }
  json j;
  j["config"] = config_id;
  j["values"] = values_to_json(values);
  configs_ << j.dump() << "\n";
  configs_.flush();
  written_configs_.emplace(config_id, values);
}

void JournalWriter::append_result(const ResultRecord& record) {
  json j;
  j["trial"] = record.trial;
  j["config"] = record.config;
  j["budget"] = record.budget;
  j["status"] = to_string(record.status);
  if (record.loss) {
    j["loss"] = *record.loss;
  } else {
    j["loss"] = nullptr;
  }
  j["iterations_run"] = record.iterations_run;
  j["t_submit"] = record.t_submit;
  j["t_start"] = record.t_start;
  j["t_finish"] = record.t_finish;
  j["worker"] = record.worker;
  results_ << j.dump() << "\n";
  results_.flush();
}

}  // namespace modecal
