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

#include "modecal/config_space.hpp"
#include "modecal/logit_sim.hpp"
#include "modecal/scheduler.hpp"

namespace modecal {

struct HeartbeatSettings {
  double interval_seconds = 5.0;
  int timeout_beats = 3;  // missed beats before a worker counts as lost
  double timeout_minutes() const { return interval_seconds * timeout_beats / 60.0; }
};

struct ClockSettings {
  bool use_virtual = false;
  // Virtual minutes each simulator iteration advances the run clock by;
  // makes the minute-scale early-stop rule exercisable in fast runs.
  double minutes_per_iteration = 1.0;
};

// Everything a calibration run needs, resolved against the scenario file.
struct RunConfig {
  Scenario scenario;
  ParameterSpace space = ParameterSpace::uniform(-20.0, 20.0);
  // Replace the scenario benchmark by simulating its ground-truth intercepts
  // at the full budget (self-consistent calibration target).
  bool regenerate_benchmark = false;
  OptimizerConfig optimizer;
  ClockSettings clock;
  HeartbeatSettings heartbeat;

  // Original file contents, preserved verbatim in the run directory so a
  // resume does not depend on the original paths.
  std::string config_text;
  std::string scenario_text;
};

RunConfig load_run_config(const std::filesystem::path& path);

// Used on resume, where both texts come from the run snapshot.
RunConfig run_config_from_texts(const std::string& config_text, const std::string& scenario_text,
                                const std::string& origin);

}  // namespace modecal
