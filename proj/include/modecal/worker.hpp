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

#include <string>
#include <thread>
#include <vector>

#include "modecal/coordinator.hpp"
#include "modecal/logit_sim.hpp"

namespace modecal {

struct WorkerOptions {
  std::string address = "inproc";
  // Sleep between polls when the master has nothing runnable.
  double wait_poll_seconds = 0.002;
  // Background heartbeat period; 0 disables the heartbeat thread (in-process
  // workers poll often enough on their own).
  double heartbeat_seconds = 0.0;
};

enum class WorkerStep { evaluated, waited, shutdown };

// One request/evaluate/submit cycle for a registered worker: evaluates the
// job if one was assigned, reports the intermediate L1 at the check
// iteration, and honors a prune decision by abandoning the remaining
// iterations. A simulation failure reports the trial as failed with a
// diagnostic on stderr.
WorkerStep evaluate_one(MasterEndpoint& master, std::uint64_t worker_id, const Scenario& scenario,
                        const AgentPopulation& population, int check_iteration);

// Registers against the master and runs evaluate_one until shutdown.
void run_worker(MasterEndpoint& master, const Scenario& scenario,
                const AgentPopulation& population, int check_iteration,
                const WorkerOptions& options = {});

// Fetches the scenario from the master first (remote workers have no local
// scenario file).
void run_worker(MasterEndpoint& master, const WorkerOptions& options = {});

/// N worker threads evaluating against an in-process coordinator, sharing its
/// scenario and agent population. Joins on destruction.
class InProcessWorkerPool {
 public:
  InProcessWorkerPool(Coordinator& coordinator, int n_workers);
  ~InProcessWorkerPool() { join(); }

  void join();

 private:
  std::vector<std::thread> threads_;
};

// Convenience: run a full calibration with n in-process workers; returns when
// the run is complete.
void run_calibration(Coordinator& coordinator, int n_workers);

}  // namespace modecal
