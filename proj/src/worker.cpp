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

#include "modecal/worker.hpp"

#include <atomic>
#include <chrono>
#include <iostream>

#include "modecal/errors.hpp"

namespace modecal {

namespace {

void sleep_seconds(double seconds) {
  std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
}

struct HeartbeatThread {
  HeartbeatThread(MasterEndpoint& master, std::uint64_t worker, double period_seconds) {
    if (period_seconds <= 0.0) return;
    thread = std::thread([&master, worker, period_seconds, this] {
      while (!stop.load()) {
        sleep_seconds(period_seconds);
        if (stop.load()) break;
        try {
          master.heartbeat(worker);
        } catch (const std::exception&) {
          break;  // master gone; the main loop will notice
        }
      }
    });
  }
  ~HeartbeatThread() {
    stop.store(true);
    if (thread.joinable()) thread.join();
  }
  std::atomic<bool> stop{false};
  std::thread thread;
};

}  // namespace

WorkerStep evaluate_one(MasterEndpoint& master, std::uint64_t worker_id, const Scenario& scenario,
                        const AgentPopulation& population, int check_iteration) {
  JobAssignment assignment = master.request_job(worker_id);
  if (assignment.kind == JobAssignment::Kind::shutdown) return WorkerStep::shutdown;
  if (assignment.kind == JobAssignment::Kind::wait) return WorkerStep::waited;

  const Job& job = assignment.job;
  TrialStatus status = TrialStatus::completed;
  std::optional<double> loss;
  int iterations = 0;
  try {
    InterceptConfig config;
    config.id = job.config_id;
    config.values = job.values;
    SimulationRun run(scenario, population, config, job.sim_seed);
    bool pruned = false;
    for (int it = 1; it <= job.budget; ++it) {
      run.step();
      if (it == check_iteration) {
        PruneDecision decision =
            master.report_intermediate(worker_id, job.trial_id, it, run.current_loss());
        if (decision == PruneDecision::prune) {
          pruned = true;
          break;
        }
      }
    }
    status = pruned ? TrialStatus::pruned : TrialStatus::completed;
    loss = run.current_loss();
    iterations = run.iterations_run();
  } catch (const std::exception& e) {
    std::cerr << "[worker " << worker_id << "] trial " << job.trial_id << " failed: " << e.what()
              << "\n";
    status = TrialStatus::failed;
    loss.reset();
    iterations = 0;
  }
  master.submit_result(worker_id, job.trial_id, status, loss, iterations);
  return WorkerStep::evaluated;
}

void run_worker(MasterEndpoint& master, const Scenario& scenario,
                const AgentPopulation& population, int check_iteration,
                const WorkerOptions& options) {
  std::uint64_t id = master.register_worker(options.address);
  HeartbeatThread heartbeat(master, id, options.heartbeat_seconds);

  while (true) {
    WorkerStep step = evaluate_one(master, id, scenario, population, check_iteration);
    if (step == WorkerStep::shutdown) break;
    if (step == WorkerStep::waited) sleep_seconds(options.wait_poll_seconds);
  }
  master.deregister(id);
}

void run_worker(MasterEndpoint& master, const WorkerOptions& options) {
  RunInfo info = master.run_info();
  Scenario scenario = Scenario::from_json_text(info.scenario_text, "scenario from master");
  if (info.benchmark_override) {
    scenario.benchmark = ModeShare::from_percentages(*info.benchmark_override);
  }
  AgentPopulation population = AgentPopulation::generate(scenario);
  run_worker(master, scenario, population, info.check_iteration, options);
}

InProcessWorkerPool::InProcessWorkerPool(Coordinator& coordinator, int n_workers) {
  if (n_workers < 1) throw ConfigError("worker pool: need at least one worker");
  int check = coordinator.config().optimizer.early_stop.check_iteration;
  threads_.reserve(static_cast<std::size_t>(n_workers));
  for (int i = 0; i < n_workers; ++i) {
    threads_.emplace_back([&coordinator, check, i] {
      WorkerOptions options;
      options.address = "inproc:" + std::to_string(i);
      run_worker(coordinator, coordinator.scenario(), coordinator.population(), check, options);
    });
  }
}

void InProcessWorkerPool::join() {
  for (std::thread& t : threads_) {
    if (t.joinable()) t.join();
  }
  threads_.clear();
}

void run_calibration(Coordinator& coordinator, int n_workers) {
  InProcessWorkerPool pool(coordinator, n_workers);
  pool.join();
}

}  // namespace modecal
