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
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "modecal/clock.hpp"
#include "modecal/journal.hpp"
#include "modecal/logit_sim.hpp"
#include "modecal/registry.hpp"
#include "modecal/run_config.hpp"
#include "modecal/scheduler.hpp"

namespace modecal {

struct JobAssignment {
  enum class Kind { job, wait, shutdown };
  Kind kind = Kind::wait;
  Job job;
};

enum class PruneDecision { keep_going, prune };

struct RunInfo {
  std::string scenario_text;
  int check_iteration = 3;
  // Effective benchmark when the run regenerated it from ground truth; remote
  // workers apply it on top of the parsed scenario.
  std::optional<ModeVector> benchmark_override;
};

// The worker's view of the master; implemented in-process by the Coordinator
// and over TCP by the remote client.
class MasterEndpoint {
 public:
  virtual ~MasterEndpoint() = default;
  virtual std::uint64_t register_worker(const std::string& address) = 0;
  virtual void heartbeat(std::uint64_t worker) = 0;
  virtual void deregister(std::uint64_t worker) = 0;
  virtual RunInfo run_info() = 0;
  virtual JobAssignment request_job(std::uint64_t worker) = 0;
  virtual PruneDecision report_intermediate(std::uint64_t worker, std::uint64_t trial,
                                            int iteration, double l1) = 0;
  virtual void submit_result(std::uint64_t worker, std::uint64_t trial, TrialStatus status,
                             std::optional<double> loss, int iterations_run) = 0;
};

/// Single-master coordinator: owns the scheduler, the registry, and the
/// journals. All mutations are serialized behind one mutex; workers only
/// evaluate. Every journal line is flushed before the triggering call
/// returns.
class Coordinator final : public MasterEndpoint {
 public:
  // Fresh run. Refuses a directory that already has journal records. Writes
  // a run.json snapshot (config, scenario, seed) for later resume.
  static std::unique_ptr<Coordinator> create(const std::filesystem::path& run_dir,
                                             const RunConfig& config, std::uint64_t seed,
                                             std::shared_ptr<Clock> run_clock,
                                             std::shared_ptr<Clock> registry_clock = nullptr);

  // Resume from run.json plus journals; replays every terminal trial, so the
  // rebuilt optimizer state matches an uninterrupted run over the same
  // results. Throws JournalCorruption on the first bad record.
  static std::unique_ptr<Coordinator> resume(const std::filesystem::path& run_dir,
                                             std::shared_ptr<Clock> run_clock,
                                             std::shared_ptr<Clock> registry_clock = nullptr);

  // MasterEndpoint (thread-safe).
  std::uint64_t register_worker(const std::string& address) override;
  void heartbeat(std::uint64_t worker) override;
  void deregister(std::uint64_t worker) override;
  RunInfo run_info() override;
  JobAssignment request_job(std::uint64_t worker) override;
  PruneDecision report_intermediate(std::uint64_t worker, std::uint64_t trial, int iteration,
                                    double l1) override;
  void submit_result(std::uint64_t worker, std::uint64_t trial, TrialStatus status,
                     std::optional<double> loss, int iterations_run) override;

  std::uint64_t register_worker_with_id(const std::string& address,
                                        std::optional<std::uint64_t> requested_id);

  // Marks silent workers lost and re-queues their jobs.
  void reap();

  bool run_complete();

  const Scenario& scenario() const { return scenario_; }
  const AgentPopulation& population() const { return population_; }
  const BohbScheduler& scheduler() const { return scheduler_; }
  const RunConfig& config() const { return config_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }
  double elapsed_minutes() const { return run_clock_->now_minutes(); }

 private:
  Coordinator(const std::filesystem::path& run_dir, RunConfig config, std::uint64_t seed,
              std::shared_ptr<Clock> run_clock, std::shared_ptr<Clock> registry_clock,
              const JournalData& existing);

  void replay(const JournalData& journal);
  void advance_trial_clock(std::uint64_t trial, int iterations_done);

  std::filesystem::path run_dir_;
  RunConfig config_;
  Scenario scenario_;  // benchmark possibly regenerated from ground truth
  AgentPopulation population_;
  std::uint64_t seed_;

  std::shared_ptr<Clock> run_clock_;
  std::shared_ptr<Clock> registry_clock_;

  std::mutex mutex_;
  BohbScheduler scheduler_;
  WorkerRegistry registry_;
  JournalWriter journal_;

  struct TrialTiming {
    double t_submit = 0.0;
    double t_start = 0.0;
    int clocked_iterations = 0;  // simulator iterations already credited
  };
  std::unordered_map<std::uint64_t, TrialTiming> timing_;
  std::unordered_map<std::uint64_t, std::uint64_t> owner_;  // trial -> worker
};

// Derives the benchmark a self-consistent calibration run targets: the final
// share of a full-budget simulation at the scenario's ground truth.
ModeShare regenerated_benchmark(const Scenario& scenario, const AgentPopulation& population,
                                int b_max);

}  // namespace modecal
