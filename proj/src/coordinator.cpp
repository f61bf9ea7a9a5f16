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

#include "modecal/coordinator.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "modecal/errors.hpp"

namespace modecal {

namespace {

using nlohmann::json;

constexpr std::uint64_t kBenchmarkSalt = 0xbe9c4955ULL;

std::filesystem::path run_meta_path(const std::filesystem::path& run_dir) {
  return run_dir / "run.json";
}

}  // namespace

ModeShare regenerated_benchmark(const Scenario& scenario, const AgentPopulation& population,
                                int b_max) {
  if (!scenario.ground_truth) {
    throw ConfigError("cannot regenerate benchmark: scenario has no ground_truth");
  }
  InterceptConfig truth;
  truth.values = *scenario.ground_truth;
  std::uint64_t seed = mix_seed({scenario.seed, kBenchmarkSalt});
  return run_simulation(scenario, population, truth, b_max, seed).final_share;
}

Coordinator::Coordinator(const std::filesystem::path& run_dir, RunConfig config,
                         std::uint64_t seed, std::shared_ptr<Clock> run_clock,
                         std::shared_ptr<Clock> registry_clock, const JournalData& existing)
    : run_dir_(run_dir),
      config_(std::move(config)),
      scenario_(config_.scenario),
      population_(AgentPopulation::generate(scenario_)),
      seed_(seed),
      run_clock_(std::move(run_clock)),
      registry_clock_(registry_clock ? std::move(registry_clock) : std::make_shared<WallClock>()),
      scheduler_(config_.space, config_.optimizer, seed),
      registry_(config_.heartbeat.timeout_minutes()),
      journal_(run_dir, existing) {
  if (config_.regenerate_benchmark) {
    scenario_.benchmark = regenerated_benchmark(scenario_, population_, config_.optimizer.b_max);
  }
}

std::unique_ptr<Coordinator> Coordinator::create(const std::filesystem::path& run_dir,
                                                 const RunConfig& config, std::uint64_t seed,
                                                 std::shared_ptr<Clock> run_clock,
                                                 std::shared_ptr<Clock> registry_clock) {
  std::filesystem::create_directories(run_dir);
  if (std::filesystem::exists(results_path(run_dir)) &&
      std::filesystem::file_size(results_path(run_dir)) > 0) {
    throw ConfigError("run directory already has results; use resume: " + run_dir.string());
  }

  json meta;
  meta["seed"] = seed;
  meta["config_text"] = config.config_text;
  meta["scenario_text"] = config.scenario_text;
  std::ofstream out(run_meta_path(run_dir));
  if (!out) throw ConfigError("cannot write " + run_meta_path(run_dir).string());
  out << meta.dump(2) << "\n";
  out.close();

  return std::unique_ptr<Coordinator>(
      new Coordinator(run_dir, config, seed, std::move(run_clock), std::move(registry_clock),
                      JournalData{}));
}

std::unique_ptr<Coordinator> Coordinator::resume(const std::filesystem::path& run_dir,
                                                 std::shared_ptr<Clock> run_clock,
                                                 std::shared_ptr<Clock> registry_clock) {
  std::ifstream in(run_meta_path(run_dir));
  if (!in) throw ConfigError("cannot open " + run_meta_path(run_dir).string() + " for resume");
  json meta;
  try {
    meta = json::parse(in);
  } catch (const json::exception& e) {
    throw JournalCorruption(run_meta_path(run_dir).string() + ": " + e.what());
  }
  if (!meta.contains("seed") || !meta.contains("config_text") || !meta.contains("scenario_text")) {
    throw JournalCorruption(run_meta_path(run_dir).string() + ": incomplete run snapshot");
  }
  RunConfig config = run_config_from_texts(meta["config_text"].get<std::string>(),
                                           meta["scenario_text"].get<std::string>(),
                                           run_meta_path(run_dir).string());
  std::uint64_t seed = meta["seed"].get<std::uint64_t>();

  JournalData journal = read_journal(run_dir);
  auto coordinator = std::unique_ptr<Coordinator>(
      new Coordinator(run_dir, config, seed, std::move(run_clock), std::move(registry_clock),
                      journal));
  coordinator->replay(journal);
  return coordinator;
}

void Coordinator::replay(const JournalData& journal) {
  std::vector<ResultRecord> ordered = journal.results;
  std::sort(ordered.begin(), ordered.end(),
            [](const ResultRecord& a, const ResultRecord& b) { return a.trial < b.trial; });

  double max_finish = 0.0;
  for (const ResultRecord& r : ordered) {
    auto it = journal.configs.find(r.config);
    if (it == journal.configs.end()) {
      throw JournalCorruption("result for trial " + std::to_string(r.trial) +
                              " references missing config " + std::to_string(r.config));
    }
    TrialOutcome outcome{r.status, r.loss, r.iterations_run};
    scheduler_.replay_trial(r.trial, r.config, it->second, r.budget, outcome);
    max_finish = std::max(max_finish, r.t_finish);
  }

  // Continue the run clock from the last journaled event (no-op on a wall
  // clock, which restarts elapsed time on resume).
  double now = run_clock_->now_minutes();
  if (max_finish > now) run_clock_->advance_minutes(max_finish - now);
}

std::uint64_t Coordinator::register_worker(const std::string& address) {
  return register_worker_with_id(address, std::nullopt);
}

std::uint64_t Coordinator::register_worker_with_id(const std::string& address,
                                                   std::optional<std::uint64_t> requested_id) {
  std::lock_guard lock(mutex_);
  return registry_.register_worker(address, registry_clock_->now_minutes(), requested_id);
}

void Coordinator::heartbeat(std::uint64_t worker) {
  std::lock_guard lock(mutex_);
  registry_.heartbeat(worker, registry_clock_->now_minutes());
}

void Coordinator::deregister(std::uint64_t worker) {
  std::lock_guard lock(mutex_);
  const WorkerRecord* record = registry_.find(worker);
  if (record && record->assigned_trial) {
    scheduler_.requeue(*record->assigned_trial);
    owner_.erase(*record->assigned_trial);
  }
  registry_.deregister(worker);
}

RunInfo Coordinator::run_info() {
  std::lock_guard lock(mutex_);
  RunInfo info;
  info.scenario_text = config_.scenario_text;
  info.check_iteration = config_.optimizer.early_stop.check_iteration;
  if (config_.regenerate_benchmark) info.benchmark_override = scenario_.benchmark.values();
  return info;
}

void Coordinator::reap() {
  std::lock_guard lock(mutex_);
  for (std::uint64_t trial : registry_.reap(registry_clock_->now_minutes())) {
    std::cerr << "[master] worker lost; re-queueing trial " << trial << "\n";
    owner_.erase(trial);
    scheduler_.requeue(trial);
  }
}

JobAssignment Coordinator::request_job(std::uint64_t worker) {
  reap();
  std::lock_guard lock(mutex_);
  if (!registry_.is_live(worker)) {
    throw ProtocolError("request_job from unknown or lost worker " + std::to_string(worker));
  }
  const WorkerRecord* record = registry_.find(worker);
  if (record->state == WorkerState::busy) {
    throw ProtocolError("worker " + std::to_string(worker) + " requested a job while busy");
  }

  if (scheduler_.run_complete()) return JobAssignment{JobAssignment::Kind::shutdown, {}};

  std::optional<Job> job = scheduler_.next_job();
  if (!job) return JobAssignment{JobAssignment::Kind::wait, {}};

  // Journal the (possibly new) config before the dispatch is acknowledged.
  journal_.append_config(job->config_id, job->values);

  double now = run_clock_->now_minutes();
  auto [timing_it, fresh] = timing_.try_emplace(job->trial_id);
  if (fresh) timing_it->second.t_submit = now;
  timing_it->second.t_start = now;
  owner_[job->trial_id] = worker;
  registry_.assign(worker, job->trial_id);
  return JobAssignment{JobAssignment::Kind::job, *job};
}

void Coordinator::advance_trial_clock(std::uint64_t trial, int iterations_done) {
  if (!config_.clock.use_virtual) return;
  TrialTiming& timing = timing_[trial];
  int fresh = iterations_done - timing.clocked_iterations;
  if (fresh > 0) {
    run_clock_->advance_minutes(config_.clock.minutes_per_iteration * fresh);
    timing.clocked_iterations = iterations_done;
  }
}

PruneDecision Coordinator::report_intermediate(std::uint64_t worker, std::uint64_t trial,
                                               int iteration, double l1) {
  std::lock_guard lock(mutex_);
  auto it = owner_.find(trial);
  if (it == owner_.end() || it->second != worker) {
    std::cerr << "[master] stale intermediate report for trial " << trial << " from worker "
              << worker << "; pruning\n";
    return PruneDecision::prune;
  }
  advance_trial_clock(trial, iteration);
  bool prune = should_stop(l1, config_.optimizer.early_stop, run_clock_->now_minutes());
  return prune ? PruneDecision::prune : PruneDecision::keep_going;
}

void Coordinator::submit_result(std::uint64_t worker, std::uint64_t trial, TrialStatus status,
                                std::optional<double> loss, int iterations_run) {
  std::lock_guard lock(mutex_);
  auto it = owner_.find(trial);
  if (it == owner_.end() || it->second != worker) {
    std::cerr << "[master] discarding result for trial " << trial << " from non-owner worker "
              << worker << "\n";
    registry_.release(worker);
    return;
  }
  if ((status == TrialStatus::completed || status == TrialStatus::pruned) && !loss) {
    throw ProtocolError("completed/pruned result without loss for trial " + std::to_string(trial));
  }

  advance_trial_clock(trial, iterations_run);
  owner_.erase(it);
  registry_.release(worker);

  TrialTiming timing = timing_[trial];
  timing_.erase(trial);

  BohbScheduler::TrialInfo info = scheduler_.trial_info(trial);
  ResultRecord record;
  record.trial = trial;
  record.config = info.config_id;
  record.budget = info.budget;
  record.status = status;
  record.loss = loss;
  record.iterations_run = iterations_run;
  record.t_submit = timing.t_submit;
  record.t_start = timing.t_start;
  record.t_finish = run_clock_->now_minutes();
  record.worker = worker;
  // Journal before acknowledging: a crash after this line replays cleanly.
  journal_.append_result(record);
  scheduler_.on_result(trial, TrialOutcome{status, loss, iterations_run});
}

bool Coordinator::run_complete() {
  std::lock_guard lock(mutex_);
  return scheduler_.run_complete();
}

}  // namespace modecal
