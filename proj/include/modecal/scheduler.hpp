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
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "modecal/config_space.hpp"
#include "modecal/gp.hpp"
#include "modecal/hyperband.hpp"
#include "modecal/tpe.hpp"

namespace modecal {

enum class TrialStatus { pending, running, completed, pruned, failed };

std::string to_string(TrialStatus status);
TrialStatus trial_status_from_string(const std::string& s);  // throws ConfigError

enum class Backend { bohb, gp_qei, random };

Backend backend_from_string(const std::string& s);  // throws ConfigError
std::string to_string(Backend backend);

struct GpBackendSettings {
  // NaN fields are derived from the data at fit time (prior mean and signal
  // variance from the observed losses, length scales from the space ranges).
  double signal_variance = std::numeric_limits<double>::quiet_NaN();
  double length_scale_fraction = 0.3;  // of each dimension's range
  double noise_variance = std::numeric_limits<double>::quiet_NaN();
  double prior_mean = std::numeric_limits<double>::quiet_NaN();
  int min_points = 10;     // observations before the GP engages
  int max_points = 256;    // most recent observations kept (cubic fit cost)
  gp::SgaParams sga;
};

struct OptimizerConfig {
  Backend backend = Backend::bohb;
  int b_min = 3;
  int b_max = 21;
  double eta = 3.0;
  double gamma = 0.15;
  double rho = 1.0 / 3.0;  // exploration floor: probability of a random config
  int n_iterations = 10;   // ladder sweeps s_max..0
  int max_full_budget_trials = 0;  // stop after this many completions at b_max; 0 = off
  int n_initial_random = 9;
  int n_candidates = 64;
  double h_min = 1e-3;
  int min_points = kModeCount + 1;
  EarlyStopRule early_stop;
  GpBackendSettings gp;

  void validate() const;  // throws ConfigError
};

struct Job {
  std::uint64_t trial_id = 0;
  std::uint64_t config_id = 0;
  ModeVector values{};
  int budget = 0;
  std::uint64_t sim_seed = 0;  // derived from (run seed, config id)
};

// Terminal outcome of one trial, as ingested by the scheduler.
struct TrialOutcome {
  TrialStatus status = TrialStatus::completed;
  std::optional<double> loss;  // present for completed and pruned
  int iterations_run = 0;      // the fidelity the loss was measured at
};

/// Single-authority trial scheduler: Hyperband brackets over the budget
/// ladder, the initial random phase, and model-based proposals (TPE density
/// ratio by default, GP q-EI or pure random as alternate backends).
///
/// Every random decision is keyed by (run seed, trial id), so the job stream
/// is a pure function of the seed and the ingested results; journal replay
/// reconstructs the exact state.
class BohbScheduler {
 public:
  // Substream salts, public so replay tooling and tests can reconstruct the
  // per-trial streams.
  static constexpr std::uint64_t kProposeSalt = 0x9c0de5a17ULL;
  static constexpr std::uint64_t kSimSalt = 0x51eade5ULL;

  BohbScheduler(const ParameterSpace& space, const OptimizerConfig& config, std::uint64_t seed);

  // Next job to dispatch, or nullopt when nothing is runnable right now
  // (either results are pending or the run is complete).
  std::optional<Job> next_job();

  // Ingests a terminal result. Unknown or already-terminal trials throw
  // ConfigError (the coordinator filters duplicates).
  void on_result(std::uint64_t trial_id, const TrialOutcome& outcome);

  // Returns a lost worker's job to the front of the queue; the re-dispatched
  // job is identical (same trial id, config, budget, seed).
  void requeue(std::uint64_t trial_id);

  // True once no further job will ever be produced and nothing is in flight.
  bool run_complete() const;
  // True once no further *new* trial will be dispatched.
  bool dispatch_exhausted() const;

  int in_flight() const { return in_flight_; }
  int full_budget_completions() const { return full_budget_completions_; }

  struct TrialInfo {
    std::uint64_t config_id = 0;
    int budget = 0;
    bool terminal = false;
  };
  // Throws ConfigError for unknown trial ids.
  TrialInfo trial_info(std::uint64_t trial_id) const;

  const BudgetLadder& ladder() const { return ladder_; }
  const OptimizerConfig& config() const { return config_; }

  // Replays one journaled trial (terminal outcomes only, ascending trial id).
  // Throws JournalCorruption when the record cannot belong to this run.
  void replay_trial(std::uint64_t trial_id, std::uint64_t config_id, const ModeVector& values,
                    int budget, const TrialOutcome& outcome);

  // True when the TPE pair (or GP) currently has enough data to propose.
  bool model_ready() const;

  // Observations at the highest fidelity that has any, as (fidelity, count).
  std::pair<int, int> best_fidelity() const;

  // Loss observations keyed by the fidelity they were measured at.
  const std::map<int, std::vector<tpe::LabeledPoint>>& dataset() const { return dataset_; }

 private:
  struct Slot {
    std::optional<std::uint64_t> config_id;
    std::optional<std::uint64_t> trial_id;
    bool terminal = false;
    std::optional<double> loss;
  };

  struct StageState {
    Stage plan;
    std::vector<Slot> slots;
    int assigned = 0;
    int terminal = 0;
    std::vector<std::uint64_t> promotion_queue;  // survivors awaiting dispatch
    std::size_t promoted = 0;                    // survivors already dispatched
    bool rung_complete() const { return terminal == plan.n_configs; }
  };

  struct BracketState {
    BracketPlan plan;
    std::vector<StageState> stages;
    bool complete() const;
  };

  ModeVector propose_values(std::uint64_t trial_id);
  ModeVector propose_gp(Rng& rng);
  void open_next_bracket();
  void ensure_model() const;
  Job make_job(std::uint64_t trial_id, std::uint64_t config_id, const ModeVector& values,
               int budget);
  void ingest(std::uint64_t trial_id, const TrialOutcome& outcome);
  void complete_rung(BracketState& bracket, std::size_t stage_index);
  bool stop_condition_met() const;

  ParameterSpace space_;
  OptimizerConfig config_;
  std::uint64_t seed_;
  BudgetLadder ladder_;
  int total_brackets_ = 0;

  std::uint64_t next_trial_id_ = 1;
  std::unordered_map<std::uint64_t, ModeVector> configs_;

  struct TrialRef {
    std::uint64_t config_id = 0;
    int budget = 0;
    int bracket = -1;  // -1: initial random phase
    int stage = -1;
    int slot = -1;
    bool terminal = false;
  };
  std::unordered_map<std::uint64_t, TrialRef> trials_;

  int initial_dispatched_ = 0;
  std::vector<BracketState> brackets_;
  int brackets_opened_ = 0;
  std::deque<Job> requeued_;

  // fidelity (iterations the loss was measured at) -> labeled observations
  std::map<int, std::vector<tpe::LabeledPoint>> dataset_;
  int in_flight_ = 0;
  int full_budget_completions_ = 0;

  // Lazily rebuilt model caches.
  mutable std::uint64_t dataset_version_ = 0;
  mutable std::uint64_t model_version_ = 0;
  mutable std::optional<tpe::KdePair> tpe_pair_;
  mutable std::optional<gp::GpModel> gp_model_;
  mutable double gp_f_star_ = 0.0;
};

}  // namespace modecal
