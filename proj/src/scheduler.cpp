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

#include "modecal/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "modecal/errors.hpp"

namespace modecal {

std::string to_string(TrialStatus status) {
  switch (status) {
    case TrialStatus::pending: return "pending";
    case TrialStatus::running: return "running";
    case TrialStatus::completed: return "completed";
    case TrialStatus::pruned: return "pruned";
    case TrialStatus::failed: return "failed";
  }
  return "unknown";
}

TrialStatus trial_status_from_string(const std::string& s) {
  if (s == "pending") return TrialStatus::pending;
  if (s == "running") return TrialStatus::running;
  if (s == "completed") return TrialStatus::completed;
  if (s == "pruned") return TrialStatus::pruned;
  if (s == "failed") return TrialStatus::failed;
  throw ConfigError("unknown trial status: " + s);
}

Backend backend_from_string(const std::string& s) {
  if (s == "bohb") return Backend::bohb;
  if (s == "gp-qei") return Backend::gp_qei;
  if (s == "random") return Backend::random;
  throw ConfigError("unknown backend: " + s + " (expected bohb, gp-qei, or random)");
}

std::string to_string(Backend backend) {
  switch (backend) {
    case Backend::bohb: return "bohb";
    case Backend::gp_qei: return "gp-qei";
    case Backend::random: return "random";
  }
  return "unknown";
}

void OptimizerConfig::validate() const {
  if (b_min < 1) throw ConfigError("optimizer: b_min must be >= 1");
  if (b_max < b_min) throw ConfigError("optimizer: b_max must be >= b_min");
  if (!(eta > 1.0)) throw ConfigError("optimizer: eta must be > 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("optimizer: gamma must be in (0, 1)");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("optimizer: rho must be in [0, 1]");
  if (n_iterations < 1) throw ConfigError("optimizer: n_iterations must be >= 1");
  if (max_full_budget_trials < 0) throw ConfigError("optimizer: max_full_budget_trials < 0");
  if (n_initial_random < 0) throw ConfigError("optimizer: n_initial_random < 0");
  if (n_candidates < 1) throw ConfigError("optimizer: n_candidates must be >= 1");
  if (!(h_min > 0.0)) throw ConfigError("optimizer: h_min must be > 0");
  if (min_points < 1) throw ConfigError("optimizer: min_points must be >= 1");
  early_stop.validate();
}

BohbScheduler::BohbScheduler(const ParameterSpace& space, const OptimizerConfig& config,
                             std::uint64_t seed)
    : space_(space), config_(config), seed_(seed) {
  config_.validate();
  ladder_ = BudgetLadder::build(config_.b_min, config_.b_max, config_.eta);
  total_brackets_ = config_.n_iterations * (ladder_.s_max + 1);
}

bool BohbScheduler::BracketState::complete() const {
  for (const StageState& stage : stages) {
    if (!stage.rung_complete()) return false;
  }
  return true;
}

Job BohbScheduler::make_job(std::uint64_t trial_id, std::uint64_t config_id,
                            const ModeVector& values, int budget) {
  Job job;
  job.trial_id = trial_id;
  job.config_id = config_id;
  job.values = values;
  job.budget = budget;
  job.sim_seed = mix_seed({seed_, kSimSalt, config_id});
  return job;
}

void BohbScheduler::open_next_bracket() {
  int cycle_pos = brackets_opened_ % (ladder_.s_max + 1);
  int s = ladder_.s_max - cycle_pos;
  BracketState bracket;
  bracket.plan = bracket_schedule(ladder_, s);
  bracket.stages.reserve(bracket.plan.stages.size());
  for (const Stage& stage : bracket.plan.stages) {
    StageState state;
    state.plan = stage;
    state.slots.resize(static_cast<std::size_t>(stage.n_configs));
    bracket.stages.push_back(std::move(state));
  }
  brackets_.push_back(std::move(bracket));
  ++brackets_opened_;
}

bool BohbScheduler::stop_condition_met() const {
  return config_.max_full_budget_trials > 0 &&
         full_budget_completions_ >= config_.max_full_budget_trials;
}

std::optional<Job> BohbScheduler::next_job() {
  if (!requeued_.empty()) {
    Job job = requeued_.front();
    requeued_.pop_front();
    ++in_flight_;
    return job;
  }
  if (stop_condition_met()) return std::nullopt;

  if (initial_dispatched_ < config_.n_initial_random) {
    std::uint64_t trial_id = next_trial_id_++;
    Rng rng(mix_seed({seed_, kProposeSalt, trial_id}));
    ModeVector values = sample_uniform(space_, rng).values;
    std::uint64_t config_id = trial_id;
    configs_[config_id] = values;
    trials_[trial_id] = TrialRef{config_id, config_.b_max, -1, -1, -1, false};
    ++initial_dispatched_;
    ++in_flight_;
    return make_job(trial_id, config_id, values, config_.b_max);
  }

  // Promotions before new configs: they unblock brackets and finish
  // full-budget evaluations sooner.
  for (std::size_t bi = 0; bi < brackets_.size(); ++bi) {
    BracketState& bracket = brackets_[bi];
    for (std::size_t si = 1; si < bracket.stages.size(); ++si) {
      StageState& stage = bracket.stages[si];
      if (stage.promoted < stage.promotion_queue.size() &&
          stage.assigned < stage.plan.n_configs) {
        std::uint64_t config_id = stage.promotion_queue[stage.promoted++];
        int slot = stage.assigned++;
        std::uint64_t trial_id = next_trial_id_++;
        stage.slots[static_cast<std::size_t>(slot)].config_id = config_id;
        stage.slots[static_cast<std::size_t>(slot)].trial_id = trial_id;
        trials_[trial_id] = TrialRef{config_id, stage.plan.budget, static_cast<int>(bi),
                                     static_cast<int>(si), slot, false};
        ++in_flight_;
        return make_job(trial_id, config_id, configs_.at(config_id), stage.plan.budget);
      }
    }
  }

  // Unfilled first rungs of already-open brackets, oldest first.
  for (std::size_t bi = 0; bi < brackets_.size(); ++bi) {
    StageState& stage0 = brackets_[bi].stages.front();
    if (stage0.assigned < stage0.plan.n_configs) {
      std::uint64_t trial_id = next_trial_id_++;
      ModeVector values = propose_values(trial_id);
      std::uint64_t config_id = trial_id;
      configs_[config_id] = values;
      int slot = stage0.assigned++;
      stage0.slots[static_cast<std::size_t>(slot)].config_id = config_id;
      stage0.slots[static_cast<std::size_t>(slot)].trial_id = trial_id;
      trials_[trial_id] = TrialRef{config_id, stage0.plan.budget, static_cast<int>(bi), 0, slot,
                                   false};
      ++in_flight_;
      return make_job(trial_id, config_id, values, stage0.plan.budget);
    }
  }

  if (brackets_opened_ < total_brackets_) {
    open_next_bracket();
    return next_job();
  }
  return std::nullopt;
}

ModeVector BohbScheduler::propose_values(std::uint64_t trial_id) {
  Rng rng(mix_seed({seed_, kProposeSalt, trial_id}));
  // The exploration coin is drawn unconditionally so the consumed stream (and
  // hence the sampled configs) is identical across backends at rho = 1.
  double coin = rng.uniform();
  bool explore = config_.backend == Backend::random || coin < config_.rho;
  if (explore) return sample_uniform(space_, rng).values;

  if (config_.backend == Backend::bohb) {
    ensure_model();
    if (tpe_pair_) {
      std::vector<double> v = tpe::propose(*tpe_pair_, config_.n_candidates, rng);
      ModeVector values{};
      std::copy_n(v.begin(), kModeCount, values.begin());
      return values;
    }
    return sample_uniform(space_, rng).values;
  }
  return propose_gp(rng);
}

ModeVector BohbScheduler::propose_gp(Rng& rng) {
  ensure_model();
  if (!gp_model_) return sample_uniform(space_, rng).values;

  gp::Box box;
  box.lower.resize(kModeCount);
  box.upper.resize(kModeCount);
  for (int i = 0; i < kModeCount; ++i) {
    box.lower[i] = space_.bounds(i).lower;
    box.upper[i] = space_.bounds(i).upper;
  }
  Eigen::MatrixXd batch = gp::multistart_sga(*gp_model_, 1, box, gp_f_star_, config_.gp.sga, rng);
  ModeVector values{};
  for (int i = 0; i < kModeCount; ++i) values[static_cast<std::size_t>(i)] = batch(0, i);
  return values;
}

void BohbScheduler::ensure_model() const {
  if (model_version_ == dataset_version_) return;
  model_version_ = dataset_version_;
  tpe_pair_.reset();
  gp_model_.reset();

  // Model the largest fidelity with enough observations; proposals at every
  // budget then come from that model.
  for (auto it = dataset_.rbegin(); it != dataset_.rend(); ++it) {
    if (static_cast<int>(it->second.size()) >= 2 * config_.min_points) {
      std::optional<tpe::Split> split =
          tpe::split_observations(it->second, config_.gamma, config_.min_points);
      if (!split) continue;
      std::vector<Interval> bounds(space_.all_bounds().begin(), space_.all_bounds().end());
      tpe_pair_ = tpe::fit_pair(*split, bounds, it->first, config_.gamma, config_.h_min);
      break;
    }
  }

  if (config_.backend == Backend::gp_qei) {
    for (auto it = dataset_.rbegin(); it != dataset_.rend(); ++it) {
      int n = static_cast<int>(it->second.size());
      if (n < config_.gp.min_points) continue;
      int use = std::min(n, config_.gp.max_points);
      Eigen::MatrixXd x(use, kModeCount);
      Eigen::VectorXd y(use);
      for (int i = 0; i < use; ++i) {
        const tpe::LabeledPoint& p = it->second[static_cast<std::size_t>(n - use + i)];
        for (int d = 0; d < kModeCount; ++d) x(i, d) = p.values[static_cast<std::size_t>(d)];
        y[i] = p.loss;
      }
      gp::Kernel kernel;
      kernel.prior_mean = std::isnan(config_.gp.prior_mean) ? y.mean() : config_.gp.prior_mean;
      double var = (y.array() - y.mean()).square().sum() / std::max(use - 1, 1);
      kernel.signal_variance =
          std::isnan(config_.gp.signal_variance) ? std::max(var, 1e-8) : config_.gp.signal_variance;
      kernel.noise_variance = std::isnan(config_.gp.noise_variance)
                                  ? std::max(1e-4 * kernel.signal_variance, 1e-8)
                                  : config_.gp.noise_variance;
      kernel.length_scales.resize(kModeCount);
      for (int d = 0; d < kModeCount; ++d) {
        double range = std::max(space_.bounds(d).width(), 1e-6);
        kernel.length_scales[d] = config_.gp.length_scale_fraction * range;
      }
      gp_model_ = gp::GpModel::fit(x, y, kernel);
      double best = y.minCoeff();
      for (const tpe::LabeledPoint& p : it->second) best = std::min(best, p.loss);
      gp_f_star_ = best;
      break;
    }
  }
}

bool BohbScheduler::model_ready() const {
  ensure_model();
  return config_.backend == Backend::gp_qei ? gp_model_.has_value() : tpe_pair_.has_value();
}

std::pair<int, int> BohbScheduler::best_fidelity() const {
  if (dataset_.empty()) return {0, 0};
  auto it = dataset_.rbegin();
  return {it->first, static_cast<int>(it->second.size())};
}

void BohbScheduler::complete_rung(BracketState& bracket, std::size_t stage_index) {
  StageState& stage = bracket.stages[stage_index];
  if (stage_index + 1 >= bracket.stages.size()) return;
  std::vector<RungEntry> rung;
  rung.reserve(stage.slots.size());
  for (const Slot& slot : stage.slots) {
    rung.push_back(RungEntry{*slot.config_id, slot.loss, *slot.trial_id});
  }
  bracket.stages[stage_index + 1].promotion_queue = sh_promote(rung, config_.eta);
}

void BohbScheduler::ingest(std::uint64_t trial_id, const TrialOutcome& outcome) {
  TrialRef& ref = trials_.at(trial_id);
  if (ref.terminal) throw ConfigError("trial already terminal: " + std::to_string(trial_id));
  bool has_loss = outcome.status == TrialStatus::completed || outcome.status == TrialStatus::pruned;
  if (has_loss && !outcome.loss) {
    throw ConfigError("completed/pruned result without loss for trial " + std::to_string(trial_id));
  }
  ref.terminal = true;
  --in_flight_;

  if (has_loss) {
    const ModeVector& values = configs_.at(ref.config_id);
    tpe::LabeledPoint point;
    point.values.assign(values.begin(), values.end());
    point.loss = *outcome.loss;
    dataset_[outcome.iterations_run].push_back(std::move(point));
    ++dataset_version_;
  }
  if (outcome.status == TrialStatus::completed && ref.budget == config_.b_max) {
    ++full_budget_completions_;
  }

  if (ref.bracket >= 0) {
    BracketState& bracket = brackets_[static_cast<std::size_t>(ref.bracket)];
    StageState& stage = bracket.stages[static_cast<std::size_t>(ref.stage)];
    Slot& slot = stage.slots[static_cast<std::size_t>(ref.slot)];
    slot.terminal = true;
    slot.loss = outcome.status == TrialStatus::failed ? std::nullopt : outcome.loss;
    ++stage.terminal;
    if (stage.rung_complete()) complete_rung(bracket, static_cast<std::size_t>(ref.stage));
  }
}

BohbScheduler::TrialInfo BohbScheduler::trial_info(std::uint64_t trial_id) const {
  auto it = trials_.find(trial_id);
  if (it == trials_.end()) throw ConfigError("unknown trial " + std::to_string(trial_id));
  return TrialInfo{it->second.config_id, it->second.budget, it->second.terminal};
}

void BohbScheduler::on_result(std::uint64_t trial_id, const TrialOutcome& outcome) {
  if (!trials_.count(trial_id)) {
    throw ConfigError("result for unknown trial " + std::to_string(trial_id));
  }
  ingest(trial_id, outcome);
}

void BohbScheduler::requeue(std::uint64_t trial_id) {
  auto it = trials_.find(trial_id);
  if (it == trials_.end() || it->second.terminal) {
    throw ConfigError("cannot requeue trial " + std::to_string(trial_id));
  }
  requeued_.push_back(
      make_job(trial_id, it->second.config_id, configs_.at(it->second.config_id), it->second.budget));
  --in_flight_;
}

bool BohbScheduler::dispatch_exhausted() const {
  if (stop_condition_met()) return true;
  if (initial_dispatched_ < config_.n_initial_random) return false;
  if (brackets_opened_ < total_brackets_) return false;
  for (const BracketState& bracket : brackets_) {
    if (!bracket.complete()) return false;
  }
  return true;
}

bool BohbScheduler::run_complete() const {
  return dispatch_exhausted() && in_flight_ == 0 && requeued_.empty();
}

void BohbScheduler::replay_trial(std::uint64_t trial_id, std::uint64_t config_id,
                                 const ModeVector& values, int budget,
                                 const TrialOutcome& outcome) {
  if (trials_.count(trial_id)) {
    throw JournalCorruption("duplicate trial id " + std::to_string(trial_id));
  }
  if (auto it = configs_.find(config_id); it != configs_.end()) {
    if (it->second != values) {
      throw JournalCorruption("config " + std::to_string(config_id) +
                              " has conflicting values across journal records");
    }
  }

  TrialRef ref{config_id, budget, -1, -1, -1, false};
  if (config_id == trial_id) {
    configs_[config_id] = values;
    if (config_.n_initial_random > 0 &&
        trial_id <= static_cast<std::uint64_t>(config_.n_initial_random)) {
      if (budget != config_.b_max) {
        throw JournalCorruption("initial trial " + std::to_string(trial_id) +
                                " not at the maximum budget");
      }
      ++initial_dispatched_;
    } else {
      bool placed = false;
      for (std::size_t bi = 0; bi < brackets_.size() && !placed; ++bi) {
        StageState& stage0 = brackets_[bi].stages.front();
        if (stage0.assigned < stage0.plan.n_configs && stage0.plan.budget == budget) {
          int slot = stage0.assigned++;
          stage0.slots[static_cast<std::size_t>(slot)] = Slot{config_id, trial_id, false, {}};
          ref = TrialRef{config_id, budget, static_cast<int>(bi), 0, slot, false};
          placed = true;
        }
      }
      if (!placed) {
        if (brackets_opened_ >= total_brackets_) {
          throw JournalCorruption("trial " + std::to_string(trial_id) +
                                  " does not fit any bracket of this run");
        }
        open_next_bracket();
        StageState& stage0 = brackets_.back().stages.front();
        if (stage0.plan.budget != budget) {
          throw JournalCorruption("trial " + std::to_string(trial_id) + " at budget " +
                                  std::to_string(budget) + " does not match bracket budget " +
                                  std::to_string(stage0.plan.budget));
        }
        int slot = stage0.assigned++;
        stage0.slots[static_cast<std::size_t>(slot)] = Slot{config_id, trial_id, false, {}};
        ref = TrialRef{config_id, budget, static_cast<int>(brackets_.size() - 1), 0, slot, false};
      }
    }
  } else {
    // Promotion of an existing config to the next rung.
    bool placed = false;
    for (std::size_t bi = 0; bi < brackets_.size() && !placed; ++bi) {
      BracketState& bracket = brackets_[bi];
      for (std::size_t si = 1; si < bracket.stages.size() && !placed; ++si) {
        StageState& stage = bracket.stages[si];
        if (stage.plan.budget == budget && stage.promoted < stage.promotion_queue.size() &&
            stage.promotion_queue[stage.promoted] == config_id &&
            stage.assigned < stage.plan.n_configs) {
          ++stage.promoted;
          int slot = stage.assigned++;
          stage.slots[static_cast<std::size_t>(slot)] = Slot{config_id, trial_id, false, {}};
          ref = TrialRef{config_id, budget, static_cast<int>(bi), static_cast<int>(si), slot,
                         false};
          placed = true;
        }
      }
    }
    if (!placed) {
      throw JournalCorruption("trial " + std::to_string(trial_id) + " promotes config " +
                              std::to_string(config_id) + ", which no rung survivor matches");
    }
  }

  trials_[trial_id] = ref;
  next_trial_id_ = std::max(next_trial_id_, trial_id + 1);
  ++in_flight_;
  ingest(trial_id, outcome);
}

}  // namespace modecal
