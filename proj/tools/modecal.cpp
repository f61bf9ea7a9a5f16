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

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "modecal/coordinator.hpp"
#include "modecal/errors.hpp"
#include "modecal/mnl_estimate.hpp"
#include "modecal/net.hpp"
#include "modecal/report.hpp"
#include "modecal/run_config.hpp"
#include "modecal/worker.hpp"

namespace {

using modecal::ConfigError;
using modecal::JournalCorruption;
using modecal::ProtocolError;
using nlohmann::json;

modecal::ModeVector intercepts_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open intercepts file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object() || j.size() != modecal::kModeCount) {
    throw ConfigError(path + ": intercepts must name exactly the 8 modes");
  }
  modecal::ModeVector values{};
  for (const auto& [name, v] : j.items()) {
    auto m = modecal::mode_index(name);
    if (!m) throw ConfigError(path + ": unknown mode '" + name + "'");
    values[static_cast<std::size_t>(*m)] = v.get<double>();
  }
  return values;
}

int cmd_calibrate(const std::string& config_path, const std::string& out_dir, int workers,
                  std::uint64_t seed, const std::string& resume_dir, std::uint16_t port) {
  std::shared_ptr<modecal::Clock> run_clock;
  std::unique_ptr<modecal::Coordinator> coordinator;

  if (!resume_dir.empty()) {
    // The snapshot in the run directory defines the run; a clock choice must
    // match what was configured originally.
    std::ifstream meta_in(std::filesystem::path(resume_dir) / "run.json");
    if (!meta_in) throw ConfigError("no run.json under " + resume_dir);
    json meta = json::parse(meta_in, nullptr, true);
    modecal::RunConfig config = modecal::run_config_from_texts(
        meta.at("config_text").get<std::string>(), meta.at("scenario_text").get<std::string>(),
        resume_dir + "/run.json");
    run_clock = config.clock.use_virtual
                    ? std::static_pointer_cast<modecal::Clock>(std::make_shared<modecal::VirtualClock>())
                    : std::make_shared<modecal::WallClock>();
    coordinator = modecal::Coordinator::resume(resume_dir, run_clock);
  } else {
    if (config_path.empty()) throw ConfigError("calibrate needs --config (or --resume)");
    modecal::RunConfig config = modecal::load_run_config(config_path);
    run_clock = config.clock.use_virtual
                    ? std::static_pointer_cast<modecal::Clock>(std::make_shared<modecal::VirtualClock>())
                    : std::make_shared<modecal::WallClock>();
    std::string dir = out_dir.empty() ? "runs/seed-" + std::to_string(seed) : out_dir;
    coordinator = modecal::Coordinator::create(dir, config, seed, run_clock);
  }

  std::unique_ptr<modecal::MasterServer> server;
  if (port != 0) {
    server = std::make_unique<modecal::MasterServer>(*coordinator, port);
    std::cout << "[master] listening on port " << server->port() << "\n";
  }

  if (workers > 0) {
    modecal::run_calibration(*coordinator, workers);
  } else {
    // Remote-only run: wait for remote workers to finish the schedule.
    while (!coordinator->run_complete()) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
  }
  if (server) server->stop();

  modecal::RunSummary summary = modecal::write_report(coordinator->run_dir());
  std::cout << summary.to_string();
  std::cout << "run directory: " << coordinator->run_dir().string() << "\n";
  return 0;
}

int cmd_worker(const std::string& master) {
  auto colon = master.rfind(':');
  if (colon == std::string::npos) throw ConfigError("--master must be host:port");
  std::string host = master.substr(0, colon);
  int port = std::stoi(master.substr(colon + 1));
  modecal::RemoteMaster endpoint(host, static_cast<std::uint16_t>(port));
  modecal::WorkerOptions options;
  options.address = "remote";
  options.wait_poll_seconds = 0.2;
  options.heartbeat_seconds = 2.0;
  modecal::run_worker(endpoint, options);
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& intercepts_path, int budget,
                 std::uint64_t seed, const std::string& out_csv) {
  modecal::Scenario scenario = modecal::Scenario::from_json_file(scenario_path);
  modecal::InterceptConfig config;
  config.values = intercepts_from_file(intercepts_path);
  modecal::SimulationResult result = modecal::run_simulation(scenario, config, budget, seed);

  std::cout << "iterations: " << result.iterations_run << "\n";
  for (int m = 0; m < modecal::kModeCount; ++m) {
    std::cout << "  " << modecal::kModeNames[static_cast<std::size_t>(m)] << ": "
              << result.final_share[m] << "% (benchmark " << scenario.benchmark[m] << "%)\n";
  }
  std::cout << "L1 vs benchmark: " << modecal::l1_objective(result.final_share, scenario.benchmark)
            << "\n";
  if (!out_csv.empty()) {
    std::ofstream out(out_csv);
    if (!out) throw ConfigError("cannot write " + out_csv);
    out << modecal::trajectory_csv(result);
    std::cout << "trajectory written to " << out_csv << "\n";
  }
  return 0;
}

int cmd_report(const std::string& run_dir) {
  modecal::RunSummary summary = modecal::write_report(run_dir);
  std::cout << summary.to_string();
  std::cout << "wrote best_so_far.csv, trials.csv, summary.json under " << run_dir << "\n";
  return 0;
}

int cmd_estimate(const std::string& choices_path) {
  modecal::ChoiceDataset data = modecal::ChoiceDataset::from_json_file(choices_path);
  modecal::BetaEstimate estimate = modecal::estimate_beta(data);
  std::cout << estimate.to_string();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mode-choice intercept calibration via parallel multi-fidelity Bayesian"
               " optimization"};
  app.require_subcommand(1);

  std::string config_path, out_dir, resume_dir, master, scenario_path, intercepts_path,
      choices_path, run_dir, out_csv;
  int workers = 4;
  int budget = 21;
  std::uint64_t seed = 1;
  std::uint16_t port = 0;

  CLI::App* calibrate = app.add_subcommand("calibrate", "run the optimizer (master process)");
  calibrate->add_option("--config", config_path, "run configuration file");
  calibrate->add_option("--workers", workers, "in-process worker threads");
  calibrate->add_option("--seed", seed, "master seed");
  calibrate->add_option("--resume", resume_dir, "resume from an existing run directory");
  calibrate->add_option("--out", out_dir, "run directory for journals and reports");
  calibrate->add_option("--port", port, "listen for remote workers on this TCP port");

  CLI::App* worker = app.add_subcommand("worker", "evaluate jobs for a remote master");
  worker->add_option("--master", master, "master address host:port")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "run the mode-choice simulator once");
  simulate->add_option("--scenario", scenario_path, "scenario file")->required();
  simulate->add_option("--intercepts", intercepts_path, "per-mode intercepts JSON")->required();
  simulate->add_option("--budget", budget, "iterations to run");
  simulate->add_option("--seed", seed, "simulation seed");
  simulate->add_option("--out", out_csv, "write per-iteration shares CSV here");

  CLI::App* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("dir", run_dir, "run directory")->required();

  CLI::App* estimate = app.add_subcommand("estimate", "multinomial-logit MLE from observed choices");
  estimate->add_option("--choices", choices_path, "choice observations JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (calibrate->parsed()) {
      return cmd_calibrate(config_path, out_dir, workers, seed, resume_dir, port);
    }
    if (worker->parsed()) return cmd_worker(master);
    if (simulate->parsed()) return cmd_simulate(scenario_path, intercepts_path, budget, seed, out_csv);
    if (report->parsed()) return cmd_report(run_dir);
    if (estimate->parsed()) return cmd_estimate(choices_path);
  } catch (const JournalCorruption& e) {
    std::cerr << "journal corruption: " << e.what() << "\n";
    return 2;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
