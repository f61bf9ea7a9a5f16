#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "modecal/coordinator.hpp"
#include "modecal/errors.hpp"
#include "modecal/net.hpp"
#include "modecal/report.hpp"
#include "modecal/worker.hpp"

using namespace modecal;
namespace fs = std::filesystem;

namespace {

// Small scenario + optimizer so orchestration tests run in milliseconds.
std::string test_scenario_text() {
  return R"({
    "population": 300, "seed": 5, "capacity": 120.0,
    "bpr_alpha": 0.15, "bpr_beta": 4.0, "damping": 0.5,
    "coefficients": {"cost": -0.08, "time": -0.05, "transfers": -0.4},
    "attributes": {
      "bike":              {"cost_median": 0.5, "time_median": 28, "transfers_mean": 0},
      "car":               {"cost_median": 6.0, "time_median": 17, "transfers_mean": 0},
      "drive-transit":     {"cost_median": 4.5, "time_median": 34, "transfers_mean": 0.8},
      "ride-hail":         {"cost_median": 13.0, "time_median": 19, "transfers_mean": 0},
      "ride-hail-pooled":  {"cost_median": 8.5, "time_median": 26, "transfers_mean": 0.3},
      "ride-hail-transit": {"cost_median": 9.0, "time_median": 38, "transfers_mean": 1.4},
      "walk":              {"cost_median": 0.05, "time_median": 47, "transfers_mean": 0},
      "walk-transit":      {"cost_median": 2.8, "time_median": 36, "transfers_mean": 1.1}
    },
    "benchmark": {"bike": 2, "car": 49, "drive-transit": 4, "ride-hail": 3,
                  "ride-hail-pooled": 2, "ride-hail-transit": 1, "walk": 22, "walk-transit": 17}
  })";
}

std::string test_config_text(const std::string& extra_optimizer = "") {
  return R"({
    "scenario": "unused.json",
    "space": {"bounds": {"bike": [-3,3], "car": [-3,3], "drive-transit": [-3,3],
              "ride-hail": [-3,3], "ride-hail-pooled": [-3,3], "ride-hail-transit": [-3,3],
              "walk": [-3,3], "walk-transit": [-3,3]}},
    "optimizer": {"b_min": 1, "b_max": 9, "eta": 3, "n_iterations": 2, "min_points": 4)" +
         extra_optimizer + R"(},
    "clock": {"mode": "virtual", "minutes_per_iteration": 1.0}
  })";
}

RunConfig test_run_config(const std::string& extra_optimizer = "") {
  return run_config_from_texts(test_config_text(extra_optimizer), test_scenario_text(), "test");
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "modecal-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("journal round trip and corruption detection") {
  fs::path dir = fresh_dir("journal");
  {
    JournalWriter writer(dir, JournalData{});
    ModeVector v{};
    v.fill(1.5);
    writer.append_config(1, v);
    writer.append_config(1, v);  // duplicate with same values: no-op
    ResultRecord r;
    r.trial = 1;
    r.config = 1;
    r.budget = 9;
    r.status = TrialStatus::completed;
    r.loss = 57.25;
    r.iterations_run = 9;
    r.t_finish = 4.0;
    r.worker = 2;
    writer.append_result(r);
  }
  JournalData data = read_journal(dir);
  REQUIRE(data.configs.size() == 1);
  REQUIRE(data.results.size() == 1);
  CHECK(data.results[0].loss == doctest::Approx(57.25));
  CHECK(data.configs.at(1)[0] == doctest::Approx(1.5));

  SUBCASE("bad json line is named") {
    std::ofstream(results_path(dir), std::ios::app) << "{not json\n";
    try {
      read_journal(dir);
      FAIL("expected JournalCorruption");
    } catch (const JournalCorruption& e) {
      CHECK(std::string(e.what()).find("results.jsonl:2") != std::string::npos);
    }
  }

  SUBCASE("result referencing a missing config is rejected") {
    std::ofstream(results_path(dir), std::ios::app)
        << R"({"trial":2,"config":99,"budget":9,"status":"completed","loss":1.0,)"
        << R"("iterations_run":9,"t_submit":0,"t_start":0,"t_finish":1,"worker":1})" << "\n";
    CHECK_THROWS_AS(read_journal(dir), JournalCorruption);
  }

  SUBCASE("completed record without a loss is rejected") {
    std::ofstream(results_path(dir), std::ios::app)
        << R"({"trial":2,"config":1,"budget":9,"status":"completed","loss":null,)"
        << R"("iterations_run":9,"t_submit":0,"t_start":0,"t_finish":1,"worker":1})" << "\n";
    CHECK_THROWS_AS(read_journal(dir), JournalCorruption);
  }

  SUBCASE("duplicate config with different values is rejected") {
    std::ofstream(configs_path(dir), std::ios::app)
        << R"({"config":1,"values":{"bike":9,"car":9,"drive-transit":9,"ride-hail":9,)"
        << R"("ride-hail-pooled":9,"ride-hail-transit":9,"walk":9,"walk-transit":9}})" << "\n";
    CHECK_THROWS_AS(read_journal(dir), JournalCorruption);
  }
}

TEST_CASE("a fresh run completes with in-process workers and journals everything") {
  fs::path dir = fresh_dir("fresh-run");
  auto clock = std::make_shared<VirtualClock>();
  auto coordinator = Coordinator::create(dir, test_run_config(), 1, clock);
  run_calibration(*coordinator, 4);
  CHECK(coordinator->run_complete());

  JournalData journal = read_journal(dir);
  CHECK(journal.results.size() > 10);
  for (const ResultRecord& r : journal.results) {
    CHECK((r.status == TrialStatus::completed || r.status == TrialStatus::pruned));
    CHECK(journal.configs.count(r.config) == 1);
    CHECK(r.t_finish >= r.t_start);
    CHECK(r.t_start >= r.t_submit);
  }

  RunSummary summary = write_report(dir);
  CHECK(summary.trials == static_cast<int>(journal.results.size()));
  CHECK(summary.low_l1 <= summary.high_l1);
  CHECK(fs::exists(dir / "best_so_far.csv"));
  CHECK(fs::exists(dir / "trials.csv"));
  CHECK(fs::exists(dir / "summary.json"));

  // Best-so-far curve is a running minimum.
  std::istringstream curve(best_so_far_csv(journal));
  std::string line;
  std::getline(curve, line);  // header
  double prev = 1e300;
  while (std::getline(curve, line)) {
    auto last_comma = line.rfind(',');
    double best = std::stod(line.substr(last_comma + 1));
    CHECK(best <= prev + 1e-12);
    prev = best;
  }

  // Starting fresh in a used directory is refused.
  CHECK_THROWS_AS(Coordinator::create(dir, test_run_config(), 1, clock), ConfigError);
}

TEST_CASE("interrupt at every prefix and resume: journals match the uninterrupted run") {
  // Uninterrupted single-worker run with a virtual clock.
  fs::path full_dir = fresh_dir("durability-full");
  {
    auto clock = std::make_shared<VirtualClock>();
    auto coordinator = Coordinator::create(full_dir, test_run_config(), 77, clock);
    run_calibration(*coordinator, 1);
  }
  std::string full_results = slurp(results_path(full_dir));
  std::string full_configs = slurp(configs_path(full_dir));
  JournalData full = read_journal(full_dir);
  REQUIRE(full.results.size() > 10);

  // Kill points: a few representative prefixes, including mid-initial-phase.
  for (std::size_t kill_after : {std::size_t{3}, full.results.size() / 2,
                                 full.results.size() - 2}) {
    fs::path dir = fresh_dir("durability-" + std::to_string(kill_after));
    {
      auto clock = std::make_shared<VirtualClock>();
      auto coordinator = Coordinator::create(dir, test_run_config(), 77, clock);
      std::uint64_t worker = coordinator->register_worker("inproc:0");
      std::size_t done = 0;
      while (done < kill_after) {
        WorkerStep step = evaluate_one(*coordinator, worker, coordinator->scenario(),
                                       coordinator->population(),
                                       coordinator->config().optimizer.early_stop.check_iteration);
        REQUIRE(step == WorkerStep::evaluated);
        ++done;
      }
      // Abandon the coordinator without any shutdown: the journal stays as-is.
    }
    {
      auto clock = std::make_shared<VirtualClock>();
      auto coordinator = Coordinator::resume(dir, clock);
      run_calibration(*coordinator, 1);
    }
    CHECK(slurp(results_path(dir)) == full_results);
    CHECK(slurp(configs_path(dir)) == full_configs);
  }
}

TEST_CASE("resume restores optimizer state equal to the live run (replay equivalence)") {
  fs::path dir = fresh_dir("resume-state");
  auto clock = std::make_shared<VirtualClock>();
  auto coordinator = Coordinator::create(dir, test_run_config(), 9, clock);
  std::uint64_t worker = coordinator->register_worker("inproc:0");
  for (int i = 0; i < 9; ++i) {
    REQUIRE(evaluate_one(*coordinator, worker, coordinator->scenario(),
                         coordinator->population(), 3) == WorkerStep::evaluated);
  }

  auto resumed_clock = std::make_shared<VirtualClock>();
  auto resumed = Coordinator::resume(dir, resumed_clock);
  // The journal had 9 completed trials; the next proposal is trial 10 and the
  // model dataset holds all 9 observations.
  std::size_t observations = 0;
  for (const auto& [fidelity, points] : resumed->scheduler().dataset()) {
    observations += points.size();
  }
  CHECK(observations == 9);
  JobAssignment next = resumed->request_job(resumed->register_worker("inproc:r"));
  REQUIRE(next.kind == JobAssignment::Kind::job);
  CHECK(next.job.trial_id == 10);
  CHECK(resumed_clock->now_minutes() == doctest::Approx(clock->now_minutes()));
}

TEST_CASE("one worker and a fixed seed give bit-identical journals across runs") {
  fs::path a = fresh_dir("repeat-a");
  fs::path b = fresh_dir("repeat-b");
  for (const fs::path& dir : {a, b}) {
    auto clock = std::make_shared<VirtualClock>();
    auto coordinator = Coordinator::create(dir, test_run_config(), 31, clock);
    run_calibration(*coordinator, 1);
  }
  CHECK(slurp(results_path(a)) == slurp(results_path(b)));
  CHECK(slurp(configs_path(a)) == slurp(configs_path(b)));
  CHECK(slurp(results_path(a)).size() > 100);
}

TEST_CASE("startup refuses a journal whose results reference a missing config") {
  fs::path dir = fresh_dir("missing-config");
  {
    auto clock = std::make_shared<VirtualClock>();
    auto coordinator = Coordinator::create(dir, test_run_config(), 3, clock);
    std::uint64_t worker = coordinator->register_worker("w");
    REQUIRE(evaluate_one(*coordinator, worker, coordinator->scenario(),
                         coordinator->population(), 3) == WorkerStep::evaluated);
  }
  // Rewrite the results line to point at a config that was never journaled.
  std::string results = slurp(results_path(dir));
  std::string broken = results;
  broken.replace(broken.find("\"config\":1"), 10, "\"config\":7");
  std::ofstream(results_path(dir), std::ios::trunc) << broken;
  auto clock = std::make_shared<VirtualClock>();
  CHECK_THROWS_AS(Coordinator::resume(dir, clock), JournalCorruption);
}

TEST_CASE("silent workers are marked lost and their trials re-dispatched once") {
  fs::path dir = fresh_dir("lost-worker");
  auto run_clock = std::make_shared<VirtualClock>();
  auto registry_clock = std::make_shared<VirtualClock>();
  auto coordinator = Coordinator::create(dir, test_run_config(), 4, run_clock, registry_clock);

  std::uint64_t w1 = coordinator->register_worker("w1");
  std::uint64_t w2 = coordinator->register_worker("w2");
  JobAssignment a1 = coordinator->request_job(w1);
  REQUIRE(a1.kind == JobAssignment::Kind::job);

  // w1 goes silent past the timeout while w2 stays fresh.
  registry_clock->advance_minutes(1.0);
  coordinator->heartbeat(w2);
  coordinator->reap();

  JobAssignment a2 = coordinator->request_job(w2);
  REQUIRE(a2.kind == JobAssignment::Kind::job);
  CHECK(a2.job.trial_id == a1.job.trial_id);  // the orphaned trial comes back first
  CHECK(a2.job.values == a1.job.values);

  // The lost worker's late result is discarded; w2's counts.
  coordinator->submit_result(w1, a1.job.trial_id, TrialStatus::completed, 50.0, 9);
  coordinator->submit_result(w2, a2.job.trial_id, TrialStatus::completed, 60.0, 9);
  JournalData journal = read_journal(dir);
  REQUIRE(journal.results.size() == 1);
  CHECK(journal.results[0].loss == doctest::Approx(60.0));
  CHECK(journal.results[0].worker == w2);

  // A lost worker cannot request work until it re-registers.
  CHECK_THROWS_AS(coordinator->request_job(w1), ProtocolError);
}

TEST_CASE("duplicate live registration is rejected, lost ids can re-register") {
  fs::path dir = fresh_dir("registry");
  auto run_clock = std::make_shared<VirtualClock>();
  auto registry_clock = std::make_shared<VirtualClock>();
  auto coordinator = Coordinator::create(dir, test_run_config(), 8, run_clock, registry_clock);

  std::uint64_t id = coordinator->register_worker("a");
  CHECK_THROWS_AS(coordinator->register_worker_with_id("b", id), ProtocolError);

  registry_clock->advance_minutes(10.0);
  coordinator->reap();
  CHECK(coordinator->register_worker_with_id("b", id) == id);

  // Deregistering an idle worker has no trial impact.
  std::uint64_t other = coordinator->register_worker("c");
  coordinator->deregister(other);
  JournalData journal = read_journal(dir);
  CHECK(journal.results.empty());
}

TEST_CASE("remote workers over TCP complete a run") {
  fs::path dir = fresh_dir("tcp-run");
  auto clock = std::make_shared<VirtualClock>();
  auto coordinator = Coordinator::create(dir, test_run_config(), 6, clock);
  MasterServer server(*coordinator, 0);

  WorkerOptions options;
  options.address = "tcp-test";
  options.wait_poll_seconds = 0.001;
  options.heartbeat_seconds = 0.05;

  std::vector<std::thread> workers;
  for (int i = 0; i < 3; ++i) {
    workers.emplace_back([port = server.port(), options] {
      RemoteMaster master("127.0.0.1", port);
      run_worker(master, options);
    });
  }
  for (std::thread& t : workers) t.join();
  server.stop();

  CHECK(coordinator->run_complete());
  JournalData journal = read_journal(dir);
  CHECK(journal.results.size() > 10);
}

TEST_CASE("run config parsing catches mistakes") {
  CHECK_THROWS_AS(run_config_from_texts("{}", test_scenario_text(), "t"), ConfigError);
  CHECK_THROWS_AS(run_config_from_texts(R"({"space": {"center": "scenario_ground_truth"}})",
                                        test_scenario_text(), "t"),
                  ConfigError);
  RunConfig ok = test_run_config();
  CHECK(ok.optimizer.b_max == 9);
  CHECK(ok.clock.use_virtual);
  CHECK(ok.space.bounds(0).lower == doctest::Approx(-3.0));
}
