#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "modecal/errors.hpp"
#include "modecal/logit_sim.hpp"

using namespace modecal;

namespace {

// All modes interchangeable, no congestion, deterministic attributes.
Scenario symmetric_scenario(int population) {
  Scenario s;
  s.population = population;
  s.seed = 99;
  s.capacity = 1e12;
  s.damping = 0.5;
  s.coefficients = UtilityCoefficients{-0.1, -0.05, -0.3};
  AttributeDistribution d;
  d.cost_median = 2.0;
  d.cost_sigma = 0.0;
  d.time_median = 20.0;
  d.time_sigma = 0.0;
  d.transfers_mean = 0.0;
  s.attributes.fill(d);
  return s;
}

Scenario bundled_scenario() {
  return Scenario::from_json_file(std::filesystem::path(MODECAL_SOURCE_DIR) /
                                  "scenarios/sf_10k.json");
}

}  // namespace

TEST_CASE("utility is the linear intercept + attribute form") {
  UtilityCoefficients zero{};
  CHECK(utility(0.0, ModeAttributes{0.0, 1.0, 0.0}, zero) == doctest::Approx(0.0));

  UtilityCoefficients cost_only{-0.1, 0.0, 0.0};
  CHECK(utility(1.0, ModeAttributes{10.0, 1.0, 0.0}, cost_only) == doctest::Approx(0.0));

  UtilityCoefficients time_only{0.0, -0.05, 0.0};
  CHECK(utility(-2.0, ModeAttributes{0.0, 30.0, 0.0}, time_only) == doctest::Approx(-3.5));
}

TEST_CASE("choice probabilities: symmetry, normalization, binary forms") {
  std::array<double, kModeCount> utilities{};
  utilities.fill(1.7);
  auto probs = choice_probabilities(utilities);
  for (double p : probs) CHECK(p == doctest::Approx(0.125).epsilon(1e-12));

  // Two live modes with a log-3 gap; the rest effectively excluded.
  utilities.fill(-1e3);
  utilities[0] = std::log(3.0);
  utilities[1] = 0.0;
  probs = choice_probabilities(utilities);
  CHECK(probs[0] == doctest::Approx(0.75).epsilon(1e-9));
  CHECK(probs[1] == doctest::Approx(0.25).epsilon(1e-9));

  // Binary logit at v = 0 against a zero-utility baseline.
  utilities.fill(-1e3);
  utilities[0] = 0.0;
  utilities[1] = 0.0;
  probs = choice_probabilities(utilities);
  CHECK(probs[0] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("choice probabilities sum to one for random finite utilities") {
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, kModeCount> utilities{};
    for (double& u : utilities) u = rng.uniform(-600.0, 600.0);
    auto probs = choice_probabilities(utilities);
    double sum = 0.0;
    for (double p : probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("shift invariance: adding c to every utility leaves probabilities unchanged") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<double, kModeCount> utilities{};
    for (double& u : utilities) u = rng.uniform(-5.0, 5.0);
    auto base = choice_probabilities(utilities);
    double c = rng.uniform(-100.0, 100.0);
    for (double& u : utilities) u += c;
    auto shifted = choice_probabilities(utilities);
    for (int k = 0; k < kModeCount; ++k) {
      CHECK(std::abs(base[static_cast<std::size_t>(k)] - shifted[static_cast<std::size_t>(k)]) <
            1e-12);
    }
  }
}

TEST_CASE("monotonicity: raising one utility does not lower its probability") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::array<double, kModeCount> utilities{};
    for (double& u : utilities) u = rng.uniform(-3.0, 3.0);
    int k = static_cast<int>(rng.next_u64() % kModeCount);
    auto before = choice_probabilities(utilities);
    utilities[static_cast<std::size_t>(k)] += rng.uniform(0.0, 2.0);
    auto after = choice_probabilities(utilities);
    CHECK(after[static_cast<std::size_t>(k)] >= before[static_cast<std::size_t>(k)] - 1e-12);
  }
}

TEST_CASE("BPR congestion curve") {
  CHECK(congestion_update(10.0, 0.0, 100.0, 0.15, 4.0) == doctest::Approx(10.0));
  CHECK(congestion_update(10.0, 100.0, 100.0, 0.15, 4.0) == doctest::Approx(11.5));
  CHECK(congestion_update(10.0, 200.0, 100.0, 0.15, 4.0) == doctest::Approx(34.0));
  CHECK_THROWS_AS(congestion_update(10.0, 1.0, 0.0, 0.15, 4.0), ConfigError);
}

TEST_CASE("L1 objective against the bundled benchmark") {
  ModeShare benchmark = ModeShare::from_counts({2, 49, 4, 3, 2, 1, 22, 17});
  CHECK(l1_objective(benchmark, benchmark) == doctest::Approx(0.0));

  ModeVector uniform{};
  uniform.fill(12.5);
  CHECK(l1_objective(ModeShare::from_percentages(uniform), benchmark) == doctest::Approx(101.0));

  ModeVector all_car{};
  all_car[kCarMode] = 100.0;
  CHECK(l1_objective(ModeShare::from_percentages(all_car), benchmark) == doctest::Approx(102.0));
}

TEST_CASE("mode share invariants are enforced") {
  ModeVector bad{};
  bad.fill(12.5);
  bad[0] = 13.0;  // sums to 100.5
  CHECK_THROWS_AS(ModeShare::from_percentages(bad), ConfigError);
  bad.fill(12.5);
  bad[0] = -1.0;
  CHECK_THROWS_AS(ModeShare::from_percentages(bad), ConfigError);
}

TEST_CASE("symmetric scenario yields ~12.5% per mode") {
  Scenario scenario = symmetric_scenario(10000);
  AgentPopulation population = AgentPopulation::generate(scenario);
  InterceptConfig config;
  config.values.fill(0.7);
  SimulationResult result = run_simulation(scenario, population, config, 5, 11);
  // Binomial bound: sd of a share is sqrt(p(1-p)/n)*100 ~ 0.33pp at p=1/8.
  double sigma = 100.0 * std::sqrt(0.125 * 0.875 / 10000.0);
  for (int k = 0; k < kModeCount; ++k) {
    CHECK(std::abs(result.final_share[k] - 12.5) < 3.0 * sigma + 1e-9);
  }
}

TEST_CASE("simulation rejects budget < 1 and is bit-deterministic") {
  Scenario scenario = symmetric_scenario(500);
  AgentPopulation population = AgentPopulation::generate(scenario);
  InterceptConfig config;
  config.values.fill(0.0);
  CHECK_THROWS_AS(run_simulation(scenario, population, config, 0, 1), ConfigError);

  SimulationResult a = run_simulation(scenario, population, config, 7, 123);
  SimulationResult b = run_simulation(scenario, population, config, 7, 123);
  REQUIRE(a.share_trajectory.size() == b.share_trajectory.size());
  for (std::size_t i = 0; i < a.share_trajectory.size(); ++i) {
    CHECK(a.share_trajectory[i].values() == b.share_trajectory[i].values());
  }
  CHECK(a.loss_trajectory == b.loss_trajectory);
}

TEST_CASE("fidelity nesting: budget 21 extends budget 3 exactly") {
  Scenario scenario = bundled_scenario();
  scenario.population = 2000;  // keep the unit test quick
  AgentPopulation population = AgentPopulation::generate(scenario);
  InterceptConfig config;
  config.values = ModeVector{1.0, -0.5, 0.25, 0.0, -1.0, 0.5, 2.0, -0.25};
  SimulationResult low = run_simulation(scenario, population, config, 3, 77);
  SimulationResult high = run_simulation(scenario, population, config, 21, 77);
  REQUIRE(high.share_trajectory.size() == 21);
  for (int i = 0; i < 3; ++i) {
    CHECK(high.share_trajectory[static_cast<std::size_t>(i)].values() ==
          low.share_trajectory[static_cast<std::size_t>(i)].values());
    CHECK(high.loss_trajectory[static_cast<std::size_t>(i)] ==
          low.loss_trajectory[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("uniform intercept shifts leave the trajectory unchanged") {
  Scenario scenario = bundled_scenario();
  scenario.population = 2000;
  AgentPopulation population = AgentPopulation::generate(scenario);
  InterceptConfig config;
  config.values = ModeVector{0.3, -0.8, 0.1, 0.9, -0.2, 0.0, 1.1, -1.4};
  SimulationResult base = run_simulation(scenario, population, config, 5, 31);
  for (double& v : config.values) v += 4.25;
  SimulationResult shifted = run_simulation(scenario, population, config, 5, 31);
  for (std::size_t i = 0; i < base.share_trajectory.size(); ++i) {
    CHECK(base.share_trajectory[i].values() == shifted.share_trajectory[i].values());
  }
}

TEST_CASE("ground-truth self-consistency: loss at truth stays under the noise floor") {
  Scenario scenario = bundled_scenario();
  REQUIRE(scenario.ground_truth.has_value());
  AgentPopulation population = AgentPopulation::generate(scenario);
  InterceptConfig truth;
  truth.values = *scenario.ground_truth;

  // The benchmark is what truth itself produces at one reference seed; the
  // noise floor is the 3-sigma spread of truth's loss across other seeds.
  scenario.benchmark = run_simulation(scenario, population, truth, 21, 1000).final_share;

  double sum = 0.0, sum_sq = 0.0;
  const int n_seeds = 20;
  for (int s = 0; s < n_seeds; ++s) {
    double loss = run_simulation(scenario, population, truth, 21, 2000 + s)
                      .loss_trajectory.back();
    sum += loss;
    sum_sq += loss * loss;
  }
  double mean = sum / n_seeds;
  double sd = std::sqrt(std::max(sum_sq / n_seeds - mean * mean, 0.0));
  double noise_floor = mean + 3.0 * sd;

  double fresh = run_simulation(scenario, population, truth, 21, 4242).loss_trajectory.back();
  CHECK(fresh <= noise_floor);
  CHECK(noise_floor < 15.0);  // the floor itself must be small for calibration to mean anything
}

TEST_CASE("trajectory CSV has one row per iteration per mode") {
  Scenario scenario = symmetric_scenario(100);
  AgentPopulation population = AgentPopulation::generate(scenario);
  InterceptConfig config;
  config.values.fill(0.0);
  SimulationResult result = run_simulation(scenario, population, config, 2, 9);
  std::string csv = trajectory_csv(result);
  int rows = 0;
  for (char c : csv) {
    if (c == '\n') ++rows;
  }
  CHECK(rows == 1 + 2 * kModeCount);
  CHECK(csv.find("iteration,mode,share") == 0);
}
