#include <doctest.h>

#include "modecal/errors.hpp"
#include "modecal/hyperband.hpp"

using namespace modecal;

TEST_CASE("budget ladder arithmetic") {
  BudgetLadder ladder = BudgetLadder::build(1, 9, 3.0);
  CHECK(ladder.s_max == 2);
  CHECK(ladder.stage_budget(0) == 9);
  CHECK(ladder.stage_budget(1) == 3);
  CHECK(ladder.stage_budget(2) == 1);

  BudgetLadder point = BudgetLadder::build(5, 5, 3.0);
  CHECK(point.s_max == 0);
  CHECK(point.stage_budget(0) == 5);

  // 3 -> 21 is not an exact power of 3: s_max floors to 1, budgets {7, 21}.
  BudgetLadder paper = BudgetLadder::build(3, 21, 3.0);
  CHECK(paper.s_max == 1);
  CHECK(paper.stage_budget(0) == 21);
  CHECK(paper.stage_budget(1) == 7);

  CHECK_THROWS_AS(BudgetLadder::build(1, 9, 1.0), ConfigError);
  CHECK_THROWS_AS(BudgetLadder::build(0, 9, 3.0), ConfigError);
  CHECK_THROWS_AS(BudgetLadder::build(9, 3, 3.0), ConfigError);
}

TEST_CASE("bracket schedule for ladder(1,9,3)") {
  BudgetLadder ladder = BudgetLadder::build(1, 9, 3.0);

  BracketPlan aggressive = bracket_schedule(ladder, 2);
  REQUIRE(aggressive.stages.size() == 3);
  CHECK(aggressive.stages[0].n_configs == 9);
  CHECK(aggressive.stages[0].budget == 1);
  CHECK(aggressive.stages[1].n_configs == 3);
  CHECK(aggressive.stages[1].budget == 3);
  CHECK(aggressive.stages[2].n_configs == 1);
  CHECK(aggressive.stages[2].budget == 9);

  BracketPlan conservative = bracket_schedule(ladder, 0);
  REQUIRE(conservative.stages.size() == 1);
  CHECK(conservative.stages[0].n_configs == 3);
  CHECK(conservative.stages[0].budget == 9);

  CHECK_THROWS_AS(bracket_schedule(ladder, 3), ConfigError);
}

TEST_CASE("bracket stages multiply budgets by eta and never strand a config") {
  for (int b_min : {1, 2, 3}) {
    for (int b_max : {9, 21, 81}) {
      BudgetLadder ladder = BudgetLadder::build(b_min, b_max, 3.0);
      for (int s = 0; s <= ladder.s_max; ++s) {
        BracketPlan plan = bracket_schedule(ladder, s);
        for (std::size_t i = 0; i < plan.stages.size(); ++i) {
          CHECK(plan.stages[i].n_configs >= 1);
          if (i > 0) {
            CHECK(plan.stages[i].budget > plan.stages[i - 1].budget);
            CHECK(plan.stages[i].n_configs <= plan.stages[i - 1].n_configs);
          }
        }
        CHECK(plan.stages.back().budget == b_max);
      }
    }
  }
}

TEST_CASE("early stop threshold endpoints and interpolation") {
  EarlyStopRule rule;
  CHECK(early_stop_threshold(rule, 0.0) == doctest::Approx(115.0));
  CHECK(early_stop_threshold(rule, 150.0) == doctest::Approx(115.0));
  CHECK(early_stop_threshold(rule, 750.0) == doctest::Approx(5.0));
  CHECK(early_stop_threshold(rule, 10000.0) == doctest::Approx(5.0));
  CHECK(early_stop_threshold(rule, 450.0) == doctest::Approx(60.0));
  // Linear rule between the endpoints: 115 - 110 * (50 / 600).
  CHECK(early_stop_threshold(rule, 200.0) == doctest::Approx(115.0 - 110.0 * 50.0 / 600.0));
}

TEST_CASE("early stop threshold is monotone nonincreasing on a minute grid") {
  EarlyStopRule rule;
  double prev = early_stop_threshold(rule, 0.0);
  for (int minute = 1; minute <= 800; ++minute) {
    double cur = early_stop_threshold(rule, minute);
    CHECK(cur <= prev + 1e-12);
    CHECK(cur >= rule.threshold_end);
    CHECK(cur <= rule.threshold_start);
    prev = cur;
  }
}

TEST_CASE("should_stop prunes strictly above the threshold") {
  EarlyStopRule rule;
  CHECK(should_stop(120.0, rule, 200.0));
  CHECK_FALSE(should_stop(4.0, rule, 10000.0));
  CHECK_FALSE(should_stop(114.0, rule, 0.0));
  CHECK_FALSE(should_stop(115.0, rule, 0.0));  // equality continues
}

TEST_CASE("sh_promote keeps the best floor(n/eta), minimum one") {
  std::vector<RungEntry> rung = {{11, 5.0, 1}, {12, 1.0, 2}, {13, 3.0, 3}};
  std::vector<std::uint64_t> survivors = sh_promote(rung, 3.0);
  REQUIRE(survivors.size() == 1);
  CHECK(survivors[0] == 12);

  // All-equal losses: earliest submission survives.
  rung = {{21, 2.0, 5}, {22, 2.0, 4}, {23, 2.0, 6}};
  survivors = sh_promote(rung, 3.0);
  REQUIRE(survivors.size() == 1);
  CHECK(survivors[0] == 22);

  // floor(2/3) = 0 is raised to one survivor.
  rung = {{31, 9.0, 1}, {32, 8.0, 2}};
  survivors = sh_promote(rung, 3.0);
  REQUIRE(survivors.size() == 1);
  CHECK(survivors[0] == 32);

  CHECK_THROWS_AS(sh_promote({}, 3.0), ConfigError);
}

TEST_CASE("sh_promote ranks failed trials last and survivors dominate") {
  std::vector<RungEntry> rung = {
      {1, 50.0, 1}, {2, std::nullopt, 2}, {3, 10.0, 3},
      {4, 30.0, 4}, {5, 20.0, 5},         {6, std::nullopt, 6},
  };
  std::vector<std::uint64_t> survivors = sh_promote(rung, 3.0);
  REQUIRE(survivors.size() == 2);
  CHECK(survivors[0] == 3);
  CHECK(survivors[1] == 5);
}
