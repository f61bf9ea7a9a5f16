#include <doctest.h>

#include <cmath>

#include "modecal/errors.hpp"
#include "modecal/mnl_estimate.hpp"
#include "modecal/numerics.hpp"
#include "modecal/rng.hpp"

using namespace modecal;

namespace {

ChoiceDataset binary_counts(int chose_0, int chose_1) {
  ChoiceDataset data;
  data.n_alternatives = 2;
  data.n_features = 0;
  for (int i = 0; i < chose_0; ++i) data.observations.push_back({0, {{}, {}}});
  for (int i = 0; i < chose_1; ++i) data.observations.push_back({1, {{}, {}}});
  return data;
}

}  // namespace

TEST_CASE("balanced binary data gives a zero intercept gap") {
  BetaEstimate est = estimate_beta(binary_counts(500, 500));
  CHECK(est.intercepts[0] == 0.0);
  CHECK(std::abs(est.intercepts[1]) < 1e-8);
}

TEST_CASE("75/25 binary data recovers an intercept gap of ln 3") {
  BetaEstimate est = estimate_beta(binary_counts(2500, 7500));
  CHECK(est.intercepts[1] == doctest::Approx(std::log(3.0)).epsilon(1e-7));
  // Analytic se of the log-odds with counts n0, n1: sqrt(1/n0 + 1/n1).
  CHECK(est.intercept_se[1] == doctest::Approx(std::sqrt(1.0 / 2500 + 1.0 / 7500)).epsilon(1e-4));
  CHECK(est.log_likelihood >= static_cast<double>(10000) * std::log(0.5));
}

TEST_CASE("simulation oracle: estimates land within 3 standard errors") {
  // Generate multinomial choices through the same softmax the simulator uses,
  // then check the MLE recovers the generating coefficients.
  const int n_alt = 4;
  const int n_feat = 2;
  const std::vector<double> true_intercepts = {0.0, 0.6, -0.4, 0.2};
  const std::vector<double> true_coeffs = {-0.8, 0.5};

  Rng rng(314159);
  ChoiceDataset data;
  data.n_alternatives = n_alt;
  data.n_features = n_feat;
  for (int t = 0; t < 10000; ++t) {
    ChoiceObservation obs;
    obs.attributes.resize(n_alt);
    std::vector<double> utilities(n_alt);
    for (int j = 0; j < n_alt; ++j) {
      obs.attributes[static_cast<std::size_t>(j)].resize(n_feat);
      double u = true_intercepts[static_cast<std::size_t>(j)];
      for (int f = 0; f < n_feat; ++f) {
        double x = rng.uniform(-1.0, 1.0);
        obs.attributes[static_cast<std::size_t>(j)][static_cast<std::size_t>(f)] = x;
        u += true_coeffs[static_cast<std::size_t>(f)] * x;
      }
      utilities[static_cast<std::size_t>(j)] = u;
    }
    std::vector<double> probs = softmax(utilities);
    double u = rng.uniform();
    double cum = 0.0;
    obs.chosen = n_alt - 1;
    for (int j = 0; j < n_alt; ++j) {
      cum += probs[static_cast<std::size_t>(j)];
      if (u < cum) {
        obs.chosen = j;
        break;
      }
    }
    data.observations.push_back(std::move(obs));
  }

  BetaEstimate est = estimate_beta(data);
  for (int j = 1; j < n_alt; ++j) {
    CHECK(std::abs(est.intercepts[static_cast<std::size_t>(j)] -
                   true_intercepts[static_cast<std::size_t>(j)]) <
          3.0 * est.intercept_se[static_cast<std::size_t>(j)]);
  }
  for (int f = 0; f < n_feat; ++f) {
    CHECK(std::abs(est.coefficients[static_cast<std::size_t>(f)] -
                   true_coeffs[static_cast<std::size_t>(f)]) <
          3.0 * est.coefficient_se[static_cast<std::size_t>(f)]);
  }
}

TEST_CASE("consistency: squared error shrinks from n=1e3 to n=1e4") {
  auto mse = [](int n) {
    double total = 0.0;
    const int replicates = 20;
    for (int r = 0; r < replicates; ++r) {
      Rng rng(mix_seed({static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r)}));
      int chose_1 = 0;
      for (int i = 0; i < n; ++i) {
        if (rng.uniform() < 0.75) ++chose_1;
      }
      BetaEstimate est = estimate_beta(binary_counts(n - chose_1, chose_1));
      double err = est.intercepts[1] - std::log(3.0);
      total += err * err;
    }
    return total / replicates;
  };
  CHECK(mse(10000) < mse(1000));

  BetaEstimate small = estimate_beta(binary_counts(250, 750));
  BetaEstimate large = estimate_beta(binary_counts(2500, 7500));
  CHECK(large.intercept_se[1] < small.intercept_se[1]);
}

TEST_CASE("degenerate inputs are rejected") {
  ChoiceDataset empty;
  empty.n_alternatives = 2;
  CHECK_THROWS_AS(estimate_beta(empty), ConfigError);

  // Alternative 1 never chosen: its intercept diverges.
  CHECK_THROWS_AS(estimate_beta(binary_counts(100, 0)), NumericalError);
}

TEST_CASE("complete separation is reported as divergence") {
  // One attribute perfectly predicts the choice.
  ChoiceDataset data;
  data.n_alternatives = 2;
  data.n_features = 1;
  for (int i = 0; i < 50; ++i) {
    data.observations.push_back({0, {{1.0}, {0.0}}});
    data.observations.push_back({1, {{0.0}, {1.0}}});
  }
  CHECK_THROWS_AS(estimate_beta(data), NumericalError);
}

TEST_CASE("choices files parse and mode errors surface") {
  std::string text = R"({"n_alternatives": 2, "n_features": 0,
      "observations": [{"chosen": 0}, {"chosen": 1}, {"chosen": 1}]})";
  ChoiceDataset data = ChoiceDataset::from_json_text(text, "test");
  CHECK(data.observations.size() == 3);
  CHECK_THROWS_AS(ChoiceDataset::from_json_text("{not json", "test"), ConfigError);
}
