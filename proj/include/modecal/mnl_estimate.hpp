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

#include <filesystem>
#include <string>
#include <vector>

namespace modecal {

// One observed choice: which alternative was picked, plus the exogenous
// attribute vector of every alternative (attributes[alt][feature]).
struct ChoiceObservation {
  int chosen = 0;
  std::vector<std::vector<double>> attributes;
};

struct ChoiceDataset {
  int n_alternatives = 2;
  int n_features = 0;  // shared-coefficient features per alternative
  std::vector<ChoiceObservation> observations;

  static ChoiceDataset from_json_file(const std::filesystem::path& path);
  static ChoiceDataset from_json_text(const std::string& text, const std::string& origin);
};

struct BetaEstimate {
  // intercepts[reference] is pinned to 0; standard errors likewise.
  std::vector<double> intercepts;
  std::vector<double> intercept_se;
  std::vector<double> coefficients;
  std::vector<double> coefficient_se;
  double log_likelihood = 0.0;
  int iterations = 0;

  std::string to_string() const;
};

/// Multinomial-logit maximum likelihood via Newton ascent with step halving.
/// Converges when the gradient infinity-norm drops below 1e-8. Throws
/// ConfigError on empty data, NumericalError when the estimate diverges
/// (complete separation, or an alternative that is never chosen).
BetaEstimate estimate_beta(const ChoiceDataset& data, int reference = 0);

}  // namespace modecal
