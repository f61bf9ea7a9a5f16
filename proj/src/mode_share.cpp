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

#include "modecal/mode_share.hpp"

#include <cmath>
#include <string>

#include "modecal/errors.hpp"

namespace modecal {

std::optional<int> mode_index(std::string_view name) {
  for (int i = 0; i < kModeCount; ++i) {
    if (kModeNames[static_cast<std::size_t>(i)] == name) return i;
  }
  return std::nullopt;
}

ModeShare ModeShare::from_percentages(const ModeVector& percentages) {
  double sum = 0.0;
  for (int i = 0; i < kModeCount; ++i) {
    double v = percentages[static_cast<std::size_t>(i)];
    if (!(v >= 0.0 && v <= 100.0)) {
      throw ConfigError("mode share for '" + std::string(kModeNames[static_cast<std::size_t>(i)]) +
                        "' out of [0, 100]: " + std::to_string(v));
    }
    sum += v;
  }
  if (std::abs(sum - 100.0) > 1e-9) {
    throw ConfigError("mode shares must sum to 100, got " + std::to_string(sum));
  }
  return ModeShare(percentages);
}

ModeShare ModeShare::from_counts(const std::array<std::int64_t, kModeCount>& counts) {
  std::int64_t total = 0;
  for (std::int64_t c : counts) total += c;
  if (total <= 0) throw ConfigError("mode share from counts: total must be positive");
  ModeVector share{};
  for (int i = 0; i < kModeCount; ++i) {
    share[static_cast<std::size_t>(i)] =
        100.0 * static_cast<double>(counts[static_cast<std::size_t>(i)]) / static_cast<double>(total);
  }
  return ModeShare(share);
}

double l1_objective(const ModeShare& result, const ModeShare& benchmark) {
  double sum = 0.0;
  for (int i = 0; i < kModeCount; ++i) sum += std::abs(result[i] - benchmark[i]);
  return sum;
}

}  // namespace modecal
