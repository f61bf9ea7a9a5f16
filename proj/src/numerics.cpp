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

#include "modecal/numerics.hpp"

#include <algorithm>
#include <cassert>

namespace modecal {

void softmax_into(std::span<const double> values, std::span<double> out) {
  assert(values.size() == out.size() && !values.empty());
  double max_v = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp(values[i] - max_v);
    sum += out[i];
  }
  for (std::size_t i = 0; i < values.size(); ++i) out[i] /= sum;
}

std::vector<double> softmax(std::span<const double> values) {
  std::vector<double> out(values.size());
  softmax_into(values, out);
  return out;
}

}  // namespace modecal
