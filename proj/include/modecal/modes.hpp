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

#include <array>
#include <optional>
#include <string_view>

namespace modecal {

// The fixed set of transportation modes, in canonical order. Every 8-vector
// in the project (intercepts, shares, bounds) is indexed by this order.
inline constexpr int kModeCount = 8;

inline constexpr std::array<std::string_view, kModeCount> kModeNames = {
    "bike",
    "car",
    "drive-transit",
    "ride-hail",
    "ride-hail-pooled",
    "ride-hail-transit",
    "walk",
    "walk-transit",
};

inline constexpr int kCarMode = 1;  // the mode congestion feedback acts on

std::optional<int> mode_index(std::string_view name);

using ModeVector = std::array<double, kModeCount>;

}  // namespace modecal
