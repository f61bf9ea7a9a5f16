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
#include <cstdint>

#include "modecal/modes.hpp"

namespace modecal {

/// Percentage of trips per mode. Entries are in [0, 100] and sum to 100
/// within 1e-9; construction validates both.
class ModeShare {
 public:
  // Validates ranges and the sum-to-100 invariant; throws ConfigError.
  static ModeShare from_percentages(const ModeVector& percentages);

  // Converts per-mode counts to percentages (total must be positive).
  static ModeShare from_counts(const std::array<std::int64_t, kModeCount>& counts);

  double operator[](int mode) const { return share_[static_cast<std::size_t>(mode)]; }
  const ModeVector& values() const { return share_; }

 private:
  explicit ModeShare(const ModeVector& share) : share_(share) {}
  ModeVector share_;
};

// Sum over modes of |a_k - b_k|, in percentage points. Both shares are over
// the same canonical mode set by construction; a mode-set mismatch can only
// arise at the file boundary and is rejected when parsing.
double l1_objective(const ModeShare& result, const ModeShare& benchmark);

}  // namespace modecal
