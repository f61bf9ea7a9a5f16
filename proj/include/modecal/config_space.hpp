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
#include <string>
#include <vector>

#include "modecal/modes.hpp"
#include "modecal/rng.hpp"

namespace modecal {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  double width() const { return upper - lower; }
};

/// The 8-dimensional box of per-mode intercept bounds. Intervals are closed;
/// point intervals (lower == upper) are allowed so degenerate spaces stay
/// expressible.
class ParameterSpace {
 public:
  // Throws ConfigError if any interval has lower > upper.
  static ParameterSpace from_bounds(const std::array<Interval, kModeCount>& bounds);

  // Uniform box [lower, upper]^8.
  static ParameterSpace uniform(double lower, double upper);

  const Interval& bounds(int mode) const { return bounds_[static_cast<std::size_t>(mode)]; }
  const std::array<Interval, kModeCount>& all_bounds() const { return bounds_; }

  double clip(int mode, double value) const;

 private:
  explicit ParameterSpace(const std::array<Interval, kModeCount>& bounds) : bounds_(bounds) {}
  std::array<Interval, kModeCount> bounds_;
};

/// One candidate intercept vector. `id` is assigned by whoever owns the run
/// bookkeeping (0 until then).
struct InterceptConfig {
  std::uint64_t id = 0;
  ModeVector values{};
};

// Each coordinate uniform in its closed bounds; deterministic for a fixed rng
// state.
InterceptConfig sample_uniform(const ParameterSpace& space, Rng& rng);

// Bounds center_k +/- max(|center_k| * relative_halfwidth, absolute_floor).
// The floor keeps dimensions with a zero center from collapsing to a point.
ParameterSpace centered_space(const ModeVector& center, double relative_halfwidth,
                              double absolute_floor);

struct BoundViolation {
  int mode = 0;
  double value = 0.0;
  Interval bounds;
};

struct ValidationReport {
  std::vector<BoundViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

// Reports every out-of-bounds coordinate; bounds are closed, so values at a
// bound pass.
ValidationReport validate(const InterceptConfig& config, const ParameterSpace& space);

}  // namespace modecal
