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

#include "modecal/config_space.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "modecal/errors.hpp"

namespace modecal {

ParameterSpace ParameterSpace::from_bounds(const std::array<Interval, kModeCount>& bounds) {
  for (int i = 0; i < kModeCount; ++i) {
    const Interval& iv = bounds[static_cast<std::size_t>(i)];
    if (!(iv.lower <= iv.upper) || !std::isfinite(iv.lower) || !std::isfinite(iv.upper)) {
      std::ostringstream oss;
      oss << "invalid bounds for '" << kModeNames[static_cast<std::size_t>(i)] << "': [" << iv.lower
          << ", " << iv.upper << "]";
      throw ConfigError(oss.str());
    }
  }
  return ParameterSpace(bounds);
}

ParameterSpace ParameterSpace::uniform(double lower, double upper) {
  std::array<Interval, kModeCount> bounds;
  bounds.fill(Interval{lower, upper});
  return from_bounds(bounds);
}

double ParameterSpace::clip(int mode, double value) const {
  const Interval& iv = bounds(mode);
  return std::clamp(value, iv.lower, iv.upper);
}

InterceptConfig sample_uniform(const ParameterSpace& space, Rng& rng) {
  InterceptConfig config;
  for (int i = 0; i < kModeCount; ++i) {
    const Interval& iv = space.bounds(i);
    config.values[static_cast<std::size_t>(i)] = rng.uniform(iv.lower, iv.upper);
  }
  return config;
}

ParameterSpace centered_space(const ModeVector& center, double relative_halfwidth,
                              double absolute_floor) {
  if (!(relative_halfwidth > 0.0)) {
    throw ConfigError("centered_space: relative_halfwidth must be > 0");
  }
  std::array<Interval, kModeCount> bounds;
  for (int i = 0; i < kModeCount; ++i) {
    double c = center[static_cast<std::size_t>(i)];
    double half = std::max(std::abs(c) * relative_halfwidth, absolute_floor);
    bounds[static_cast<std::size_t>(i)] = Interval{c - half, c + half};
  }
  return ParameterSpace::from_bounds(bounds);
}

ValidationReport validate(const InterceptConfig& config, const ParameterSpace& space) {
  ValidationReport report;
  for (int i = 0; i < kModeCount; ++i) {
    double v = config.values[static_cast<std::size_t>(i)];
    const Interval& iv = space.bounds(i);
    if (v < iv.lower || v > iv.upper) {
      report.violations.push_back(BoundViolation{i, v, iv});
    }
  }
  return report;
}

std::string ValidationReport::to_string() const {
  if (ok()) return "ok";
  std::ostringstream oss;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    const BoundViolation& v = violations[i];
    if (i > 0) oss << "; ";
    oss << kModeNames[static_cast<std::size_t>(v.mode)] << "=" << v.value << " outside ["
        << v.bounds.lower << ", " << v.bounds.upper << "]";
  }
  return oss.str();
}

}  // namespace modecal
