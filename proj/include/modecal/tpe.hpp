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

#include <optional>
#include <span>
#include <vector>

#include "modecal/config_space.hpp"
#include "modecal/rng.hpp"

namespace modecal::tpe {

/// Product-of-1D-Gaussians kernel density over a bounded box. Each dimension
/// gets a Scott-rule bandwidth floored at a fraction of the dimension range,
/// and each 1-D kernel is truncated and renormalized to its bounds, so the
/// density integrates to one over the box.
class Kde {
 public:
  // points: support set, one inner vector per point, all within bounds.
  // bandwidth_floor_fraction: h_min as a fraction of each dimension's range.
  static Kde fit(const std::vector<std::vector<double>>& points,
                 const std::vector<Interval>& bounds, double bandwidth_floor_fraction);

  // Strictly positive inside bounds; throws ConfigError for out-of-bounds x.
  double density(std::span<const double> x) const;
  double log_density(std::span<const double> x) const;

  // Kernel draw: uniform support point, per-dimension Gaussian perturbation
  // by that dimension's bandwidth, clipped to bounds.
  std::vector<double> sample(Rng& rng) const;

  const std::vector<double>& bandwidths() const { return bandwidths_; }
  int dim() const { return static_cast<int>(bounds_.size()); }
  int support_size() const { return static_cast<int>(points_.size()); }

 private:
  std::vector<std::vector<double>> points_;
  std::vector<Interval> bounds_;
  std::vector<double> bandwidths_;
  // Per point, per dim: log of the truncated kernel's normalizer.
  std::vector<std::vector<double>> log_trunc_norm_;
};

struct KdePair {
  Kde good;  // l(x): density of the best-gamma fraction
  Kde bad;   // g(x): density of the rest
  int budget = 0;
  double gamma = 0.0;
  double split_loss = 0.0;  // loss separating the two sets
};

struct LabeledPoint {
  std::vector<double> values;
  double loss = 0.0;
};

struct Split {
  std::vector<LabeledPoint> good;
  std::vector<LabeledPoint> bad;
  double split_loss = 0.0;
};

// Sorts by loss ascending and takes max(min_points, ceil(gamma * n)) into the
// good set; the boundary observation goes to bad. Returns nullopt (model not
// ready) when fewer than 2 * min_points observations exist; callers fall back
// to random sampling.
std::optional<Split> split_observations(std::vector<LabeledPoint> trials, double gamma,
                                        int min_points);

// Fits both densities of a ready split.
KdePair fit_pair(const Split& split, const std::vector<Interval>& bounds, int budget, double gamma,
                 double bandwidth_floor_fraction);

// Draws n_candidates from the good density and returns the candidate with the
// highest density ratio l(x)/g(x) (computed as log l - log g). Deterministic
// given the rng state.
std::vector<double> propose(const KdePair& pair, int n_candidates, Rng& rng);

}  // namespace modecal::tpe
