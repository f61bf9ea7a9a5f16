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

#include "modecal/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "modecal/errors.hpp"
#include "modecal/numerics.hpp"

namespace modecal::tpe {

namespace {

double log_sum_exp(const std::vector<double>& logs) {
  double max_v = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double v : logs) sum += std::exp(v - max_v);
  return max_v + std::log(sum);
}

}  // namespace

Kde Kde::fit(const std::vector<std::vector<double>>& points, const std::vector<Interval>& bounds,
             double bandwidth_floor_fraction) {
  if (points.empty()) throw ConfigError("kde fit: need at least one support point");
  const int d = static_cast<int>(bounds.size());
  const double n = static_cast<double>(points.size());

  Kde kde;
  kde.points_ = points;
  kde.bounds_ = bounds;
  kde.bandwidths_.resize(static_cast<std::size_t>(d));

  // Scott's rule per dimension, floored at a fraction of the range so a
  // degenerate support set still yields a proper density.
  const double scott = std::pow(n, -1.0 / (static_cast<double>(d) + 4.0));
  for (int k = 0; k < d; ++k) {
    const Interval& iv = bounds[static_cast<std::size_t>(k)];
    double mean = 0.0;
    for (const auto& p : points) {
      double v = p[static_cast<std::size_t>(k)];
      if (v < iv.lower || v > iv.upper) {
        throw ConfigError("kde fit: support point outside bounds");
      }
      mean += v;
    }
    mean /= n;
    double ss = 0.0;
    for (const auto& p : points) {
      double dv = p[static_cast<std::size_t>(k)] - mean;
      ss += dv * dv;
    }
    double sd = points.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    double floor = bandwidth_floor_fraction * std::max(iv.width(), 1e-300);
    kde.bandwidths_[static_cast<std::size_t>(k)] = std::max(sd * scott, floor);
  }

  kde.log_trunc_norm_.resize(points.size(), std::vector<double>(static_cast<std::size_t>(d)));
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (int k = 0; k < d; ++k) {
      const Interval& iv = bounds[static_cast<std::size_t>(k)];
      double h = kde.bandwidths_[static_cast<std::size_t>(k)];
      double p = points[i][static_cast<std::size_t>(k)];
      double mass = normal_cdf((iv.upper - p) / h) - normal_cdf((iv.lower - p) / h);
      kde.log_trunc_norm_[i][static_cast<std::size_t>(k)] = std::log(std::max(mass, 1e-300));
    }
  }
  return kde;
}

double Kde::log_density(std::span<const double> x) const {
  const int d = dim();
  if (static_cast<int>(x.size()) != d) throw ConfigError("kde: query dimension mismatch");
  for (int k = 0; k < d; ++k) {
    const Interval& iv = bounds_[static_cast<std::size_t>(k)];
    if (x[static_cast<std::size_t>(k)] < iv.lower || x[static_cast<std::size_t>(k)] > iv.upper) {
      std::ostringstream oss;
      oss << "kde: query coordinate " << k << " = " << x[static_cast<std::size_t>(k)]
          << " outside [" << iv.lower << ", " << iv.upper << "]";
      throw ConfigError(oss.str());
    }
  }

  std::vector<double> point_logs(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) {
    double lp = 0.0;
    for (int k = 0; k < d; ++k) {
      double h = bandwidths_[static_cast<std::size_t>(k)];
      double zscore = (x[static_cast<std::size_t>(k)] - points_[i][static_cast<std::size_t>(k)]) / h;
      lp += -0.5 * zscore * zscore - std::log(h) - 0.5 * std::log(2.0 * M_PI) -
            log_trunc_norm_[i][static_cast<std::size_t>(k)];
    }
    point_logs[i] = lp;
  }
  return log_sum_exp(point_logs) - std::log(static_cast<double>(points_.size()));
}

double Kde::density(std::span<const double> x) const { return std::exp(log_density(x)); }

std::vector<double> Kde::sample(Rng& rng) const {
  std::size_t idx = static_cast<std::size_t>(rng.next_u64() % points_.size());
  std::vector<double> out(static_cast<std::size_t>(dim()));
  for (int k = 0; k < dim(); ++k) {
    const Interval& iv = bounds_[static_cast<std::size_t>(k)];
    double v = points_[idx][static_cast<std::size_t>(k)] +
               bandwidths_[static_cast<std::size_t>(k)] * rng.normal();
    out[static_cast<std::size_t>(k)] = std::clamp(v, iv.lower, iv.upper);
  }
  return out;
}

std::optional<Split> split_observations(std::vector<LabeledPoint> trials, double gamma,
                                        int min_points) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("split_observations: gamma must be in (0,1)");
  if (min_points < 1) throw ConfigError("split_observations: min_points must be >= 1");
  const int n = static_cast<int>(trials.size());
  if (n < 2 * min_points) return std::nullopt;

  std::stable_sort(trials.begin(), trials.end(),
                   [](const LabeledPoint& a, const LabeledPoint& b) { return a.loss < b.loss; });
  int n_good = std::max(min_points,
                        static_cast<int>(std::ceil(gamma * static_cast<double>(n))));
  n_good = std::min(n_good, n - min_points);  // keep min_points on the bad side too

  Split split;
  split.good.assign(trials.begin(), trials.begin() + n_good);
  split.bad.assign(trials.begin() + n_good, trials.end());
  split.split_loss = trials[static_cast<std::size_t>(n_good)].loss;
  return split;
}

KdePair fit_pair(const Split& split, const std::vector<Interval>& bounds, int budget, double gamma,
                 double bandwidth_floor_fraction) {
  std::vector<std::vector<double>> good_pts, bad_pts;
  good_pts.reserve(split.good.size());
  bad_pts.reserve(split.bad.size());
  for (const LabeledPoint& p : split.good) good_pts.push_back(p.values);
  for (const LabeledPoint& p : split.bad) bad_pts.push_back(p.values);
  return KdePair{Kde::fit(good_pts, bounds, bandwidth_floor_fraction),
                 Kde::fit(bad_pts, bounds, bandwidth_floor_fraction), budget, gamma,
                 split.split_loss};
}

std::vector<double> propose(const KdePair& pair, int n_candidates, Rng& rng) {
  if (n_candidates < 1) throw ConfigError("propose: n_candidates must be >= 1");
  std::vector<double> best;
  double best_ratio = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < n_candidates; ++c) {
    std::vector<double> candidate = pair.good.sample(rng);
    double ratio = pair.good.log_density(candidate) - pair.bad.log_density(candidate);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = std::move(candidate);
    }
  }
  return best;
}

}  // namespace modecal::tpe
