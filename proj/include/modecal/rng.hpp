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

#include <cstdint>
#include <initializer_list>

namespace modecal {

// splitmix64 step: advances the state and returns the next output word.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d9e747f642fc9dULL;
  return z ^ (z >> 31);
}

// Collapses a tuple of identifiers into one substream seed. Used everywhere a
// decision needs its own random stream keyed by (seed, ids...): the same key
// always yields the same stream, independent of call order.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x243f6a8885a308d3ULL;  // arbitrary nonzero start
  for (std::uint64_t p : parts) {
    state ^= p + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    splitmix64_next(state);
  }
  return splitmix64_next(state);
}

// Small self-contained PRNG. The distributions are hand-rolled so that the
// streams are fully specified by this code, not by the standard library
// implementation; journal replay relies on that.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64_next(state_); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal();

  // Poisson via Knuth's method; adequate for the small means used here.
  int poisson(double mean);

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// One uniform in [0,1) as a pure function of a key tuple. The simulator uses
// this for its per-(seed, agent, iteration) choice draws.
inline double keyed_uniform(std::initializer_list<std::uint64_t> key) {
  std::uint64_t s = mix_seed(key);
  return static_cast<double>(splitmix64_next(s) >> 11) * 0x1.0p-53;
}

}  // namespace modecal
