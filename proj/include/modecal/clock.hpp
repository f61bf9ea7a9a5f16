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

#include <atomic>
#include <chrono>
#include <memory>

namespace modecal {

// Elapsed run time in minutes. The early-stop rule reads this; tests inject a
// virtual clock so minute-scale rules run in milliseconds.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now_minutes() const = 0;
  // Advances virtual time; a no-op on the wall clock.
  virtual void advance_minutes(double) {}
};

class WallClock final : public Clock {
 public:
  WallClock() : start_(std::chrono::steady_clock::now()) {}
  double now_minutes() const override {
    auto elapsed = std::chrono::steady_clock::now() - start_;
    return std::chrono::duration<double>(elapsed).count() / 60.0;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

class VirtualClock final : public Clock {
 public:
  double now_minutes() const override { return minutes_.load(std::memory_order_relaxed); }
  void advance_minutes(double minutes) override {
    double cur = minutes_.load(std::memory_order_relaxed);
    while (!minutes_.compare_exchange_weak(cur, cur + minutes, std::memory_order_relaxed)) {
    }
  }
  void set_minutes(double minutes) { minutes_.store(minutes, std::memory_order_relaxed); }

 private:
  std::atomic<double> minutes_{0.0};
};

}  // namespace modecal
