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
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace modecal {

enum class WorkerState { idle, busy, lost };

struct WorkerRecord {
  std::uint64_t id = 0;
  std::string address;
  WorkerState state = WorkerState::idle;
  double last_heartbeat_minutes = 0.0;
  std::optional<std::uint64_t> assigned_trial;
};

/// Worker bookkeeping: registration, heartbeats, and loss detection. Not
/// thread-safe by itself; the coordinator serializes access.
class WorkerRegistry {
 public:
  explicit WorkerRegistry(double heartbeat_timeout_minutes)
      : timeout_minutes_(heartbeat_timeout_minutes) {}

  // Assigns a fresh id. A requested id that is still live is rejected with
  // ProtocolError; a lost or unknown requested id re-registers under it.
  std::uint64_t register_worker(const std::string& address, double now_minutes,
                                std::optional<std::uint64_t> requested_id = std::nullopt);

  // Throws ProtocolError for unknown ids; revives a lost worker to idle.
  void heartbeat(std::uint64_t id, double now_minutes);

  void deregister(std::uint64_t id);

  void assign(std::uint64_t id, std::uint64_t trial);
  void release(std::uint64_t id);  // busy -> idle

  // Marks workers silent past the timeout as lost; returns the trials their
  // jobs should be re-queued for.
  std::vector<std::uint64_t> reap(double now_minutes);

  const WorkerRecord* find(std::uint64_t id) const;
  bool is_live(std::uint64_t id) const;
  int busy_count() const;
  int live_count() const;

 private:
  double timeout_minutes_;
  std::uint64_t next_id_ = 1;
  std::map<std::uint64_t, WorkerRecord> workers_;
};

}  // namespace modecal
