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

#include "modecal/registry.hpp"

#include "modecal/errors.hpp"

namespace modecal {

std::uint64_t WorkerRegistry::register_worker(const std::string& address, double now_minutes,
                                              std::optional<std::uint64_t> requested_id) {
  std::uint64_t id;
  if (requested_id) {
    auto it = workers_.find(*requested_id);
    if (it != workers_.end() && it->second.state != WorkerState::lost) {
      throw ProtocolError("worker id " + std::to_string(*requested_id) + " is already live");
    }
    id = *requested_id;
    next_id_ = std::max(next_id_, id + 1);
  } else {
    id = next_id_++;
  }
  WorkerRecord record;
  record.id = id;
  record.address = address;
  record.state = WorkerState::idle;
  record.last_heartbeat_minutes = now_minutes;
  workers_[id] = record;
  return id;
}

void WorkerRegistry::heartbeat(std::uint64_t id, double now_minutes) {
  auto it = workers_.find(id);
  if (it == workers_.end()) throw ProtocolError("heartbeat from unknown worker " + std::to_string(id));
  it->second.last_heartbeat_minutes = now_minutes;
  if (it->second.state == WorkerState::lost) {
    it->second.state = it->second.assigned_trial ? WorkerState::busy : WorkerState::idle;
  }
}

void WorkerRegistry::deregister(std::uint64_t id) { workers_.erase(id); }

void WorkerRegistry::assign(std::uint64_t id, std::uint64_t trial) {
  auto it = workers_.find(id);
  if (it == workers_.end()) throw ProtocolError("assign to unknown worker " + std::to_string(id));
  it->second.state = WorkerState::busy;
  it->second.assigned_trial = trial;
}

void WorkerRegistry::release(std::uint64_t id) {
  auto it = workers_.find(id);
  if (it == workers_.end()) return;
  it->second.state = WorkerState::idle;
  it->second.assigned_trial.reset();
}

std::vector<std::uint64_t> WorkerRegistry::reap(double now_minutes) {
  std::vector<std::uint64_t> orphaned;
  for (auto& [id, record] : workers_) {
    if (record.state == WorkerState::lost) continue;
    if (now_minutes - record.last_heartbeat_minutes > timeout_minutes_) {
      record.state = WorkerState::lost;
      if (record.assigned_trial) {
        orphaned.push_back(*record.assigned_trial);
        record.assigned_trial.reset();
      }
    }
  }
  return orphaned;
}

const WorkerRecord* WorkerRegistry::find(std::uint64_t id) const {
  auto it = workers_.find(id);
  return it == workers_.end() ? nullptr : &it->second;
}

bool WorkerRegistry::is_live(std::uint64_t id) const {
  const WorkerRecord* record = find(id);
  return record != nullptr && record->state != WorkerState::lost;
}

int WorkerRegistry::busy_count() const {
  int n = 0;
  for (const auto& [id, record] : workers_) {
    if (record.state == WorkerState::busy) ++n;
  }
  return n;
}

int WorkerRegistry::live_count() const {
  int n = 0;
  for (const auto& [id, record] : workers_) {
    if (record.state != WorkerState::lost) ++n;
  }
  return n;
}

}  // namespace modecal
