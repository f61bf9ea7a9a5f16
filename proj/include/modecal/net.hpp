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
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "modecal/coordinator.hpp"

namespace modecal {

// Length-prefixed JSON framing over a connected TCP socket (4-byte big-endian
// length, then the UTF-8 payload).
class TcpStream {
 public:
  explicit TcpStream(int fd) : fd_(fd) {}
  TcpStream(TcpStream&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  TcpStream& operator=(TcpStream&&) = delete;
  TcpStream(const TcpStream&) = delete;
  ~TcpStream();

  static TcpStream connect(const std::string& host, std::uint16_t port);

  void send_frame(const std::string& payload);
  // nullopt on orderly EOF; throws ProtocolError on partial frames.
  std::optional<std::string> recv_frame();

  void shutdown();

 private:
  int fd_ = -1;
};

class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port);  // 0 picks an ephemeral port
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  // nullopt once the listener is closed.
  std::optional<TcpStream> accept();
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

/// Serves a Coordinator to remote workers: one thread per connection, each
/// request handled under the coordinator's own serialization. Also ticks the
/// heartbeat reaper once a second.
class MasterServer {
 public:
  MasterServer(Coordinator& coordinator, std::uint16_t port);
  ~MasterServer();

  std::uint16_t port() const { return listener_.port(); }
  void stop();

 private:
  void serve(TcpStream stream);

  Coordinator& coordinator_;
  TcpListener listener_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::thread reaper_thread_;
  std::vector<std::thread> connections_;
  std::mutex connections_mutex_;
};

/// Worker-side endpoint speaking the wire protocol to a remote master. One
/// connection per endpoint; calls are serialized by the owning worker loop
/// (plus its heartbeat thread, which gets its own connection).
class RemoteMaster final : public MasterEndpoint {
 public:
  RemoteMaster(const std::string& host, std::uint16_t port);

  std::uint64_t register_worker(const std::string& address) override;
  void heartbeat(std::uint64_t worker) override;
  void deregister(std::uint64_t worker) override;
  RunInfo run_info() override;
  JobAssignment request_job(std::uint64_t worker) override;
  PruneDecision report_intermediate(std::uint64_t worker, std::uint64_t trial, int iteration,
                                    double l1) override;
  void submit_result(std::uint64_t worker, std::uint64_t trial, TrialStatus status,
                     std::optional<double> loss, int iterations_run) override;

 private:
  std::string round_trip(const std::string& request);

  std::string host_;
  std::uint16_t port_;
  std::mutex mutex_;
  std::optional<TcpStream> stream_;
};

}  // namespace modecal
