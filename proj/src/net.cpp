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

#include "modecal/net.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <iostream>

#include <nlohmann/json.hpp>

#include "modecal/errors.hpp"

namespace modecal {

namespace {

using nlohmann::json;

void write_all(int fd, const void* data, std::size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    ssize_t n = ::send(fd, p, len, MSG_NOSIGNAL);
    if (n <= 0) throw ProtocolError("send failed: " + std::string(std::strerror(errno)));
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

// Returns false on clean EOF at a frame boundary.
bool read_all(int fd, void* data, std::size_t len, bool eof_ok) {
  char* p = static_cast<char*>(data);
  std::size_t got = 0;
  while (got < len) {
    ssize_t n = ::recv(fd, p + got, len - got, 0);
    if (n == 0) {
      if (got == 0 && eof_ok) return false;
      throw ProtocolError("connection closed mid-frame");
    }
    if (n < 0) throw ProtocolError("recv failed: " + std::string(std::strerror(errno)));
    got += static_cast<std::size_t>(n);
  }
  return true;
}

constexpr std::uint32_t kMaxFrame = 64u * 1024u * 1024u;

json parse_frame(const std::string& payload) {
  try {
    return json::parse(payload);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("bad frame: ") + e.what());
  }
}

}  // namespace

TcpStream::~TcpStream() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpStream::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res);
  if (rc != 0) throw ProtocolError("cannot resolve " + host + ": " + gai_strerror(rc));
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw ProtocolError("cannot connect to " + host + ":" + service);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

void TcpStream::send_frame(const std::string& payload) {
  if (payload.size() > kMaxFrame) throw ProtocolError("frame too large");
  std::uint32_t len = htonl(static_cast<std::uint32_t>(payload.size()));
  write_all(fd_, &len, sizeof(len));
  write_all(fd_, payload.data(), payload.size());
}

std::optional<std::string> TcpStream::recv_frame() {
  std::uint32_t len_be = 0;
  if (!read_all(fd_, &len_be, sizeof(len_be), /*eof_ok=*/true)) return std::nullopt;
  std::uint32_t len = ntohl(len_be);
  if (len > kMaxFrame) throw ProtocolError("frame too large");
  std::string payload(len, '\0');
  read_all(fd_, payload.data(), len, /*eof_ok=*/false);
  return payload;
}

TcpListener::TcpListener(std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw ProtocolError("cannot create listener socket");
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw ProtocolError("cannot bind port " + std::to_string(port) + ": " +
                        std::strerror(errno));
  }
  if (::listen(fd_, 64) != 0) throw ProtocolError("listen failed");
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<TcpStream> TcpListener::accept() {
  int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) return std::nullopt;
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return TcpStream(fd);
}

MasterServer::MasterServer(Coordinator& coordinator, std::uint16_t port)
    : coordinator_(coordinator), listener_(port) {
  accept_thread_ = std::thread([this] {
    while (!stopping_.load()) {
      std::optional<TcpStream> stream = listener_.accept();
      if (!stream) break;
      std::lock_guard lock(connections_mutex_);
      connections_.emplace_back(
          [this, s = std::make_shared<TcpStream>(std::move(*stream))]() mutable {
            serve(std::move(*s));
          });
    }
  });
  reaper_thread_ = std::thread([this] {
    while (!stopping_.load()) {
      std::this_thread::sleep_for(std::chrono::seconds(1));
      if (stopping_.load()) break;
      coordinator_.reap();
    }
  });
}

MasterServer::~MasterServer() { stop(); }

void MasterServer::stop() {
  bool expected = false;
  if (!stopping_.compare_exchange_strong(expected, true)) return;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  if (reaper_thread_.joinable()) reaper_thread_.join();
  std::lock_guard lock(connections_mutex_);
  for (std::thread& t : connections_) {
    if (t.joinable()) t.join();
  }
  connections_.clear();
}

void MasterServer::serve(TcpStream stream) {
  while (true) {
    std::optional<std::string> frame;
    try {
      frame = stream.recv_frame();
    } catch (const ProtocolError&) {
      return;  // dropped connection; the reaper reclaims any job
    }
    if (!frame) return;

    json reply;
    try {
      json msg = parse_frame(*frame);
      std::string op = msg.value("op", "");
      reply["ok"] = true;
      if (op == "register") {
        std::optional<std::uint64_t> requested;
        if (msg.contains("worker")) requested = msg["worker"].get<std::uint64_t>();
        reply["worker"] =
            coordinator_.register_worker_with_id(msg.value("address", "remote"), requested);
      } else if (op == "run_info") {
        RunInfo info = coordinator_.run_info();
        reply["scenario"] = info.scenario_text;
        reply["check_iteration"] = info.check_iteration;
        if (info.benchmark_override) {
          json b = json::object();
          for (int m = 0; m < kModeCount; ++m) {
            b[std::string(kModeNames[static_cast<std::size_t>(m)])] =
                (*info.benchmark_override)[static_cast<std::size_t>(m)];
          }
          reply["benchmark_override"] = b;
        }
      } else if (op == "heartbeat") {
        coordinator_.heartbeat(msg.at("worker").get<std::uint64_t>());
      } else if (op == "deregister") {
        coordinator_.deregister(msg.at("worker").get<std::uint64_t>());
      } else if (op == "request_job") {
        JobAssignment a = coordinator_.request_job(msg.at("worker").get<std::uint64_t>());
        if (a.kind == JobAssignment::Kind::job) {
          reply["kind"] = "job";
          reply["trial"] = a.job.trial_id;
          reply["config"] = a.job.config_id;
          reply["budget"] = a.job.budget;
          reply["sim_seed"] = a.job.sim_seed;
          json values = json::object();
          for (int m = 0; m < kModeCount; ++m) {
            values[std::string(kModeNames[static_cast<std::size_t>(m)])] =
                a.job.values[static_cast<std::size_t>(m)];
          }
          reply["values"] = values;
        } else {
          reply["kind"] = a.kind == JobAssignment::Kind::wait ? "wait" : "shutdown";
        }
      } else if (op == "intermediate") {
        PruneDecision d = coordinator_.report_intermediate(
            msg.at("worker").get<std::uint64_t>(), msg.at("trial").get<std::uint64_t>(),
            msg.at("iteration").get<int>(), msg.at("l1").get<double>());
        reply["decision"] = d == PruneDecision::prune ? "prune" : "continue";
      } else if (op == "result") {
        std::optional<double> loss;
        if (msg.contains("loss") && !msg["loss"].is_null()) loss = msg["loss"].get<double>();
        coordinator_.submit_result(msg.at("worker").get<std::uint64_t>(),
                                   msg.at("trial").get<std::uint64_t>(),
                                   trial_status_from_string(msg.at("status").get<std::string>()),
                                   loss, msg.value("iterations_run", 0));
      } else {
        throw ProtocolError("unknown op '" + op + "'");
      }
    } catch (const std::exception& e) {
      reply = json{{"ok", false}, {"error", e.what()}};
    }

    try {
      stream.send_frame(reply.dump());
    } catch (const ProtocolError&) {
      return;
    }
  }
}

RemoteMaster::RemoteMaster(const std::string& host, std::uint16_t port)
    : host_(host), port_(port) {}

std::string RemoteMaster::round_trip(const std::string& request) {
  std::lock_guard lock(mutex_);
  if (!stream_) stream_.emplace(TcpStream::connect(host_, port_));
  stream_->send_frame(request);
  std::optional<std::string> reply = stream_->recv_frame();
  if (!reply) throw ProtocolError("master closed the connection");
  return *reply;
}

namespace {

json checked_reply(const std::string& payload) {
  json j = parse_frame(payload);
  if (!j.value("ok", false)) {
    throw ProtocolError("master error: " + j.value("error", "unknown"));
  }
  return j;
}

}  // namespace

std::uint64_t RemoteMaster::register_worker(const std::string& address) {
  json req{{"op", "register"}, {"address", address}};
  return checked_reply(round_trip(req.dump())).at("worker").get<std::uint64_t>();
}

void RemoteMaster::heartbeat(std::uint64_t worker) {
  json req{{"op", "heartbeat"}, {"worker", worker}};
  checked_reply(round_trip(req.dump()));
}

void RemoteMaster::deregister(std::uint64_t worker) {
  json req{{"op", "deregister"}, {"worker", worker}};
  checked_reply(round_trip(req.dump()));
}

RunInfo RemoteMaster::run_info() {
  json req{{"op", "run_info"}};
  json j = checked_reply(round_trip(req.dump()));
  RunInfo info;
  info.scenario_text = j.at("scenario").get<std::string>();
  info.check_iteration = j.at("check_iteration").get<int>();
  if (j.contains("benchmark_override")) {
    ModeVector b{};
    for (const auto& [name, v] : j["benchmark_override"].items()) {
      std::optional<int> m = mode_index(name);
      if (!m) throw ProtocolError("bad benchmark override mode: " + name);
      b[static_cast<std::size_t>(*m)] = v.get<double>();
    }
    info.benchmark_override = b;
  }
  return info;
}

JobAssignment RemoteMaster::request_job(std::uint64_t worker) {
  json req{{"op", "request_job"}, {"worker", worker}};
  json j = checked_reply(round_trip(req.dump()));
  std::string kind = j.at("kind").get<std::string>();
  JobAssignment a;
  if (kind == "wait") {
    a.kind = JobAssignment::Kind::wait;
  } else if (kind == "shutdown") {
    a.kind = JobAssignment::Kind::shutdown;
  } else {
    a.kind = JobAssignment::Kind::job;
    a.job.trial_id = j.at("trial").get<std::uint64_t>();
    a.job.config_id = j.at("config").get<std::uint64_t>();
    a.job.budget = j.at("budget").get<int>();
    a.job.sim_seed = j.at("sim_seed").get<std::uint64_t>();
    for (const auto& [name, v] : j.at("values").items()) {
      std::optional<int> m = mode_index(name);
      if (!m) throw ProtocolError("bad mode in job values: " + name);
      a.job.values[static_cast<std::size_t>(*m)] = v.get<double>();
    }
  }
  return a;
}

PruneDecision RemoteMaster::report_intermediate(std::uint64_t worker, std::uint64_t trial,
                                                int iteration, double l1) {
  json req{{"op", "intermediate"}, {"worker", worker}, {"trial", trial}, {"iteration", iteration},
           {"l1", l1}};
  json j = checked_reply(round_trip(req.dump()));
  return j.at("decision").get<std::string>() == "prune" ? PruneDecision::prune
                                                        : PruneDecision::keep_going;
}

void RemoteMaster::submit_result(std::uint64_t worker, std::uint64_t trial, TrialStatus status,
                                 std::optional<double> loss, int iterations_run) {
  json req{{"op", "result"},
           {"worker", worker},
           {"trial", trial},
           {"status", to_string(status)},
           {"iterations_run", iterations_run}};
  if (loss) {
    req["loss"] = *loss;
  } else {
    req["loss"] = nullptr;
  }
  checked_reply(round_trip(req.dump()));
}

}  // namespace modecal
