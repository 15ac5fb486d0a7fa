#pragma once

// Loopback request/response service speaking the binary frame format. Each
// role owns one state instance and serializes every access to it; the
// transport runs one thread per connection.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "maskap/protocol.hpp"
#include "maskap/registry.hpp"
#include "maskap/wire.hpp"

namespace maskap::service {

using ClockFn = std::function<Timestamp32()>;

/// Host wall clock, seconds since the epoch truncated to 32 bits.
Timestamp32 system_now();

using FrameHandler = std::function<wire::Frame(const wire::Frame&)>;

/// Answers LoginRequest frames for one server identity.
class ServerRole {
 public:
  ServerRole(registry::ServerRecordFile state, ServerPolicy policy, ClockFn clock,
             bool replay_cache = false);

  wire::Frame handle(const wire::Frame& request);
  /// Key derived by the most recent accepted login.
  std::optional<SessionKey> last_key() const;

 private:
  mutable std::mutex mutex_;
  registry::ServerRecordFile state_;
  ServerPolicy policy_;
  ClockFn clock_;
  std::optional<ReplayCache> replay_cache_;
  std::optional<SessionKey> last_key_;
};

/// Answers card-update and server-sync frames. Trusted-channel endpoints.
class RcRole {
 public:
  using Persist = std::function<void(const RcState&)>;

  RcRole(RcState state, std::uint32_t delta_t, ClockFn clock, Persist persist = {});

  wire::Frame handle(const wire::Frame& request);
  RcState snapshot() const;

 private:
  mutable std::mutex mutex_;
  RcState state_;
  std::uint32_t delta_t_;
  ClockFn clock_;
  Persist persist_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

/// "host:port"; InvalidArgument when malformed.
Endpoint parse_endpoint(std::string_view text);

class FrameServer {
 public:
  FrameServer(Endpoint bind, FrameHandler handler);
  ~FrameServer();
  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  /// Bound port; differs from the requested one when that was 0.
  std::uint16_t port() const noexcept { return port_; }
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

 private:
  void accept_loop();
  void serve_connection(int fd);

  FrameHandler handler_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex conn_mutex_;
  std::set<int> connections_;
  std::vector<std::thread> workers_;
  std::thread acceptor_;
};

class FrameClient {
 public:
  explicit FrameClient(const Endpoint& peer);
  ~FrameClient();
  FrameClient(const FrameClient&) = delete;
  FrameClient& operator=(const FrameClient&) = delete;

  wire::Frame request(const wire::Frame& frame);
  void send_raw(ByteView bytes);
  wire::Frame read_frame();

 private:
  int fd_ = -1;
};

}  // namespace maskap::service
