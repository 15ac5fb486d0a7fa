#include "maskap/service.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <chrono>
#include <cstring>

namespace maskap::service {

namespace {

constexpr int kPollSliceMs = 200;
constexpr int kBodyTimeoutMs = 5000;
constexpr int kDrainQuietMs = 100;

wire::Frame error_frame(const Error& e) { return wire::make_error_frame(e.kind(), e.what()); }

[[noreturn]] void io_error(const std::string& what) {
  throw Error(ErrorKind::IoError, what + ": " + std::strerror(errno));
}

enum class ReadStatus { Ok, Closed, Timeout, Stopped };

ReadStatus read_exact(int fd, std::uint8_t* out, std::size_t n, int timeout_ms,
                      const std::atomic<bool>* stopping) {
  std::size_t got = 0;
  int waited = 0;
  while (got < n) {
    if (stopping != nullptr && stopping->load()) return ReadStatus::Stopped;
    pollfd p{fd, POLLIN, 0};
    const int rc = ::poll(&p, 1, kPollSliceMs);
    if (rc < 0) {
      if (errno == EINTR) continue;
      return ReadStatus::Closed;
    }
    if (rc == 0) {
      waited += kPollSliceMs;
      if (timeout_ms >= 0 && waited >= timeout_ms) return ReadStatus::Timeout;
      continue;
    }
    const ssize_t r = ::recv(fd, out + got, n - got, 0);
    if (r == 0) return ReadStatus::Closed;
    if (r < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      return ReadStatus::Closed;
    }
    got += static_cast<std::size_t>(r);
    waited = 0;
  }
  return ReadStatus::Ok;
}

bool write_all(int fd, ByteView bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t r = ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    sent += static_cast<std::size_t>(r);
  }
  return true;
}

/// Discards input until the peer has been quiet for a short interval.
void drain(int fd) {
  std::uint8_t sink[4096];
  for (;;) {
    pollfd p{fd, POLLIN, 0};
    if (::poll(&p, 1, kDrainQuietMs) <= 0) return;
    const ssize_t r = ::recv(fd, sink, sizeof sink, 0);
    if (r <= 0) return;
  }
}

}  // namespace

Timestamp32 system_now() {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  return Timestamp32{static_cast<std::uint32_t>(std::chrono::duration_cast<std::chrono::seconds>(now).count())};
}

ServerRole::ServerRole(registry::ServerRecordFile state, ServerPolicy policy, ClockFn clock,
                       bool replay_cache)
    : state_(std::move(state)), policy_(policy), clock_(std::move(clock)) {
  if (replay_cache) replay_cache_.emplace();
}

wire::Frame ServerRole::handle(const wire::Frame& request) {
  try {
    if (request.type != wire::MsgType::LoginRequest) {
      throw Error(ErrorKind::MalformedFrame,
                  "server role does not accept " + std::string(wire::to_string(request.type)));
    }
    const LoginRequest req = wire::decode_login_request(request.body);
    std::lock_guard lock(mutex_);
    const Timestamp32 t2 = clock_();
    ReplayCache* cache = nullptr;
    if (replay_cache_) {
      replay_cache_->prune(t2, policy_.delta_t);
      cache = &*replay_cache_;
    }
    ServerAccept acc = server_handle_login(state_.trm, state_.id, state_.loc, req, t2, policy_, cache);
    last_key_ = acc.key;
    return wire::make_frame(acc.response);
  } catch (const Error& e) {
    return error_frame(e);
  }
}

std::optional<SessionKey> ServerRole::last_key() const {
  std::lock_guard lock(mutex_);
  return last_key_;
}

RcRole::RcRole(RcState state, std::uint32_t delta_t, ClockFn clock, Persist persist)
    : state_(std::move(state)), delta_t_(delta_t), clock_(std::move(clock)), persist_(std::move(persist)) {}

wire::Frame RcRole::handle(const wire::Frame& request) {
  try {
    std::lock_guard lock(mutex_);
    const Timestamp32 now = clock_();
    switch (request.type) {
      case wire::MsgType::UpdateRequest: {
        const Bytes list = rc_handle_update(state_, wire::decode_update_request(request.body), now, delta_t_);
        return wire::make_list_payload(list);
      }
      case wire::MsgType::DbUpdateRequest: {
        RcState next = state_;
        const UserListDelta delta =
            rc_handle_db_update(next, wire::decode_db_update_request(request.body), now, delta_t_);
        if (persist_) persist_(next);
        state_ = std::move(next);
        return wire::make_user_list_delta(delta);
      }
      default:
        throw Error(ErrorKind::MalformedFrame,
                    "rc role does not accept " + std::string(wire::to_string(request.type)));
    }
  } catch (const Error& e) {
    return error_frame(e);
  }
}

RcState RcRole::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorKind::InvalidArgument, "expected host:port, got '" + std::string(text) + "'");
  }
  Endpoint ep;
  ep.host = std::string(text.substr(0, colon));
  const std::string_view port = text.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
  if (ec != std::errc{} || ptr != port.data() + port.size() || value > 65535) {
    throw Error(ErrorKind::InvalidArgument, "bad port '" + std::string(port) + "'");
  }
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

namespace {

sockaddr_in resolve(const Endpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  const std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error(ErrorKind::InvalidArgument, "not an IPv4 address: " + ep.host);
  }
  return addr;
}

}  // namespace

FrameServer::FrameServer(Endpoint bind, FrameHandler handler) : handler_(std::move(handler)) {
  const sockaddr_in addr = resolve(bind);
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) io_error("socket");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(listen_fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(listen_fd_);
    io_error("bind " + bind.host + ":" + std::to_string(bind.port));
  }
  if (::listen(listen_fd_, 16) != 0) {
    ::close(listen_fd_);
    io_error("listen");
  }
  sockaddr_in bound{};
  socklen_t len = sizeof bound;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
  port_ = ntohs(bound.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

FrameServer::~FrameServer() { stop(); }

void FrameServer::stop() {
  if (stopping_.exchange(true)) return;
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lock(conn_mutex_);
    for (int fd : connections_) ::shutdown(fd, SHUT_RDWR);
  }
  for (auto& t : workers_) {
    if (t.joinable()) t.join();
  }
  ::close(listen_fd_);
}

void FrameServer::wait() {
  while (!stopping_.load()) std::this_thread::sleep_for(std::chrono::milliseconds(kPollSliceMs));
}

void FrameServer::accept_loop() {
  while (!stopping_.load()) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, kPollSliceMs) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(conn_mutex_);
    connections_.insert(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void FrameServer::serve_connection(int fd) {
  for (;;) {
    std::uint8_t prefix[wire::kLengthPrefix];
    if (read_exact(fd, prefix, sizeof prefix, -1, &stopping_) != ReadStatus::Ok) break;
    const std::uint32_t length = get_be32(ByteView(prefix, sizeof prefix));
    wire::Frame reply;
    if (length == 0 || length > wire::kMaxFrameLength) {
      reply = wire::make_error_frame(ErrorKind::MalformedFrame,
                                     "frame length " + std::to_string(length) + " outside 1.." +
                                         std::to_string(wire::kMaxFrameLength));
      drain(fd);
    } else {
      Bytes payload(length);
      if (read_exact(fd, payload.data(), payload.size(), kBodyTimeoutMs, &stopping_) != ReadStatus::Ok) break;
      try {
        reply = handler_(wire::decode_payload(payload));
      } catch (const Error& e) {
        reply = error_frame(e);
      } catch (const std::exception& e) {
        reply = wire::make_error_frame(ErrorKind::InvalidArgument, e.what());
      }
    }
    if (!write_all(fd, wire::encode_frame(reply))) break;
  }
  std::lock_guard lock(conn_mutex_);
  connections_.erase(fd);
  ::close(fd);
}

FrameClient::FrameClient(const Endpoint& peer) {
  const sockaddr_in addr = resolve(peer);
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) io_error("socket");
  if (::connect(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0) {
    ::close(fd_);
    fd_ = -1;
    io_error("connect " + peer.host + ":" + std::to_string(peer.port));
  }
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
}

FrameClient::~FrameClient() {
  if (fd_ >= 0) ::close(fd_);
}

wire::Frame FrameClient::request(const wire::Frame& frame) {
  send_raw(wire::encode_frame(frame));
  return read_frame();
}

void FrameClient::send_raw(ByteView bytes) {
  if (!write_all(fd_, bytes)) io_error("send");
}

wire::Frame FrameClient::read_frame() {
  std::uint8_t prefix[wire::kLengthPrefix];
  if (read_exact(fd_, prefix, sizeof prefix, kBodyTimeoutMs, nullptr) != ReadStatus::Ok) {
    throw Error(ErrorKind::IoError, "no reply from peer");
  }
  const std::uint32_t length = get_be32(ByteView(prefix, sizeof prefix));
  if (length == 0 || length > wire::kMaxFrameLength) {
    throw Error(ErrorKind::MalformedFrame, "reply length " + std::to_string(length));
  }
  Bytes payload(length);
  if (read_exact(fd_, payload.data(), payload.size(), kBodyTimeoutMs, nullptr) != ReadStatus::Ok) {
    throw Error(ErrorKind::IoError, "truncated reply");
  }
  return wire::decode_payload(payload);
}

}  // namespace maskap::service
