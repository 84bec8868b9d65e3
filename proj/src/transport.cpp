#include "argos/transport.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "argos/errors.hpp"
#include "argos/text_util.hpp"

namespace argos {

namespace {

kpm::WireMessage decode_frame(std::span<const std::uint8_t> frame) {
  const auto result = kpm::decode(frame);
  if (!result) throw TransportError("undecodable frame: " + result.error().message());
  return result.value().message;
}

constexpr std::size_t kMaxFrameBytes = std::size_t{4} << 20;

std::string errno_text(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

}  // namespace

void ChannelEndpoint::send(const kpm::WireMessage& message) {
  auto frame = kpm::encode(message);
  std::lock_guard lock(outbound_->mutex);
  if (outbound_->severed) throw TransportError("channel severed");
  if (outbound_->closed) throw TransportError("channel closed by peer");
  outbound_->frames.push_back(std::move(frame));
  outbound_->ready.notify_all();
}

std::optional<kpm::WireMessage> ChannelEndpoint::receive() {
  std::unique_lock lock(inbound_->mutex);
  inbound_->ready.wait(lock, [&] { return !inbound_->frames.empty() || inbound_->closed || inbound_->severed; });
  if (inbound_->severed) throw TransportError("channel severed");
  if (inbound_->frames.empty()) return std::nullopt;
  const auto frame = std::move(inbound_->frames.front());
  inbound_->frames.pop_front();
  lock.unlock();
  return decode_frame(frame);
}

void ChannelEndpoint::close() {
  for (auto* q : {outbound_.get(), inbound_.get()}) {
    std::lock_guard lock(q->mutex);
    q->closed = true;
    q->ready.notify_all();
  }
}

void ChannelEndpoint::sever() {
  for (auto* q : {outbound_.get(), inbound_.get()}) {
    std::lock_guard lock(q->mutex);
    q->severed = true;
    q->ready.notify_all();
  }
}

std::pair<std::unique_ptr<ChannelEndpoint>, std::unique_ptr<ChannelEndpoint>> make_channel() {
  auto a_to_b = std::make_shared<ChannelEndpoint::Queue>();
  auto b_to_a = std::make_shared<ChannelEndpoint::Queue>();
  std::unique_ptr<ChannelEndpoint> a(new ChannelEndpoint(b_to_a, a_to_b));
  std::unique_ptr<ChannelEndpoint> b(new ChannelEndpoint(a_to_b, b_to_a));
  return {std::move(a), std::move(b)};
}

TcpTransport::~TcpTransport() { close(); }

void TcpTransport::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

void TcpTransport::send(const kpm::WireMessage& message) {
  if (fd_ < 0) throw TransportError("socket closed");
  const auto frame = kpm::encode(message);
  std::size_t sent = 0;
  while (sent < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + sent, frame.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("send"));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::optional<kpm::WireMessage> TcpTransport::receive() {
  if (fd_ < 0) throw TransportError("socket closed");
  std::uint8_t chunk[4096];
  while (true) {
    const std::size_t need = kpm::peek_frame_size(buffer_);
    if (need != 0 && buffer_.size() >= need) {
      std::vector<std::uint8_t> frame(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(need));
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(need));
      return decode_frame(frame);
    }
    if (need != 0) {
      // Reject a bad header before buffering the payload it announces.
      const auto probe = kpm::decode(buffer_);
      if (!probe && probe.error().kind != kpm::DecodeErrorKind::Truncated) {
        throw TransportError("invalid frame header: " + probe.error().message());
      }
      if (need > kMaxFrameBytes) throw TransportError("frame of " + std::to_string(need) + " bytes exceeds limit");
    }
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_text("recv"));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      throw TransportError("connection closed mid-frame");
    }
    buffer_.insert(buffer_.end(), chunk, chunk + n);
  }
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("endpoint must be host:port, got '" + text + "'");
  Endpoint ep;
  const std::string host(trim(std::string_view(text).substr(0, colon)));
  if (!host.empty()) ep.host = host;
  const auto port = parse_integer<std::uint16_t>(std::string_view(text).substr(colon + 1));
  if (!port) throw ConfigError("invalid port in '" + text + "'");
  ep.port = *port;
  return ep;
}

namespace {

addrinfo* resolve(const Endpoint& endpoint, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* result = nullptr;
  const std::string port = std::to_string(endpoint.port);
  const int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result);
  if (rc != 0) throw TransportError("cannot resolve " + endpoint.host + ": " + ::gai_strerror(rc));
  return result;
}

}  // namespace

std::unique_ptr<TcpTransport> tcp_connect(const Endpoint& endpoint) {
  addrinfo* info = resolve(endpoint, false);
  int fd = -1;
  for (auto* ai = info; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(info);
  if (fd < 0) throw TransportError("cannot connect to " + endpoint.host + ":" + std::to_string(endpoint.port));
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return std::make_unique<TcpTransport>(fd);
}

TcpListener::TcpListener(const Endpoint& endpoint) {
  addrinfo* info = resolve(endpoint, true);
  fd_ = ::socket(info->ai_family, info->ai_socktype, info->ai_protocol);
  if (fd_ < 0) {
    ::freeaddrinfo(info);
    throw TransportError(errno_text("socket"));
  }
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  const bool bound = ::bind(fd_, info->ai_addr, info->ai_addrlen) == 0;
  ::freeaddrinfo(info);
  if (!bound || ::listen(fd_, 4) != 0) {
    const std::string err = errno_text("bind/listen");
    ::close(fd_);
    throw TransportError(err);
  }
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<TcpTransport> TcpListener::accept() {
  while (true) {
    const int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return std::make_unique<TcpTransport>(fd);
    }
    if (errno != EINTR) throw TransportError(errno_text("accept"));
  }
}

}  // namespace argos
