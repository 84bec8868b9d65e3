#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "argos/kpm_codec.hpp"

namespace argos {

// Link failure or protocol violation; distinct from a clean end of stream.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bidirectional message stream between the E2 node and the xApp.
class Transport {
 public:
  virtual ~Transport() = default;

  // Throws TransportError if the link is down.
  virtual void send(const kpm::WireMessage& message) = 0;
  // nullopt when the peer closed the stream cleanly at a frame boundary.
  // Throws TransportError on link loss or an undecodable frame.
  virtual std::optional<kpm::WireMessage> receive() = 0;
  virtual void close() = 0;
};

using Connector = std::function<std::unique_ptr<Transport>()>;

// In-process duplex pipe. Messages still pass through the codec so both
// transports exercise the same wire format.
class ChannelEndpoint final : public Transport {
 public:
  void send(const kpm::WireMessage& message) override;
  std::optional<kpm::WireMessage> receive() override;
  void close() override;
  // Simulates link loss: both ends fail on their next operation.
  void sever();

 private:
  struct Queue {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<std::vector<std::uint8_t>> frames;
    bool closed = false;
    bool severed = false;
  };

  ChannelEndpoint(std::shared_ptr<Queue> inbound, std::shared_ptr<Queue> outbound)
      : inbound_(std::move(inbound)), outbound_(std::move(outbound)) {}

  std::shared_ptr<Queue> inbound_;
  std::shared_ptr<Queue> outbound_;

  friend std::pair<std::unique_ptr<ChannelEndpoint>, std::unique_ptr<ChannelEndpoint>> make_channel();
};

std::pair<std::unique_ptr<ChannelEndpoint>, std::unique_ptr<ChannelEndpoint>> make_channel();

// Length-framed TCP stream; frames are reassembled with kpm::peek_frame_size.
class TcpTransport final : public Transport {
 public:
  explicit TcpTransport(int fd) : fd_(fd) {}
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void send(const kpm::WireMessage& message) override;
  std::optional<kpm::WireMessage> receive() override;
  void close() override;

 private:
  int fd_;
  std::vector<std::uint8_t> buffer_;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// Accepts "host:port" or ":port". Throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

// Throws TransportError if the connection cannot be established.
std::unique_ptr<TcpTransport> tcp_connect(const Endpoint& endpoint);

class TcpListener {
 public:
  // Port 0 binds an ephemeral port; see port().
  explicit TcpListener(const Endpoint& endpoint);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  std::unique_ptr<TcpTransport> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace argos
