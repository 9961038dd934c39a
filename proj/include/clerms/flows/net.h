#pragma once

#include "clerms/flows/protocol.h"

#include <cstdint>
#include <optional>
#include <string>

namespace clerms::flows {

// Owning TCP socket.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void shutdown();

  void send_all(std::span<const std::uint8_t> data);  // IoFailure
  // 0 on orderly close.
  std::size_t recv_some(std::uint8_t* buf, std::size_t len);

 private:
  int fd_ = -1;
};

Socket connect_tcp(const std::string& host, std::uint16_t port);

class Listener {
 public:
  // Port 0 picks an ephemeral port.
  Listener(const std::string& host, std::uint16_t port);
  std::uint16_t port() const { return port_; }
  // Invalid socket once shut down.
  Socket accept();
  void shutdown();

 private:
  Socket sock_;
  std::uint16_t port_ = 0;
};

void send_message(Socket& sock, const Message& message);
// nullopt on orderly close between frames.
std::optional<Message> read_message(Socket& sock, FrameReader& reader);

// "host:port" -> pair; throws BadRequest.
std::pair<std::string, std::uint16_t> split_host_port(const std::string& endpoint);

}  // namespace clerms::flows
