#include "clerms/flows/net.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace clerms::flows {

Socket::~Socket() {
  if (fd_ >= 0) ::close(fd_);
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = other.release();
  }
  return *this;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::send_all(std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(Errc::IoFailure, std::string("send failed: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::size_t Socket::recv_some(std::uint8_t* buf, std::size_t len) {
  for (;;) {
    ssize_t n = ::recv(fd_, buf, len, 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    fail(Errc::IoFailure, std::string("recv failed: ") + std::strerror(errno));
  }
}

Socket connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res); rc != 0)
    fail(Errc::IoFailure, "cannot resolve " + host + ": " + gai_strerror(rc));
  Socket sock;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    if (::connect(s.fd(), ai->ai_addr, ai->ai_addrlen) == 0) {
      sock = std::move(s);
      break;
    }
  }
  ::freeaddrinfo(res);
  if (!sock.valid()) fail(Errc::IoFailure, "cannot connect to " + host + ":" + std::to_string(port));
  int one = 1;
  ::setsockopt(sock.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return sock;
}

Listener::Listener(const std::string& host, std::uint16_t port) {
  sock_ = Socket(::socket(AF_INET, SOCK_STREAM, 0));
  if (!sock_.valid()) fail(Errc::IoFailure, "socket() failed");
  int one = 1;
  ::setsockopt(sock_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) fail(Errc::IoFailure, "listen address must be IPv4: " + host);
  if (::bind(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    fail(Errc::IoFailure, "bind failed on port " + std::to_string(port) + ": " + std::strerror(errno));
  if (::listen(sock_.fd(), 64) != 0) fail(Errc::IoFailure, "listen failed");
  socklen_t len = sizeof addr;
  ::getsockname(sock_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Socket Listener::accept() {
  for (;;) {
    int fd = ::accept(sock_.fd(), nullptr, nullptr);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return Socket(fd);
    }
    if (errno == EINTR) continue;
    return Socket();
  }
}

void Listener::shutdown() { sock_.shutdown(); }

void send_message(Socket& sock, const Message& message) { sock.send_all(encode_frame(message)); }

std::optional<Message> read_message(Socket& sock, FrameReader& reader) {
  std::uint8_t buf[64 * 1024];
  for (;;) {
    if (auto m = reader.next()) return m;
    std::size_t n = sock.recv_some(buf, sizeof buf);
    if (n == 0) {
      if (reader.buffered() != 0) fail(Errc::MalformedFrame, "connection closed mid-frame");
      return std::nullopt;
    }
    reader.feed({buf, n});
  }
}

std::pair<std::string, std::uint16_t> split_host_port(const std::string& endpoint) {
  auto colon = endpoint.rfind(':');
  if (colon == std::string::npos || colon == 0) fail(Errc::BadRequest, "expected host:port, got " + endpoint);
  int port = 0;
  try {
    port = std::stoi(endpoint.substr(colon + 1));
  } catch (const std::exception&) {
    fail(Errc::BadRequest, "bad port in " + endpoint);
  }
  if (port <= 0 || port > 65535) fail(Errc::BadRequest, "bad port in " + endpoint);
  return {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
}

}  // namespace clerms::flows
