// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/net/socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace evse_decoy::net {

StopSignal::StopSignal() {
  if (::pipe2(pipe_, O_CLOEXEC | O_NONBLOCK) != 0) {
    throw std::runtime_error(std::string("pipe2: ") + std::strerror(errno));
  }
}

StopSignal::~StopSignal() {
  ::close(pipe_[0]);
  ::close(pipe_[1]);
}

void StopSignal::request() {
  if (requested_.exchange(true)) return;
  char byte = 1;
  (void)!::write(pipe_[1], &byte, 1);
}

bool StopSignal::wait_for(std::chrono::milliseconds duration) const {
  if (requested()) return true;
  pollfd pfd{fd(), POLLIN, 0};
  ::poll(&pfd, 1, static_cast<int>(duration.count()));
  return requested();
}

Socket::~Socket() { close(); }

Socket::Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    other.fd_ = -1;
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown_both() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

ReadResult Socket::read_some(std::span<char> buffer, std::chrono::milliseconds timeout,
                             const StopSignal* stop) {
  pollfd fds[2] = {{fd_, POLLIN, 0}, {stop ? stop->fd() : -1, POLLIN, 0}};
  auto deadline = std::chrono::steady_clock::now() + timeout;
  while (true) {
    if (stop && stop->requested()) return {IoStatus::Stopped};
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() < 0) return {IoStatus::Timeout};
    int rc = ::poll(fds, stop ? 2 : 1, static_cast<int>(left.count()));
    if (rc < 0) {
      if (errno == EINTR) continue;
      return {IoStatus::Error};
    }
    if (rc == 0) return {IoStatus::Timeout};
    if (stop && (fds[1].revents & POLLIN)) return {IoStatus::Stopped};
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), 0);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        return {IoStatus::Error};
      }
      if (n == 0) return {IoStatus::Eof};
      return {IoStatus::Data, static_cast<std::size_t>(n)};
    }
  }
}

bool Socket::write_all(std::string_view data) {
  std::size_t done = 0;
  while (done < data.size()) {
    ssize_t n = ::send(fd_, data.data() + done, data.size() - done, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    done += static_cast<std::size_t>(n);
  }
  return true;
}

BindError::BindError(std::string address, int port, int error_number)
    : std::runtime_error("cannot bind " + address + ":" + std::to_string(port) + ": " +
                         std::strerror(error_number)),
      port_(port),
      errno_(error_number) {}

Listener Listener::bind(const std::string& address, int port, int backlog) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  hints.ai_flags = AI_PASSIVE | AI_NUMERICHOST | AI_NUMERICSERV;
  addrinfo* res = nullptr;
  std::string service = std::to_string(port);
  if (::getaddrinfo(address.empty() ? nullptr : address.c_str(), service.c_str(), &hints, &res) !=
      0) {
    throw BindError(address, port, EADDRNOTAVAIL);
  }
  int last_errno = EADDRNOTAVAIL;
  Listener listener;
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    Socket sock(::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol));
    if (!sock.valid()) {
      last_errno = errno;
      continue;
    }
    int one = 1;
    ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(sock.fd(), ai->ai_addr, ai->ai_addrlen) != 0 || ::listen(sock.fd(), backlog) != 0) {
      last_errno = errno;
      continue;
    }
    listener.port_ = local_port(sock.fd());
    listener.socket_ = std::move(sock);
    break;
  }
  ::freeaddrinfo(res);
  if (!listener.valid()) throw BindError(address, port, last_errno);
  return listener;
}

Socket Listener::accept(std::chrono::milliseconds timeout, const StopSignal* stop,
                        std::string* peer_ip) {
  pollfd fds[2] = {{fd(), POLLIN, 0}, {stop ? stop->fd() : -1, POLLIN, 0}};
  int rc = ::poll(fds, stop ? 2 : 1, static_cast<int>(timeout.count()));
  if (rc <= 0 || (stop && stop->requested()) || !(fds[0].revents & POLLIN)) return Socket{};
  Socket client(::accept4(fd(), nullptr, nullptr, SOCK_CLOEXEC));
  if (client.valid() && peer_ip) *peer_ip = peer_address(client.fd());
  return client;
}

namespace {

std::string format_address(const sockaddr_storage& ss) {
  char buf[INET6_ADDRSTRLEN] = {};
  if (ss.ss_family == AF_INET) {
    const auto* in = reinterpret_cast<const sockaddr_in*>(&ss);
    ::inet_ntop(AF_INET, &in->sin_addr, buf, sizeof buf);
  } else if (ss.ss_family == AF_INET6) {
    const auto* in6 = reinterpret_cast<const sockaddr_in6*>(&ss);
    if (IN6_IS_ADDR_V4MAPPED(&in6->sin6_addr)) {
      ::inet_ntop(AF_INET, &in6->sin6_addr.s6_addr[12], buf, sizeof buf);
    } else {
      ::inet_ntop(AF_INET6, &in6->sin6_addr, buf, sizeof buf);
    }
  }
  return buf;
}

}  // namespace

std::string peer_address(int fd) {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getpeername(fd, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return "0.0.0.0";
  return format_address(ss);
}

int local_port(int fd) {
  sockaddr_storage ss{};
  socklen_t len = sizeof ss;
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&ss), &len) != 0) return 0;
  if (ss.ss_family == AF_INET) return ntohs(reinterpret_cast<sockaddr_in*>(&ss)->sin_port);
  if (ss.ss_family == AF_INET6) return ntohs(reinterpret_cast<sockaddr_in6*>(&ss)->sin6_port);
  return 0;
}

std::string canonical_ip(std::string_view text) {
  std::string s(text);
  in_addr v4{};
  if (::inet_pton(AF_INET, s.c_str(), &v4) == 1) {
    char buf[INET_ADDRSTRLEN];
    ::inet_ntop(AF_INET, &v4, buf, sizeof buf);
    return buf;
  }
  in6_addr v6{};
  if (::inet_pton(AF_INET6, s.c_str(), &v6) == 1) {
    char buf[INET6_ADDRSTRLEN];
    if (IN6_IS_ADDR_V4MAPPED(&v6)) {
      ::inet_ntop(AF_INET, &v6.s6_addr[12], buf, sizeof buf);
    } else {
      ::inet_ntop(AF_INET6, &v6, buf, sizeof buf);
    }
    return buf;
  }
  return s;
}

}  // namespace evse_decoy::net
