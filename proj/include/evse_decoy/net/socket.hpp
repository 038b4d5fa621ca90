// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evse_decoy::net {

/// Broadcast stop flag that poll() loops can wait on alongside a socket.
class StopSignal {
 public:
  StopSignal();
  ~StopSignal();
  StopSignal(const StopSignal&) = delete;
  StopSignal& operator=(const StopSignal&) = delete;

  void request();
  bool requested() const { return requested_.load(); }
  /// Readable once request() has been called.
  int fd() const { return pipe_[0]; }
  /// Sleeps for `duration` unless stopped first. Returns true if stopped.
  bool wait_for(std::chrono::milliseconds duration) const;

 private:
  int pipe_[2] = {-1, -1};
  std::atomic<bool> requested_{false};
};

enum class IoStatus { Data, Eof, Timeout, Stopped, Error };

struct ReadResult {
  IoStatus status;
  std::size_t bytes = 0;
};

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  void shutdown_both();

  ReadResult read_some(std::span<char> buffer, std::chrono::milliseconds timeout,
                       const StopSignal* stop = nullptr);
  bool write_all(std::string_view data);

 private:
  int fd_ = -1;
};

class BindError : public std::runtime_error {
 public:
  BindError(std::string address, int port, int error_number);
  int port() const { return port_; }
  int error_number() const { return errno_; }

 private:
  int port_;
  int errno_;
};

/// Listening TCP socket. Closing it releases the port immediately.
class Listener {
 public:
  /// Throws BindError. Port 0 picks an ephemeral port.
  static Listener bind(const std::string& address, int port, int backlog = 128);

  Listener() = default;
  Listener(Listener&&) noexcept = default;
  Listener& operator=(Listener&&) noexcept = default;

  int port() const { return port_; }
  int fd() const { return socket_.fd(); }
  bool valid() const { return socket_.valid(); }
  void close() { socket_.close(); }

  /// Waits up to `timeout` for a connection. Invalid Socket on timeout/stop.
  Socket accept(std::chrono::milliseconds timeout, const StopSignal* stop,
                std::string* peer_ip = nullptr);

 private:
  Socket socket_;
  int port_ = 0;
};

/// Textual peer address; IPv4-mapped IPv6 addresses are reported as IPv4.
std::string peer_address(int fd);
int local_port(int fd);
/// Canonical text form of an IPv4/IPv6 literal. Other text comes back unchanged.
std::string canonical_ip(std::string_view text);

}  // namespace evse_decoy::net
