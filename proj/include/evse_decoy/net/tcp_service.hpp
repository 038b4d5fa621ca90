// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "evse_decoy/net/socket.hpp"

namespace evse_decoy::net {

struct Connection {
  Socket socket;
  std::string peer_ip;
  int local_port = 0;
  const StopSignal& stop;
};

using ConnectionHandler = std::function<void(Connection&)>;
/// Called on the accept thread for every accepted connection, including
/// ones turned away because the service is at capacity.
using AcceptHook = std::function<void(const std::string& peer_ip, int local_port)>;

/// Accept loop plus one thread per connection.
class TcpService {
 public:
  TcpService(std::string name, Listener listener, ConnectionHandler handler, AcceptHook on_accept,
             const StopSignal& stop, std::size_t max_connections = 256);
  ~TcpService();

  TcpService(const TcpService&) = delete;
  TcpService& operator=(const TcpService&) = delete;

  void start();
  /// Closes the listener; in-flight connections keep running.
  void stop_accepting();
  /// Waits until no handler is running. Returns false on timeout.
  bool drain(std::chrono::milliseconds grace);
  /// Shuts down every remaining connection socket so blocked handlers return.
  void force_close();
  void join();

  const std::string& name() const { return name_; }
  int port() const { return port_; }
  std::size_t active() const;

 private:
  struct Worker {
    std::thread thread;
    int fd = -1;
    bool done = false;
  };

  void accept_loop();
  void reap_locked();

  std::string name_;
  Listener listener_;
  int port_;
  ConnectionHandler handler_;
  AcceptHook on_accept_;
  const StopSignal& stop_;
  std::size_t max_connections_;

  std::thread acceptor_;
  std::atomic<bool> accepting_{false};
  mutable std::mutex mutex_;
  std::condition_variable idle_cv_;
  std::list<Worker> workers_;
};

}  // namespace evse_decoy::net
