// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/net/tcp_service.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <iostream>

namespace evse_decoy::net {

TcpService::TcpService(std::string name, Listener listener, ConnectionHandler handler,
                       AcceptHook on_accept, const StopSignal& stop, std::size_t max_connections)
    : name_(std::move(name)),
      listener_(std::move(listener)),
      port_(listener_.port()),
      handler_(std::move(handler)),
      on_accept_(std::move(on_accept)),
      stop_(stop),
      max_connections_(max_connections) {}

TcpService::~TcpService() {
  stop_accepting();
  force_close();
  join();
}

void TcpService::start() {
  accepting_ = true;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void TcpService::reap_locked() {
  for (auto it = workers_.begin(); it != workers_.end();) {
    if (it->done) {
      if (it->thread.joinable()) it->thread.join();
      it = workers_.erase(it);
    } else {
      ++it;
    }
  }
}

void TcpService::accept_loop() {
  using namespace std::chrono_literals;
  while (accepting_ && !stop_.requested()) {
    std::string peer;
    Socket client = listener_.accept(200ms, &stop_, &peer);
    if (!client.valid()) continue;
    if (on_accept_) on_accept_(peer, port_);

    std::lock_guard lock(mutex_);
    reap_locked();
    if (workers_.size() >= max_connections_) continue;  // closes client

    auto it = workers_.emplace(workers_.end());
    it->fd = client.fd();
    it->thread = std::thread([this, it, sock = std::move(client), peer]() mutable {
      Connection conn{std::move(sock), peer, port_, stop_};
      try {
        handler_(conn);
      } catch (const std::exception& e) {
        std::cerr << "[" << name_ << "] handler error from " << peer << ": " << e.what()
                  << std::endl;
      }
      {
        std::lock_guard done_lock(mutex_);
        it->fd = -1;
        it->done = true;
      }
      idle_cv_.notify_all();
    });
  }
}

void TcpService::stop_accepting() {
  accepting_ = false;
  if (acceptor_.joinable()) acceptor_.join();
  listener_.close();
}

bool TcpService::drain(std::chrono::milliseconds grace) {
  std::unique_lock lock(mutex_);
  return idle_cv_.wait_for(lock, grace, [this] {
    return std::all_of(workers_.begin(), workers_.end(), [](const Worker& w) { return w.done; });
  });
}

void TcpService::force_close() {
  std::lock_guard lock(mutex_);
  for (auto& w : workers_) {
    if (!w.done && w.fd >= 0) ::shutdown(w.fd, SHUT_RDWR);
  }
}

void TcpService::join() {
  std::list<Worker> workers;
  {
    std::lock_guard lock(mutex_);
    workers.splice(workers.end(), workers_);
  }
  for (auto& w : workers) {
    if (w.thread.joinable()) w.thread.join();
  }
}

std::size_t TcpService::active() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(
      workers_.begin(), workers_.end(), [](const Worker& w) { return !w.done; }));
}

}  // namespace evse_decoy::net
