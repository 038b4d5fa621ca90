// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/sim/simulation_service.hpp"

#include <future>
#include <optional>
#include <stdexcept>

namespace evse_decoy::sim {

SimulationService::SimulationService(StationConfig config,
                                     std::chrono::milliseconds tick_interval)
    : station_(std::move(config)), tick_interval_(tick_interval) {
  publish();
  worker_ = std::thread([this] { run(); });
}

SimulationService::~SimulationService() { stop(); }

void SimulationService::stop() {
  {
    std::lock_guard lock(queue_mutex_);
    if (stopping_ && !worker_.joinable()) return;
    stopping_ = true;
  }
  queue_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

std::shared_ptr<const DashboardView> SimulationService::snapshot() const {
  std::lock_guard lock(view_mutex_);
  return view_;
}

void SimulationService::publish() {
  auto view = std::make_shared<const DashboardView>(station_.snapshot());
  std::lock_guard lock(view_mutex_);
  view_ = std::move(view);
}

void SimulationService::run() {
  using clock = std::chrono::steady_clock;
  auto last_tick = clock::now();
  std::unique_lock lock(queue_mutex_);
  while (true) {
    if (queue_.empty() && !stopping_) {
      if (tick_interval_.count() > 0) {
        queue_cv_.wait_until(lock, last_tick + tick_interval_,
                             [this] { return stopping_ || !queue_.empty(); });
      } else {
        queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      }
    }
    if (stopping_ && queue_.empty()) return;

    std::deque<Command> batch;
    batch.swap(queue_);
    lock.unlock();

    if (tick_interval_.count() > 0) {
      auto now = clock::now();
      if (now - last_tick >= tick_interval_) {
        std::chrono::duration<double> elapsed = now - last_tick;
        station_.advance(elapsed.count());
        last_tick = now;
      }
    }
    publish();
    // Each command publishes before its caller is released, so a caller that
    // reads snapshot() right after apply() sees its own effect.
    for (auto& command : batch) command(station_);
    lock.lock();
  }
}

void SimulationService::submit_and_wait(Command command) {
  std::promise<void> done;
  auto future = done.get_future();
  {
    std::lock_guard lock(queue_mutex_);
    if (stopping_) throw std::runtime_error("simulation service stopped");
    queue_.push_back([this, &command, &done](Station& station) {
      try {
        command(station);
        publish();
        done.set_value();
      } catch (...) {
        done.set_exception(std::current_exception());
      }
    });
  }
  queue_cv_.notify_one();
  future.get();
}

ActionResult SimulationService::apply(const ChargeAction& action) {
  ActionResult result = ActionResult::UnknownSession;
  submit_and_wait([&](Station& station) { result = station.apply_action(action); });
  return result;
}

void SimulationService::advance(SimSeconds dt) {
  submit_and_wait([dt](Station& station) { station.advance(dt); });
}

Station SimulationService::station_copy() {
  std::optional<Station> copy;
  submit_and_wait([&copy](Station& station) { copy.emplace(station); });
  return std::move(*copy);
}

}  // namespace evse_decoy::sim
