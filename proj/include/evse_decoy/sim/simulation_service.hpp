// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include "evse_decoy/sim/charging.hpp"

namespace evse_decoy::sim {

/// Owns a Station and applies every mutation on one worker thread.
///
/// Ticks and actions go through the same FIFO, so the station never sees
/// concurrent writers. After each command the worker publishes a fresh
/// DashboardView; readers only ever touch those immutable snapshots.
class SimulationService {
 public:
  /// A zero tick interval disables the periodic clock; the station then only
  /// moves through advance().
  SimulationService(StationConfig config, std::chrono::milliseconds tick_interval);
  ~SimulationService();

  SimulationService(const SimulationService&) = delete;
  SimulationService& operator=(const SimulationService&) = delete;

  std::shared_ptr<const DashboardView> snapshot() const;
  ActionResult apply(const ChargeAction& action);
  void advance(SimSeconds dt);
  /// Copy of the full station state, taken between commands.
  Station station_copy();

  void stop();

 private:
  using Command = std::function<void(Station&)>;

  void run();
  void submit_and_wait(Command command);
  void publish();

  Station station_;
  std::chrono::milliseconds tick_interval_;

  mutable std::mutex view_mutex_;
  std::shared_ptr<const DashboardView> view_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::deque<Command> queue_;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace evse_decoy::sim
