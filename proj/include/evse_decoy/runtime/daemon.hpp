// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "evse_decoy/runtime/config.hpp"

namespace evse_decoy::runtime {

enum ExitCode : int { kExitClean = 0, kExitConfig = 1, kExitBind = 2 };

const char* version();

/// Startup failure with the exit code the CLI should return.
class StartupError : public std::runtime_error {
 public:
  StartupError(ExitCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct BoundPorts {
  int http_login = 0;
  int http_app = 0;
  int ftp = 0;
  int telnet = 0;
};

/// Owns the log, the simulation and the four decoy services.
class Daemon {
 public:
  explicit Daemon(HoneypotConfig config);
  ~Daemon();

  Daemon(const Daemon&) = delete;
  Daemon& operator=(const Daemon&) = delete;

  /// Loads content, binds every listener, opens the log and starts serving.
  /// All or nothing: on StartupError no socket stays bound.
  void start();
  /// Stops accepting, signals handlers, waits up to the grace period, closes
  /// stragglers, stops the simulation and writes the final shutdown record.
  /// Idempotent. Returns the number of connections that had to be cut.
  std::size_t shutdown();

  bool running() const;
  BoundPorts ports() const;
  const HoneypotConfig& config() const { return config_; }

 private:
  struct Impl;
  HoneypotConfig config_;
  std::unique_ptr<Impl> impl_;
};

/// CLI entry point for `run`: starts the daemon, blocks until SIGINT or
/// SIGTERM, shuts down. Prints failures to stderr and returns an ExitCode.
int run_until_signal(const HoneypotConfig& config);

}  // namespace evse_decoy::runtime
