// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>

#include "evse_decoy/log/interaction_log.hpp"
#include "evse_decoy/net/tcp_service.hpp"

namespace evse_decoy::ftp {

struct FtpOptions {
  std::string banner = "EVSE-FW FTP server (GNU inetutils 1.9.4) ready.";
  std::chrono::milliseconds idle_timeout{120'000};
  std::size_t max_commands = 100;
  std::size_t max_line = 512;
};

struct FtpReply {
  int code = 0;
  std::string text;
  bool close = false;

  std::string wire() const;
};

/// Control-channel state machine. Nothing here ever logs a user in: every
/// reply is one of 220/221/331/502/530.
class FtpProtocol {
 public:
  explicit FtpProtocol(const FtpOptions& options) : options_(options) {}

  FtpReply greeting() const;
  /// One client command line in, one reply out.
  FtpReply on_line(std::string_view line);
  /// Verb (uppercased) and argument of the last line handled.
  const std::string& last_command() const { return command_; }
  const std::string& last_argument() const { return argument_; }
  std::size_t commands_seen() const { return commands_; }
  bool exhausted() const { return commands_ >= options_.max_commands; }

 private:
  const FtpOptions& options_;
  std::string command_;
  std::string argument_;
  std::size_t commands_ = 0;
  bool user_given_ = false;
};

/// True for the RFC 959 / RFC 2389 / RFC 3659 verbs the decoy recognises.
bool is_known_verb(std::string_view verb);

class FtpDecoy {
 public:
  FtpDecoy(FtpOptions options, log::InteractionLog& log);
  void serve(net::Connection& connection);

 private:
  FtpOptions options_;
  log::InteractionLog& log_;
};

}  // namespace evse_decoy::ftp
