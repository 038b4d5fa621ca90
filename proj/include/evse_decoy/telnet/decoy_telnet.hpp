// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <string>

#include "evse_decoy/log/interaction_log.hpp"
#include "evse_decoy/net/tcp_service.hpp"

namespace evse_decoy::telnet {

struct TelnetOptions {
  std::string banner = "\r\nEVSE-Linux 4.9.88 ccs-evse ttymxc0\r\n\r\n";
  std::string login_prompt = "ccs-evse login: ";
  int max_attempts = 3;
  std::chrono::milliseconds failure_delay{1000};
  std::chrono::milliseconds idle_timeout{60'000};
  std::size_t max_line = 256;
  /// Blank username lines tolerated before hanging up.
  int max_blank_lines = 20;
};

/// Login prompt that rejects every credential pair after `failure_delay`
/// and hangs up after `max_attempts`.
class TelnetDecoy {
 public:
  TelnetDecoy(TelnetOptions options, log::InteractionLog& log);
  void serve(net::Connection& connection);

 private:
  TelnetOptions options_;
  log::InteractionLog& log_;
};

}  // namespace evse_decoy::telnet
