// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/telnet/decoy_telnet.hpp"

#include "evse_decoy/net/line_reader.hpp"

namespace evse_decoy::telnet {

namespace {

namespace tn = net::telnet;

const std::string kWillEcho{static_cast<char>(tn::IAC), static_cast<char>(tn::WILL),
                            static_cast<char>(tn::ECHO)};
const std::string kWontEcho{static_cast<char>(tn::IAC), static_cast<char>(tn::WONT),
                            static_cast<char>(tn::ECHO)};

}  // namespace

TelnetDecoy::TelnetDecoy(TelnetOptions options, log::InteractionLog& log)
    : options_(std::move(options)), log_(log) {}

void TelnetDecoy::serve(net::Connection& conn) {
  net::LineReader reader(options_.max_line);
  auto& sock = conn.socket;
  if (!sock.write_all(options_.banner + options_.login_prompt)) return;

  int attempts = 0;
  int blanks = 0;
  while (attempts < options_.max_attempts) {
    auto user = net::read_line(sock, reader, options_.idle_timeout, &conn.stop);
    if (user.status != net::IoStatus::Data) return;
    if (user.line.empty()) {
      if (++blanks > options_.max_blank_lines) return;
      if (!sock.write_all(options_.login_prompt)) return;
      continue;
    }

    // Server claims the echo so the client stops echoing the password locally.
    if (!sock.write_all("Password: " + kWillEcho)) return;
    auto pass = net::read_line(sock, reader, options_.idle_timeout, &conn.stop);
    if (pass.status != net::IoStatus::Data) return;
    ++attempts;
    log_.record({conn.local_port, conn.peer_ip,
                 log::TelnetPayload{user.line, pass.line, attempts}});
    if (!sock.write_all(kWontEcho + "\r\n")) return;

    if (conn.stop.wait_for(options_.failure_delay)) return;
    if (!sock.write_all("Login incorrect\r\n")) return;
    if (attempts < options_.max_attempts && !sock.write_all("\r\n" + options_.login_prompt)) return;
  }
}

}  // namespace evse_decoy::telnet
