// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "evse_decoy/net/socket.hpp"

namespace evse_decoy::net {

namespace telnet {
inline constexpr unsigned char IAC = 255;
inline constexpr unsigned char DONT = 254;
inline constexpr unsigned char DO = 253;
inline constexpr unsigned char WONT = 252;
inline constexpr unsigned char WILL = 251;
inline constexpr unsigned char SB = 250;
inline constexpr unsigned char SE = 240;
inline constexpr unsigned char ECHO = 1;
inline constexpr unsigned char SUPPRESS_GO_AHEAD = 3;
}  // namespace telnet

/// NVT line assembler shared by the FTP and Telnet decoys.
///
/// Telnet command sequences (IAC WILL/WONT/DO/DONT x, IAC SB ... IAC SE, and
/// two-byte IAC commands) are consumed without reaching the line; IAC IAC is
/// a literal 0xFF which, like other control bytes, is discarded. CR LF, CR NUL,
/// bare CR and bare LF all end a line. Backspace and DEL erase one character.
/// Lines longer than max_line are cut and the excess dropped.
class LineReader {
 public:
  explicit LineReader(std::size_t max_line = 1024) : max_line_(max_line) {}

  void feed(std::string_view bytes);
  std::optional<std::string> next_line();
  bool has_line() const { return !lines_.empty(); }
  std::size_t negotiation_commands() const { return negotiations_; }

 private:
  enum class State { Data, Iac, Option, Sub, SubIac };

  void push_char(unsigned char c);
  void end_line();

  std::size_t max_line_;
  State state_ = State::Data;
  bool after_cr_ = false;
  std::string current_;
  std::deque<std::string> lines_;
  std::size_t negotiations_ = 0;
};

struct LineResult {
  IoStatus status;  // Data when `line` holds a line
  std::string line;
};

/// Reads from `socket` until the reader yields a line, the peer closes, the
/// idle timeout elapses, or `stop` fires.
LineResult read_line(Socket& socket, LineReader& reader, std::chrono::milliseconds idle_timeout,
                     const StopSignal* stop);

}  // namespace evse_decoy::net
