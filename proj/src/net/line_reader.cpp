// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/net/line_reader.hpp"

#include <array>

namespace evse_decoy::net {

void LineReader::push_char(unsigned char c) {
  if (c == 0x08 || c == 0x7F) {
    if (!current_.empty()) current_.pop_back();
    return;
  }
  if (c < 0x20 && c != '\t') return;
  if (c == 0xFF) return;
  if (current_.size() < max_line_) current_.push_back(static_cast<char>(c));
}

void LineReader::end_line() {
  lines_.push_back(std::move(current_));
  current_.clear();
}

void LineReader::feed(std::string_view bytes) {
  for (char ch : bytes) {
    auto c = static_cast<unsigned char>(ch);
    switch (state_) {
      case State::Data:
        if (c == telnet::IAC) {
          state_ = State::Iac;
          break;
        }
        if (after_cr_) {
          after_cr_ = false;
          if (c == '\n' || c == '\0') break;  // second half of CR LF / CR NUL
        }
        if (c == '\r') {
          after_cr_ = true;
          end_line();
        } else if (c == '\n') {
          end_line();
        } else {
          push_char(c);
        }
        break;
      case State::Iac:
        if (c == telnet::IAC) {
          push_char(c);
          state_ = State::Data;
        } else if (c >= telnet::WILL && c <= telnet::DONT) {
          state_ = State::Option;
        } else if (c == telnet::SB) {
          state_ = State::Sub;
        } else {
          ++negotiations_;
          state_ = State::Data;
        }
        break;
      case State::Option:
        ++negotiations_;
        state_ = State::Data;
        break;
      case State::Sub:
        if (c == telnet::IAC) state_ = State::SubIac;
        break;
      case State::SubIac:
        if (c == telnet::SE) {
          ++negotiations_;
          state_ = State::Data;
        } else {
          state_ = State::Sub;
        }
        break;
    }
  }
}

std::optional<std::string> LineReader::next_line() {
  if (lines_.empty()) return std::nullopt;
  std::string line = std::move(lines_.front());
  lines_.pop_front();
  return line;
}

LineResult read_line(Socket& socket, LineReader& reader, std::chrono::milliseconds idle_timeout,
                     const StopSignal* stop) {
  std::array<char, 1024> buffer{};
  while (true) {
    if (auto line = reader.next_line()) return {IoStatus::Data, std::move(*line)};
    ReadResult r = socket.read_some(buffer, idle_timeout, stop);
    if (r.status != IoStatus::Data) return {r.status, {}};
    reader.feed(std::string_view(buffer.data(), r.bytes));
  }
}

}  // namespace evse_decoy::net
