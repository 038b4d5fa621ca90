// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace evse_decoy::log {

/// Line format version written in the "v" field of every record.
inline constexpr int kSchemaVersion = 1;

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

Timestamp now_ms();
/// "2026-10-17T08:15:02.125Z"
std::string format_timestamp(Timestamp ts);
std::optional<Timestamp> parse_timestamp(std::string_view text);

enum class Category { Port, Actions, HttpRequest, Timing, Ftp, Telnet, Login, System };

std::string_view to_string(Category category);
std::optional<Category> parse_category(std::string_view text);

/// What the web layer saw for one request. Shared by every HTTP-borne payload.
struct HttpEnvelope {
  std::string method;
  std::string path;
  std::string query;
  std::string body_excerpt;
  int status_code = 0;
  std::string user_agent;

  bool operator==(const HttpEnvelope&) const = default;
};

struct PortPayload {
  std::string service;
  bool operator==(const PortPayload&) const = default;
};

struct HttpRequestPayload {
  HttpEnvelope http;
  bool operator==(const HttpRequestPayload&) const = default;
};

struct ActionPayload {
  HttpEnvelope http;
  std::string kind;  // raw as submitted
  std::string session_id;
  std::string outcome;  // applied | unknown_session | illegal_transition | invalid_request
  bool operator==(const ActionPayload&) const = default;
};

struct TimingPayload {
  HttpEnvelope http;
  std::string page;
  std::optional<std::int64_t> duration_ms;  // absent when the beacon was malformed
  bool operator==(const TimingPayload&) const = default;
};

struct LoginPayload {
  HttpEnvelope http;
  std::string form_kind;  // Login | Registration
  std::optional<std::string> username;
  std::optional<std::string> password;
  bool operator==(const LoginPayload&) const = default;
};

struct FtpPayload {
  std::string command;
  std::string argument;
  int reply_code = 0;
  bool operator==(const FtpPayload&) const = default;
};

struct TelnetPayload {
  std::string username;
  std::string password;
  int attempt_index = 0;
  bool operator==(const TelnetPayload&) const = default;
};

struct SystemPayload {
  std::string event;  // startup | shutdown | records_dropped | ...
  std::string detail;
  std::uint64_t count = 0;
  bool operator==(const SystemPayload&) const = default;
};

// Alternative order matches Category.
using Payload = std::variant<PortPayload, ActionPayload, HttpRequestPayload, TimingPayload,
                             FtpPayload, TelnetPayload, LoginPayload, SystemPayload>;

Category category_of(const Payload& payload);
/// The HTTP envelope for HttpRequest, Actions, Timing and Login payloads.
const HttpEnvelope* http_envelope(const Payload& payload);

struct InteractionRecord {
  std::uint64_t record_id = 0;
  Timestamp timestamp{};
  int port = 0;
  std::string source_ip;
  Payload payload;

  Category category() const { return category_of(payload); }
  const HttpEnvelope* http() const { return http_envelope(payload); }
  bool operator==(const InteractionRecord&) const = default;
};

class RecordFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One line, no trailing newline.
std::string encode_record(const InteractionRecord& record);
InteractionRecord decode_record(std::string_view line);

/// Replaces bytes that are not well-formed UTF-8 with a literal "\xHH".
std::string escape_invalid_utf8(std::string_view text);

}  // namespace evse_decoy::log
