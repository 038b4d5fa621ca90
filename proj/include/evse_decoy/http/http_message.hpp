// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evse_decoy::http {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
  std::string method;  // uppercased
  std::string target;  // as sent
  std::string path;
  std::string query;
  std::string version;
  Headers headers;
  std::string body;

  /// Case-insensitive lookup of the first header with this name.
  std::optional<std::string> header(std::string_view name) const;
  bool keep_alive() const;
};

struct HttpResponse {
  int status = 200;
  Headers headers;
  std::string body;

  void set_header(std::string name, std::string value);
  std::optional<std::string> header(std::string_view name) const;
};

std::string_view reason_phrase(int status);

/// Position just past the blank line ending the head, or npos.
std::size_t find_head_end(std::string_view buffer);

/// Parses request line and headers. nullopt on anything malformed.
std::optional<HttpRequest> parse_request_head(std::string_view head);

/// Best-effort method/target from a request that failed to parse, for logging.
std::pair<std::string, std::string> salvage_request_line(std::string_view head);

/// Splits an origin-form or absolute-form target into path and query.
std::pair<std::string, std::string> split_target(std::string_view target);

/// IMF-fixdate for the Date header.
std::string http_date();

/// Status line, headers (including Content-Length and Connection) and, unless
/// head_only, the body.
std::string serialize_response(const HttpResponse& response, bool head_only, bool keep_alive);

}  // namespace evse_decoy::http
