// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/http/http_message.hpp"

#include <algorithm>
#include <cctype>
#include <ctime>
#include <tuple>

#include "evse_decoy/util/url.hpp"

namespace evse_decoy::http {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

bool is_tchar(char c) {
  if (std::isalnum(static_cast<unsigned char>(c))) return true;
  switch (c) {
    case '!': case '#': case '$': case '%': case '&': case '\'': case '*': case '+':
    case '-': case '.': case '^': case '_': case '`': case '|': case '~':
      return true;
    default:
      return false;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<std::string> find_header(const Headers& headers, std::string_view name) {
  for (const auto& [k, v] : headers) {
    if (iequals(k, name)) return v;
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> HttpRequest::header(std::string_view name) const {
  return find_header(headers, name);
}

bool HttpRequest::keep_alive() const {
  auto conn = header("Connection");
  std::string value = conn ? util::to_lower(*conn) : "";
  if (version == "HTTP/1.0") return value.find("keep-alive") != std::string::npos;
  return value.find("close") == std::string::npos;
}

void HttpResponse::set_header(std::string name, std::string value) {
  for (auto& [k, v] : headers) {
    if (iequals(k, name)) {
      v = std::move(value);
      return;
    }
  }
  headers.emplace_back(std::move(name), std::move(value));
}

std::optional<std::string> HttpResponse::header(std::string_view name) const {
  return find_header(headers, name);
}

std::string_view reason_phrase(int status) {
  switch (status) {
    case 200: return "OK";
    case 204: return "No Content";
    case 400: return "Bad Request";
    case 401: return "Unauthorized";
    case 403: return "Forbidden";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 408: return "Request Timeout";
    case 409: return "Conflict";
    case 411: return "Length Required";
    case 413: return "Payload Too Large";
    case 431: return "Request Header Fields Too Large";
    case 500: return "Internal Server Error";
    case 501: return "Not Implemented";
    case 503: return "Service Unavailable";
    default: return "Unknown";
  }
}

std::size_t find_head_end(std::string_view buffer) {
  auto crlf = buffer.find("\r\n\r\n");
  auto lf = buffer.find("\n\n");
  if (crlf == std::string_view::npos && lf == std::string_view::npos) return std::string_view::npos;
  if (lf == std::string_view::npos || (crlf != std::string_view::npos && crlf < lf)) return crlf + 4;
  return lf + 2;
}

std::pair<std::string, std::string> split_target(std::string_view target) {
  // absolute-form: scheme://authority/path?query
  auto scheme = target.find("://");
  if (scheme != std::string_view::npos && target.find('/') > scheme) {
    auto slash = target.find('/', scheme + 3);
    target = slash == std::string_view::npos ? std::string_view("/") : target.substr(slash);
  }
  auto q = target.find('?');
  if (q == std::string_view::npos) return {std::string(target), {}};
  return {std::string(target.substr(0, q)), std::string(target.substr(q + 1))};
}

std::optional<HttpRequest> parse_request_head(std::string_view head) {
  while (head.starts_with("\r\n") || head.starts_with("\n")) {
    head.remove_prefix(head.starts_with("\r\n") ? 2 : 1);
  }
  auto line_end = head.find('\n');
  if (line_end == std::string_view::npos) return std::nullopt;
  std::string_view line = head.substr(0, line_end);
  if (line.ends_with('\r')) line.remove_suffix(1);

  auto sp1 = line.find(' ');
  if (sp1 == std::string_view::npos || sp1 == 0) return std::nullopt;
  auto sp2 = line.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos || sp2 == sp1 + 1) return std::nullopt;
  if (line.find(' ', sp2 + 1) != std::string_view::npos) return std::nullopt;

  HttpRequest req;
  auto method = line.substr(0, sp1);
  for (char c : method) {
    if (!is_tchar(c)) return std::nullopt;
  }
  req.method = util::to_upper(method);
  req.target = std::string(line.substr(sp1 + 1, sp2 - sp1 - 1));
  req.version = std::string(line.substr(sp2 + 1));
  if (req.version != "HTTP/1.1" && req.version != "HTTP/1.0") return std::nullopt;
  for (char c : req.target) {
    if (static_cast<unsigned char>(c) <= 0x20 || c == 0x7F) return std::nullopt;
  }
  if (req.target.empty()) return std::nullopt;
  if (req.target[0] != '/' && req.target != "*" && req.target.find("://") == std::string::npos) {
    return std::nullopt;
  }
  std::tie(req.path, req.query) = split_target(req.target);

  std::size_t pos = line_end + 1;
  while (pos < head.size()) {
    auto nl = head.find('\n', pos);
    std::string_view hl = head.substr(pos, (nl == std::string_view::npos ? head.size() : nl) - pos);
    pos = nl == std::string_view::npos ? head.size() : nl + 1;
    if (hl.ends_with('\r')) hl.remove_suffix(1);
    if (hl.empty()) break;
    if (hl.front() == ' ' || hl.front() == '\t') return std::nullopt;  // obs-fold
    auto colon = hl.find(':');
    if (colon == std::string_view::npos || colon == 0) return std::nullopt;
    auto name = hl.substr(0, colon);
    for (char c : name) {
      if (!is_tchar(c)) return std::nullopt;
    }
    req.headers.emplace_back(std::string(name), std::string(trim(hl.substr(colon + 1))));
  }
  return req;
}

std::pair<std::string, std::string> salvage_request_line(std::string_view head) {
  auto nl = head.find('\n');
  std::string_view line = head.substr(0, nl);
  if (line.ends_with('\r')) line.remove_suffix(1);
  auto sp1 = line.find(' ');
  std::string method = util::to_upper(line.substr(0, std::min<std::size_t>(sp1, 32)));
  std::string target;
  if (sp1 != std::string_view::npos) {
    auto rest = line.substr(sp1 + 1);
    auto sp2 = rest.rfind(' ');
    target = std::string(sp2 == std::string_view::npos ? rest : rest.substr(0, sp2));
  }
  if (target.size() > 4096) target.resize(4096);
  return {method, target};
}

std::string http_date() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "%a, %d %b %Y %H:%M:%S GMT", &tm);
  return buf;
}

std::string serialize_response(const HttpResponse& response, bool head_only, bool keep_alive) {
  std::string out = "HTTP/1.1 " + std::to_string(response.status) + " " +
                    std::string(reason_phrase(response.status)) + "\r\n";
  for (const auto& [k, v] : response.headers) {
    if (iequals(k, "Content-Length") || iequals(k, "Connection")) continue;
    out += k + ": " + v + "\r\n";
  }
  out += "Content-Length: " + std::to_string(response.body.size()) + "\r\n";
  out += keep_alive ? "Connection: keep-alive\r\n" : "Connection: close\r\n";
  out += "\r\n";
  if (!head_only) out += response.body;
  return out;
}

}  // namespace evse_decoy::http
