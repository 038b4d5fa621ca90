// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/log/record.hpp"

#include <array>
#include <cstdio>
#include <ctime>

#include "json.hpp"

namespace evse_decoy::log {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kCategoryNames{
    "Port", "Actions", "HttpRequest", "Timing", "Ftp", "Telnet", "Login", "System"};

bool is_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return !s.empty();
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

ordered_json http_to_json(const HttpEnvelope& h) {
  ordered_json j;
  j["method"] = escape_invalid_utf8(h.method);
  j["path"] = escape_invalid_utf8(h.path);
  j["query"] = escape_invalid_utf8(h.query);
  j["status"] = h.status_code;
  j["body"] = escape_invalid_utf8(h.body_excerpt);
  j["ua"] = escape_invalid_utf8(h.user_agent);
  return j;
}

HttpEnvelope http_from_json(const json& j) {
  HttpEnvelope h;
  h.method = j.at("method").get<std::string>();
  h.path = j.at("path").get<std::string>();
  h.query = j.at("query").get<std::string>();
  h.status_code = j.at("status").get<int>();
  h.body_excerpt = j.at("body").get<std::string>();
  h.user_agent = j.at("ua").get<std::string>();
  return h;
}

ordered_json optional_string(const std::optional<std::string>& s) {
  if (!s) return nullptr;
  return escape_invalid_utf8(*s);
}

std::optional<std::string> optional_string_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

struct PayloadEncoder {
  ordered_json operator()(const PortPayload& p) const {
    ordered_json j;
    j["service"] = p.service;
    return j;
  }
  ordered_json operator()(const HttpRequestPayload& p) const {
    ordered_json j;
    j["http"] = http_to_json(p.http);
    return j;
  }
  ordered_json operator()(const ActionPayload& p) const {
    ordered_json j;
    j["http"] = http_to_json(p.http);
    j["kind"] = escape_invalid_utf8(p.kind);
    j["session_id"] = escape_invalid_utf8(p.session_id);
    j["outcome"] = p.outcome;
    return j;
  }
  ordered_json operator()(const TimingPayload& p) const {
    ordered_json j;
    j["http"] = http_to_json(p.http);
    j["page"] = escape_invalid_utf8(p.page);
    j["duration_ms"] = p.duration_ms ? ordered_json(*p.duration_ms) : ordered_json(nullptr);
    return j;
  }
  ordered_json operator()(const LoginPayload& p) const {
    ordered_json j;
    j["http"] = http_to_json(p.http);
    j["form"] = p.form_kind;
    j["username"] = optional_string(p.username);
    j["password"] = optional_string(p.password);
    return j;
  }
  ordered_json operator()(const FtpPayload& p) const {
    ordered_json j;
    j["command"] = escape_invalid_utf8(p.command);
    j["argument"] = escape_invalid_utf8(p.argument);
    j["reply"] = p.reply_code;
    return j;
  }
  ordered_json operator()(const TelnetPayload& p) const {
    ordered_json j;
    j["username"] = escape_invalid_utf8(p.username);
    j["password"] = escape_invalid_utf8(p.password);
    j["attempt"] = p.attempt_index;
    return j;
  }
  ordered_json operator()(const SystemPayload& p) const {
    ordered_json j;
    j["event"] = p.event;
    j["detail"] = escape_invalid_utf8(p.detail);
    j["count"] = p.count;
    return j;
  }
};

Payload decode_payload(Category category, const json& d) {
  switch (category) {
    case Category::Port:
      return PortPayload{d.at("service").get<std::string>()};
    case Category::HttpRequest:
      return HttpRequestPayload{http_from_json(d.at("http"))};
    case Category::Actions:
      return ActionPayload{http_from_json(d.at("http")), d.at("kind").get<std::string>(),
                           d.at("session_id").get<std::string>(),
                           d.at("outcome").get<std::string>()};
    case Category::Timing: {
      TimingPayload p{http_from_json(d.at("http")), d.at("page").get<std::string>(), {}};
      const auto& ms = d.at("duration_ms");
      if (!ms.is_null()) p.duration_ms = ms.get<std::int64_t>();
      return p;
    }
    case Category::Login:
      return LoginPayload{http_from_json(d.at("http")), d.at("form").get<std::string>(),
                          optional_string_from(d.at("username")),
                          optional_string_from(d.at("password"))};
    case Category::Ftp:
      return FtpPayload{d.at("command").get<std::string>(), d.at("argument").get<std::string>(),
                        d.at("reply").get<int>()};
    case Category::Telnet:
      return TelnetPayload{d.at("username").get<std::string>(),
                           d.at("password").get<std::string>(), d.at("attempt").get<int>()};
    case Category::System:
      return SystemPayload{d.at("event").get<std::string>(), d.at("detail").get<std::string>(),
                           d.at("count").get<std::uint64_t>()};
  }
  throw RecordFormatError("unhandled category");
}

// Length of the well-formed UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
  auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char b0 = byte(i);
  if (b0 < 0x80) return 1;
  std::size_t len = 0;
  unsigned char lo = 0x80, hi = 0xBF;
  if (b0 >= 0xC2 && b0 <= 0xDF) {
    len = 2;
  } else if (b0 >= 0xE0 && b0 <= 0xEF) {
    len = 3;
    if (b0 == 0xE0) lo = 0xA0;
    if (b0 == 0xED) hi = 0x9F;
  } else if (b0 >= 0xF0 && b0 <= 0xF4) {
    len = 4;
    if (b0 == 0xF0) lo = 0x90;
    if (b0 == 0xF4) hi = 0x8F;
  } else {
    return 0;
  }
  if (i + len > s.size()) return 0;
  if (byte(i + 1) < lo || byte(i + 1) > hi) return 0;
  for (std::size_t k = 2; k < len; ++k) {
    if (byte(i + k) < 0x80 || byte(i + k) > 0xBF) return 0;
  }
  return len;
}

}  // namespace

Timestamp now_ms() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(
      std::chrono::system_clock::now());
}

std::string format_timestamp(Timestamp ts) {
  auto secs = std::chrono::floor<std::chrono::seconds>(ts);
  auto ms = (ts - secs).count();
  std::time_t t = std::chrono::system_clock::to_time_t(secs);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                static_cast<int>(ms));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DDTHH:MM:SS[.fff]Z
  if (text.size() < 20 || text.back() != 'Z') return std::nullopt;
  if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' ||
      text[16] != ':') {
    return std::nullopt;
  }
  auto year = text.substr(0, 4), mon = text.substr(5, 2), day = text.substr(8, 2);
  auto hh = text.substr(11, 2), mm = text.substr(14, 2), ss = text.substr(17, 2);
  for (auto part : {year, mon, day, hh, mm, ss}) {
    if (!is_digits(part)) return std::nullopt;
  }
  int millis = 0;
  auto rest = text.substr(19, text.size() - 20);
  if (!rest.empty()) {
    if (rest[0] != '.' || rest.size() < 2) return std::nullopt;
    auto frac = rest.substr(1);
    if (!is_digits(frac)) return std::nullopt;
    std::string padded(frac.substr(0, 3));
    while (padded.size() < 3) padded.push_back('0');
    millis = to_int(padded);
  }
  std::tm tm{};
  tm.tm_year = to_int(year) - 1900;
  tm.tm_mon = to_int(mon) - 1;
  tm.tm_mday = to_int(day);
  tm.tm_hour = to_int(hh);
  tm.tm_min = to_int(mm);
  tm.tm_sec = to_int(ss);
  if (tm.tm_mon < 0 || tm.tm_mon > 11 || tm.tm_mday < 1 || tm.tm_mday > 31 || tm.tm_hour > 23 ||
      tm.tm_min > 59 || tm.tm_sec > 60) {
    return std::nullopt;
  }
  std::time_t t = timegm(&tm);
  return std::chrono::time_point_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::from_time_t(t)) +
         std::chrono::milliseconds(millis);
}

std::string_view to_string(Category category) {
  return kCategoryNames[static_cast<std::size_t>(category)];
}

std::optional<Category> parse_category(std::string_view text) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == text) return static_cast<Category>(i);
  }
  return std::nullopt;
}

Category category_of(const Payload& payload) {
  return static_cast<Category>(payload.index());
}

const HttpEnvelope* http_envelope(const Payload& payload) {
  if (auto* p = std::get_if<HttpRequestPayload>(&payload)) return &p->http;
  if (auto* p = std::get_if<ActionPayload>(&payload)) return &p->http;
  if (auto* p = std::get_if<TimingPayload>(&payload)) return &p->http;
  if (auto* p = std::get_if<LoginPayload>(&payload)) return &p->http;
  return nullptr;
}

std::string escape_invalid_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = utf8_sequence_length(text, i);
    if (len == 0) {
      char buf[5];
      std::snprintf(buf, sizeof buf, "\\x%02X", static_cast<unsigned char>(text[i]));
      out += buf;
      ++i;
    } else {
      out.append(text.substr(i, len));
      i += len;
    }
  }
  return out;
}

std::string encode_record(const InteractionRecord& record) {
  ordered_json j;
  j["v"] = kSchemaVersion;
  j["id"] = record.record_id;
  j["ts"] = format_timestamp(record.timestamp);
  j["cat"] = std::string(to_string(record.category()));
  j["port"] = record.port;
  j["ip"] = escape_invalid_utf8(record.source_ip);
  j["data"] = std::visit(PayloadEncoder{}, record.payload);
  return j.dump();
}

InteractionRecord decode_record(std::string_view line) {
  auto j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw RecordFormatError("not a JSON object");
  try {
    if (j.at("v").get<int>() != kSchemaVersion) {
      throw RecordFormatError("unsupported schema version");
    }
    InteractionRecord r;
    r.record_id = j.at("id").get<std::uint64_t>();
    auto ts = parse_timestamp(j.at("ts").get<std::string>());
    if (!ts) throw RecordFormatError("bad timestamp");
    r.timestamp = *ts;
    auto category = parse_category(j.at("cat").get<std::string>());
    if (!category) throw RecordFormatError("unknown category");
    r.port = j.at("port").get<int>();
    r.source_ip = j.at("ip").get<std::string>();
    if (r.source_ip.empty()) throw RecordFormatError("empty source ip");
    r.payload = decode_payload(*category, j.at("data"));
    return r;
  } catch (const json::exception& e) {
    throw RecordFormatError(std::string("malformed record: ") + e.what());
  }
}

}  // namespace evse_decoy::log
