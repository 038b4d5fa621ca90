// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/http/decoy_http.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "evse_decoy/sim/view_codec.hpp"
#include "evse_decoy/util/url.hpp"
#include "json.hpp"

namespace evse_decoy::http {

namespace {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  return buf;
}

std::string duration_text(double seconds) {
  auto total = static_cast<long long>(std::llround(std::max(0.0, seconds)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld:%02lld", total / 3600, (total / 60) % 60);
  return buf;
}

std::optional<std::string> first_field(const util::FormFields& fields,
                                       std::initializer_list<std::string_view> names) {
  for (auto name : names) {
    if (auto v = util::form_value(fields, name)) return v;
  }
  return std::nullopt;
}

bool looks_like_json(std::string_view body) {
  auto pos = body.find_first_not_of(" \t\r\n");
  return pos != std::string_view::npos && body[pos] == '{';
}

std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  std::string s(text);
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace

HttpDecoy::HttpDecoy(SiteRole role, HttpDecoyOptions options, const SiteContent& content,
                     sim::SimulationService* simulation, log::InteractionLog& log)
    : role_(role), options_(std::move(options)), content_(content), simulation_(simulation), log_(log) {
  if (role_ == SiteRole::App && simulation_ == nullptr) {
    throw std::invalid_argument("the application site needs a simulation");
  }
}

log::HttpEnvelope HttpDecoy::envelope(const HttpRequest& request) const {
  log::HttpEnvelope env;
  env.method = request.method;
  env.path = request.path;
  env.query = request.query;
  env.body_excerpt = request.body.substr(0, options_.body_excerpt_bytes);
  env.user_agent = request.header("User-Agent").value_or("");
  return env;
}

HttpResponse HttpDecoy::page_response(int status, std::string body, std::string content_type) const {
  HttpResponse resp;
  resp.status = status;
  resp.set_header("Server", options_.server_string);
  resp.set_header("Date", http_date());
  resp.set_header("Content-Type", std::move(content_type));
  resp.body = std::move(body);
  return resp;
}

HttpResponse HttpDecoy::json_response(int status, std::string body) const {
  HttpResponse resp = page_response(status, std::move(body), "application/json");
  resp.set_header("Cache-Control", "no-store");
  return resp;
}

HttpResponse HttpDecoy::error_page(int status) const {
  return page_response(status,
                       fill_template(content_.page("error.html"),
                                     {{"status", std::to_string(status)},
                                      {"reason", std::string(reason_phrase(status))}}));
}

HttpResponse HttpDecoy::not_found() const {
  return page_response(404, content_.page("not_found.html"));
}

HttpResponse HttpDecoy::method_not_allowed(const std::string& allow) const {
  HttpResponse resp = error_page(405);
  resp.set_header("Allow", allow);
  return resp;
}

std::string HttpDecoy::render_dashboard(const std::string& page_name) const {
  auto view = simulation_->snapshot();
  std::string rows;
  int in_use = 0;
  for (const auto& c : view->columns) {
    rows += "<tr data-column=\"" + std::to_string(c.column_id) + "\">";
    rows += "<td>" + std::to_string(c.column_id + 1) + "</td>";
    if (c.vacant) {
      rows += "<td>-</td><td class=\"status vacant\">Available</td><td>-</td><td>-</td><td>-</td>"
              "<td>-</td><td>-</td>";
    } else {
      ++in_use;
      rows += "<td>" + html_escape(c.session_id) + "</td>";
      rows += "<td class=\"status\">" + std::string(sim::to_string(c.status)) + "</td>";
      rows += "<td>" + fixed(c.completion_pct, 1) + " %</td>";
      rows += "<td>" + fixed(c.delivered_kwh, 2) + " kWh</td>";
      rows += "<td>" + fixed(c.charge_rate_kw, 1) + " kW</td>";
      rows += "<td>" + fixed(c.cost, 2) + "</td>";
      rows += "<td>" + duration_text(c.remaining_time_s) + "</td>";
    }
    rows += "</tr>\n";
  }
  return fill_template(content_.page(page_name),
                       {{"station_rows", rows},
                        {"aggregate_demand_kw", fixed(view->aggregate_demand_kw, 1)},
                        {"columns_in_use", std::to_string(in_use)},
                        {"column_count", std::to_string(view->columns.size())},
                        {"tariff", fixed(view->tariff_per_kwh, 2)},
                        {"sessions_served", std::to_string(view->sessions_served)},
                        {"uptime", duration_text(view->clock)}});
}

HttpResponse HttpDecoy::handle(const HttpRequest& request, const std::string& peer_ip,
                               int local_port, const net::StopSignal* stop) {
  log::Payload payload = log::HttpRequestPayload{};
  HttpResponse resp = role_ == SiteRole::App
                          ? route_app(request, peer_ip, local_port, stop, payload)
                          : route_login(request, peer_ip, local_port, stop, payload);
  log::HttpEnvelope env = envelope(request);
  env.status_code = resp.status;
  std::visit(
      [&env](auto& p) {
        if constexpr (requires { p.http; }) p.http = env;
      },
      payload);
  log_.record({local_port, peer_ip, std::move(payload)});
  return resp;
}

HttpResponse HttpDecoy::reject(int status, const std::string& raw_head, const std::string& peer_ip,
                               int local_port) {
  auto [method, target] = salvage_request_line(raw_head);
  log::HttpEnvelope env;
  env.method = method;
  std::tie(env.path, env.query) = split_target(target);
  env.status_code = status;
  log_.record({local_port, peer_ip, log::HttpRequestPayload{env}});
  return error_page(status);
}

HttpResponse HttpDecoy::route_app(const HttpRequest& req, const std::string& peer_ip, int,
                                  const net::StopSignal*, log::Payload& payload) {
  const std::string& path = req.path;
  bool read = req.method == "GET" || req.method == "HEAD";

  if (path == "/" || path == "/dashboard" || path == "/admin" || path == "/api/status") {
    if (!read) return method_not_allowed("GET, HEAD");
    if (path == "/") return page_response(200, content_.device_info());
    if (path == "/dashboard") return page_response(200, render_dashboard("dashboard.html"));
    if (path == "/admin") return page_response(200, render_dashboard("admin.html"));
    return json_response(200, sim::encode_view(*simulation_->snapshot()));
  }
  if (path == "/api/action") {
    if (req.method != "POST") {
      payload = log::ActionPayload{{}, "", "", "invalid_request"};
      return method_not_allowed("POST");
    }
    return handle_action(req, peer_ip, payload);
  }
  if (path == "/api/timing") {
    if (req.method != "POST") {
      payload = log::TimingPayload{};
      return method_not_allowed("POST");
    }
    return handle_timing(req, payload);
  }
  if (const StaticAsset* asset = content_.asset(path)) {
    if (!read) return method_not_allowed("GET, HEAD");
    return page_response(200, asset->bytes, asset->content_type);
  }
  return not_found();
}

HttpResponse HttpDecoy::route_login(const HttpRequest& req, const std::string&, int,
                                    const net::StopSignal* stop, log::Payload& payload) {
  const std::string& path = req.path;
  bool read = req.method == "GET" || req.method == "HEAD";
  bool login_path = path == "/" || path == "/login";
  bool register_path = path == "/register";

  if (login_path || register_path) {
    if (req.method == "POST") return handle_login(req, register_path, stop, payload);
    if (!read) return method_not_allowed("GET, HEAD, POST");
    const std::string& tpl = content_.page(register_path ? "register.html" : "login.html");
    return page_response(200, fill_template(tpl, {{"message", ""}}));
  }
  if (const StaticAsset* asset = content_.asset(path)) {
    if (!read) return method_not_allowed("GET, HEAD");
    return page_response(200, asset->bytes, asset->content_type);
  }
  return not_found();
}

HttpResponse HttpDecoy::handle_login(const HttpRequest& req, bool registration,
                                     const net::StopSignal* stop, log::Payload& payload) {
  auto fields = util::parse_form(req.body);
  log::LoginPayload attempt;
  attempt.form_kind = registration ? "Registration" : "Login";
  attempt.username = first_field(fields, {"username", "user", "login", "email"});
  attempt.password = first_field(fields, {"password", "pass", "pwd"});
  bool complete = attempt.username.has_value() && attempt.password.has_value();
  payload = std::move(attempt);
  if (!complete) return error_page(400);

  // Looks like the credentials are being checked.
  if (stop) {
    stop->wait_for(options_.login_delay);
  } else {
    std::this_thread::sleep_for(options_.login_delay);
  }
  const char* message = registration
                            ? "Registration failed: invalid credentials."
                            : "Invalid username or password.";
  const std::string& tpl = content_.page(registration ? "register.html" : "login.html");
  return page_response(401, fill_template(tpl, {{"message", message}}));
}

HttpResponse HttpDecoy::handle_action(const HttpRequest& req, const std::string& peer_ip,
                                      log::Payload& payload) {
  log::ActionPayload action;
  std::optional<std::string> kind_text;
  std::optional<std::string> session_id;
  if (looks_like_json(req.body)) {
    if (auto decoded = sim::decode_action_request(req.body)) {
      kind_text = decoded->kind;
      session_id = decoded->session_id;
    }
  } else {
    auto fields = util::parse_form(req.body);
    kind_text = util::form_value(fields, "kind");
    session_id = util::form_value(fields, "session_id");
  }
  action.kind = kind_text.value_or("");
  action.session_id = session_id.value_or("");

  auto kind = kind_text ? sim::parse_action_kind(*kind_text) : std::nullopt;
  if (!kind || !session_id) {
    action.outcome = "invalid_request";
    payload = std::move(action);
    return json_response(400, R"({"version":1,"ok":false,"error":"invalid_request"})");
  }

  sim::ChargeAction command{*kind, *session_id, peer_ip,
                            log::now_ms().time_since_epoch().count()};
  sim::ActionResult result = simulation_->apply(command);
  action.outcome = std::string(sim::to_string(result));
  payload = std::move(action);

  nlohmann::ordered_json body;
  body["version"] = sim::kWireVersion;
  body["ok"] = result == sim::ActionResult::Applied;
  body["session_id"] = *session_id;
  switch (result) {
    case sim::ActionResult::Applied: {
      auto view = simulation_->snapshot();
      for (const auto& c : view->columns) {
        if (!c.vacant && c.session_id == *session_id) {
          body["status"] = std::string(sim::to_string(c.status));
        }
      }
      return json_response(200, body.dump());
    }
    case sim::ActionResult::UnknownSession:
      body["error"] = "unknown_session";
      return json_response(404, body.dump());
    case sim::ActionResult::IllegalTransition:
      body["error"] = "illegal_transition";
      return json_response(409, body.dump());
  }
  return json_response(500, "{}");
}

HttpResponse HttpDecoy::handle_timing(const HttpRequest& req, log::Payload& payload) {
  log::TimingPayload timing;
  std::optional<double> ms;
  if (looks_like_json(req.body)) {
    auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (!j.is_discarded() && j.is_object()) {
      if (j.contains("page") && j["page"].is_string()) timing.page = j["page"].get<std::string>();
      if (j.contains("ms")) {
        const auto& v = j["ms"];
        if (v.is_number()) ms = v.get<double>();
        if (v.is_string()) ms = parse_number(v.get<std::string>());
      }
    }
  } else {
    auto fields = util::parse_form(req.body);
    timing.page = util::form_value(fields, "page").value_or("");
    if (auto v = util::form_value(fields, "ms")) ms = parse_number(*v);
  }
  if (!ms || timing.page.empty()) {
    payload = std::move(timing);
    return json_response(400, R"({"version":1,"ok":false,"error":"invalid_request"})");
  }
  double clamped = std::clamp(*ms, 0.0, static_cast<double>(kMaxDwellMs));
  timing.duration_ms = std::llround(clamped);
  payload = std::move(timing);
  return json_response(200, R"({"version":1,"ok":true})");
}

void HttpDecoy::serve(net::Connection& conn) {
  std::string buffer;
  std::array<char, 8192> chunk{};
  std::size_t served = 0;
  auto send = [&conn](const HttpResponse& resp, bool head_only, bool keep_alive) {
    return conn.socket.write_all(serialize_response(resp, head_only, keep_alive));
  };

  while (true) {
    std::size_t head_end;
    while ((head_end = find_head_end(buffer)) == std::string::npos) {
      if (buffer.size() > options_.max_head_bytes) {
        send(reject(400, buffer, conn.peer_ip, conn.local_port), false, false);
        return;
      }
      auto r = conn.socket.read_some(chunk, options_.idle_timeout, &conn.stop);
      if (r.status != net::IoStatus::Data) {
        // A partial request is still an interaction worth a record.
        if (!is_blank(buffer)) {
          auto resp = reject(400, buffer, conn.peer_ip, conn.local_port);
          if (r.status == net::IoStatus::Timeout) send(resp, false, false);
        }
        return;
      }
      buffer.append(chunk.data(), r.bytes);
    }
    std::string head = buffer.substr(0, head_end);
    buffer.erase(0, head_end);

    auto request = parse_request_head(head);
    if (!request) {
      send(reject(400, head, conn.peer_ip, conn.local_port), false, false);
      return;
    }
    if (request->header("Transfer-Encoding")) {
      send(reject(411, head, conn.peer_ip, conn.local_port), false, false);
      return;
    }
    std::size_t length = 0;
    if (auto cl = request->header("Content-Length")) {
      auto [ptr, ec] = std::from_chars(cl->data(), cl->data() + cl->size(), length);
      if (ec != std::errc{} || ptr != cl->data() + cl->size()) {
        send(reject(400, head, conn.peer_ip, conn.local_port), false, false);
        return;
      }
      if (length > options_.max_body_bytes) {
        send(reject(413, head, conn.peer_ip, conn.local_port), false, false);
        return;
      }
    }
    while (buffer.size() < length) {
      auto r = conn.socket.read_some(chunk, options_.idle_timeout, &conn.stop);
      if (r.status != net::IoStatus::Data) {
        auto resp = reject(408, head, conn.peer_ip, conn.local_port);
        if (r.status == net::IoStatus::Timeout) send(resp, false, false);
        return;
      }
      buffer.append(chunk.data(), r.bytes);
    }
    request->body = buffer.substr(0, length);
    buffer.erase(0, length);
    ++served;

    HttpResponse resp = handle(*request, conn.peer_ip, conn.local_port, &conn.stop);
    bool keep_alive = request->keep_alive() && served < options_.max_requests_per_connection &&
                      !conn.stop.requested();
    if (!send(resp, request->method == "HEAD", keep_alive) || !keep_alive) return;
  }
}

}  // namespace evse_decoy::http
