// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <string>

#include "evse_decoy/http/content.hpp"
#include "evse_decoy/http/http_message.hpp"
#include "evse_decoy/log/interaction_log.hpp"
#include "evse_decoy/net/tcp_service.hpp"
#include "evse_decoy/sim/simulation_service.hpp"

namespace evse_decoy::http {

/// Which site a listener serves: the login/registration bait (port 80 by
/// default) or the device application with dashboards and API (port 5000).
enum class SiteRole { Login, App };

struct HttpDecoyOptions {
  std::string server_string = "Boa/0.94.14rc21";
  std::size_t body_excerpt_bytes = 2048;
  std::size_t max_body_bytes = 64 * 1024;
  std::size_t max_head_bytes = 16 * 1024;
  std::chrono::milliseconds login_delay{800};
  std::chrono::milliseconds idle_timeout{15000};
  std::size_t max_requests_per_connection = 100;
};

/// Upper bound accepted for a page-timing beacon (24 h).
inline constexpr std::int64_t kMaxDwellMs = 24LL * 3600 * 1000;

class HttpDecoy {
 public:
  /// `simulation` may be null for the Login role only.
  HttpDecoy(SiteRole role, HttpDecoyOptions options, const SiteContent& content,
            sim::SimulationService* simulation, log::InteractionLog& log);

  /// Routes one parsed request and writes exactly one interaction record.
  HttpResponse handle(const HttpRequest& request, const std::string& peer_ip, int local_port,
                      const net::StopSignal* stop = nullptr);

  /// For requests that could not be parsed: 400 response plus one record.
  HttpResponse reject(int status, const std::string& raw_head, const std::string& peer_ip,
                      int local_port);

  /// Connection loop: keep-alive, Content-Length bodies, idle timeout.
  void serve(net::Connection& connection);

  SiteRole role() const { return role_; }

 private:
  HttpResponse page_response(int status, std::string body,
                             std::string content_type = "text/html; charset=utf-8") const;
  HttpResponse json_response(int status, std::string body) const;
  HttpResponse not_found() const;
  HttpResponse method_not_allowed(const std::string& allow) const;
  HttpResponse error_page(int status) const;

  HttpResponse route_app(const HttpRequest& request, const std::string& peer_ip, int port,
                         const net::StopSignal* stop, log::Payload& payload);
  HttpResponse route_login(const HttpRequest& request, const std::string& peer_ip, int port,
                           const net::StopSignal* stop, log::Payload& payload);

  HttpResponse handle_login(const HttpRequest& request, bool registration,
                            const net::StopSignal* stop, log::Payload& payload);
  HttpResponse handle_action(const HttpRequest& request, const std::string& peer_ip,
                             log::Payload& payload);
  HttpResponse handle_timing(const HttpRequest& request, log::Payload& payload);

  std::string render_dashboard(const std::string& page_name) const;
  log::HttpEnvelope envelope(const HttpRequest& request) const;

  SiteRole role_;
  HttpDecoyOptions options_;
  const SiteContent& content_;
  sim::SimulationService* simulation_;
  log::InteractionLog& log_;
};

}  // namespace evse_decoy::http
