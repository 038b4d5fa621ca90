// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/runtime/daemon.hpp"

#include <csignal>
#include <iostream>
#include <mutex>
#include <vector>

#include "evse_decoy/ftp/decoy_ftp.hpp"
#include "evse_decoy/http/content.hpp"
#include "evse_decoy/http/decoy_http.hpp"
#include "evse_decoy/log/interaction_log.hpp"
#include "evse_decoy/net/socket.hpp"
#include "evse_decoy/net/tcp_service.hpp"
#include "evse_decoy/sim/simulation_service.hpp"
#include "evse_decoy/telnet/decoy_telnet.hpp"

namespace evse_decoy::runtime {

const char* version() { return EVSE_DECOY_VERSION; }

struct Daemon::Impl {
  net::StopSignal stop;
  std::optional<http::SiteContent> content;
  std::unique_ptr<log::InteractionLog> log;
  std::unique_ptr<sim::SimulationService> simulation;
  std::unique_ptr<http::HttpDecoy> http_login;
  std::unique_ptr<http::HttpDecoy> http_app;
  std::unique_ptr<ftp::FtpDecoy> ftp;
  std::unique_ptr<telnet::TelnetDecoy> telnet;
  std::vector<std::unique_ptr<net::TcpService>> services;
  BoundPorts ports;
  std::mutex mutex;
  bool running = false;
  bool stopped = false;
};

Daemon::Daemon(HoneypotConfig config) : config_(std::move(config)), impl_(std::make_unique<Impl>()) {}

Daemon::~Daemon() {
  if (impl_->running) shutdown();
}

void Daemon::start() {
  std::lock_guard lock(impl_->mutex);
  if (impl_->running || impl_->stopped) throw std::logic_error("daemon already started");
  auto& d = *impl_;
  const auto& c = config_;

  try {
    d.content = http::SiteContent::load(c.identity.content_dir, c.identity.device_info_content_path);
  } catch (const http::ContentError& e) {
    throw StartupError(kExitConfig, e.what());
  }

  struct Pending {
    const char* name;
    net::Listener listener;
  };
  std::vector<Pending> bound;
  try {
    bound.push_back({"http_login", net::Listener::bind(c.bind_address, c.service_ports.http_login)});
    bound.push_back({"http_app", net::Listener::bind(c.bind_address, c.service_ports.http_app)});
    bound.push_back({"ftp", net::Listener::bind(c.bind_address, c.service_ports.ftp)});
    bound.push_back({"telnet", net::Listener::bind(c.bind_address, c.service_ports.telnet)});
  } catch (const net::BindError& e) {
    throw StartupError(kExitBind, e.what());
  }

  auto log_options = c.logging;
  if (!log_options.alarm)
    log_options.alarm = [](const std::string& msg) { std::cerr << "log: " << msg << "\n"; };
  try {
    d.log = std::make_unique<log::InteractionLog>(log_options);
  } catch (const std::exception& e) {
    throw StartupError(kExitConfig, std::string("cannot open log: ") + e.what());
  }

  d.simulation = std::make_unique<sim::SimulationService>(c.simulation.station, c.simulation.tick_interval);

  http::HttpDecoyOptions http_options;
  http_options.server_string = c.identity.http_server_string;
  http_options.login_delay = c.timeouts.http_login_delay;
  http_options.idle_timeout = c.timeouts.http_idle;
  d.http_login = std::make_unique<http::HttpDecoy>(http::SiteRole::Login, http_options, *d.content,
                                                   nullptr, *d.log);
  d.http_app = std::make_unique<http::HttpDecoy>(http::SiteRole::App, http_options, *d.content,
                                                 d.simulation.get(), *d.log);

  ftp::FtpOptions ftp_options;
  ftp_options.banner = c.identity.ftp_banner;
  ftp_options.idle_timeout = c.timeouts.ftp_idle;
  d.ftp = std::make_unique<ftp::FtpDecoy>(ftp_options, *d.log);

  telnet::TelnetOptions telnet_options;
  telnet_options.banner = c.identity.telnet_banner;
  telnet_options.login_prompt = c.identity.telnet_login_prompt;
  telnet_options.idle_timeout = c.timeouts.telnet_idle;
  telnet_options.failure_delay = c.timeouts.telnet_failure_delay;
  d.telnet = std::make_unique<telnet::TelnetDecoy>(telnet_options, *d.log);

  auto* logp = d.log.get();
  for (auto& pending : bound) {
    std::string name = pending.name;
    net::ConnectionHandler handler;
    if (name == "http_login") handler = [&d](net::Connection& conn) { d.http_login->serve(conn); };
    else if (name == "http_app") handler = [&d](net::Connection& conn) { d.http_app->serve(conn); };
    else if (name == "ftp") handler = [&d](net::Connection& conn) { d.ftp->serve(conn); };
    else handler = [&d](net::Connection& conn) { d.telnet->serve(conn); };
    auto hook = [logp, name](const std::string& peer, int port) {
      logp->record({port, peer, log::PortPayload{name}});
    };
    int port = pending.listener.port();
    if (name == "http_login") d.ports.http_login = port;
    else if (name == "http_app") d.ports.http_app = port;
    else if (name == "ftp") d.ports.ftp = port;
    else d.ports.telnet = port;
    d.services.push_back(std::make_unique<net::TcpService>(name, std::move(pending.listener), handler,
                                                           hook, d.stop, c.max_connections_per_service));
  }

  d.log->record({0, "", log::SystemPayload{"startup",
                                            std::string("version ") + version() + " ports " +
                                                std::to_string(d.ports.http_login) + "," +
                                                std::to_string(d.ports.http_app) + "," +
                                                std::to_string(d.ports.ftp) + "," +
                                                std::to_string(d.ports.telnet),
                                            0}});
  for (auto& s : d.services) s->start();
  d.running = true;
}

std::size_t Daemon::shutdown() {
  std::lock_guard lock(impl_->mutex);
  auto& d = *impl_;
  if (!d.running) return 0;

  for (auto& s : d.services) s->stop_accepting();
  d.stop.request();

  auto deadline = std::chrono::steady_clock::now() + config_.timeouts.shutdown_grace;
  std::size_t forced = 0;
  for (auto& s : d.services) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (!s->drain(std::max(left, std::chrono::milliseconds(0)))) {
      forced += s->active();
      s->force_close();
    }
  }
  for (auto& s : d.services) s->join();
  d.simulation->stop();

  d.log->record({0, "", log::SystemPayload{"shutdown", forced ? "grace period expired" : "clean", forced}});
  d.log->close();
  d.running = false;
  d.stopped = true;
  return forced;
}

bool Daemon::running() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->running;
}

BoundPorts Daemon::ports() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->ports;
}

int run_until_signal(const HoneypotConfig& config) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  // Blocked before any thread exists so every worker inherits the mask.
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Daemon daemon(config);
  try {
    daemon.start();
  } catch (const StartupError& e) {
    std::cerr << "startup failed: " << e.what() << "\n";
    return e.code();
  }
  auto ports = daemon.ports();
  std::cout << "listening on " << config.bind_address << " http_login=" << ports.http_login
            << " http_app=" << ports.http_app << " ftp=" << ports.ftp << " telnet=" << ports.telnet
            << std::endl;

  int sig = 0;
  sigwait(&signals, &sig);
  std::size_t forced = daemon.shutdown();
  std::cout << "stopped" << (forced ? " (" + std::to_string(forced) + " connections cut)" : "")
            << std::endl;
  return kExitClean;
}

}  // namespace evse_decoy::runtime
