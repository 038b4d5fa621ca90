// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/runtime/config.hpp"

#include <arpa/inet.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>
#include <vector>

#include <yaml-cpp/yaml.h>

namespace evse_decoy::runtime {

ConfigError::ConfigError(std::string key, const std::string& message)
    : std::runtime_error(key.empty() ? message : key + ": " + message), key_(std::move(key)) {}

ConfigFileMissing::ConfigFileMissing(const std::filesystem::path& path)
    : ConfigError("", "config file not found: " + path.string()) {}

DuplicatePortError::DuplicatePortError(const std::string& first_key, const std::string& second_key,
                                       int port)
    : ConfigError(first_key, "port " + std::to_string(port) + " is also used by " + second_key),
      other_key_(second_key) {}

UnknownKeyError::UnknownKeyError(const std::string& key) : ConfigError(key, "unknown key") {}

MissingKeyError::MissingKeyError(const std::string& key) : ConfigError(key, "required key is missing") {}

namespace {

/// One YAML mapping plus the set of keys consumed from it.
class Section {
 public:
  Section(YAML::Node node, std::string prefix) : node_(std::move(node)), prefix_(std::move(prefix)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw InvalidValueError(prefix_.empty() ? "<root>" : prefix_, "expected a mapping");
  }

  std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  template <typename T>
  std::optional<T> get(const std::string& key) {
    used_.insert(key);
    if (!node_ || !node_.IsMap()) return std::nullopt;
    YAML::Node value = node_[key];
    if (!value || value.IsNull()) return std::nullopt;
    if (!value.IsScalar()) throw InvalidValueError(path(key), "expected a scalar");
    try {
      return value.as<T>();
    } catch (const YAML::Exception&) {
      throw InvalidValueError(path(key), "cannot parse '" + value.Scalar() + "'");
    }
  }

  template <typename T>
  std::optional<std::vector<T>> get_list(const std::string& key) {
    used_.insert(key);
    if (!node_ || !node_.IsMap()) return std::nullopt;
    YAML::Node value = node_[key];
    if (!value || value.IsNull()) return std::nullopt;
    if (!value.IsSequence()) throw InvalidValueError(path(key), "expected a list");
    std::vector<T> out;
    for (const auto& item : value) {
      try {
        out.push_back(item.as<T>());
      } catch (const YAML::Exception&) {
        throw InvalidValueError(path(key), "cannot parse list item");
      }
    }
    return out;
  }

  Section child(const std::string& key) {
    used_.insert(key);
    YAML::Node value = node_ && node_.IsMap() ? node_[key] : YAML::Node();
    return Section(value, path(key));
  }

  void reject_unknown() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& item : node_) {
      auto key = item.first.as<std::string>();
      if (!used_.count(key)) throw UnknownKeyError(path(key));
    }
  }

 private:
  YAML::Node node_;
  std::string prefix_;
  std::set<std::string> used_;
};

template <typename T, typename Out>
void read_into(Section& s, const std::string& key, Out& out) {
  if (auto v = s.template get<T>(key)) out = static_cast<Out>(*v);
}

void read_ms(Section& s, const std::string& key, std::chrono::milliseconds& out) {
  if (auto v = s.get<long long>(key)) out = std::chrono::milliseconds(*v);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& p) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

bool valid_ip(const std::string& text) {
  unsigned char buf[16];
  return inet_pton(AF_INET, text.c_str(), buf) == 1 || inet_pton(AF_INET6, text.c_str(), buf) == 1;
}

void positive_ms(const std::string& key, std::chrono::milliseconds v) {
  if (v.count() <= 0) throw InvalidValueError(key, "must be greater than 0");
}

}  // namespace

void validate(const HoneypotConfig& c) {
  if (c.bind_address.empty()) throw MissingKeyError("bind_address");
  if (!valid_ip(c.bind_address))
    throw InvalidValueError("bind_address", "'" + c.bind_address + "' is not an IP address");

  const std::pair<const char*, int> ports[] = {{"service_ports.http_login", c.service_ports.http_login},
                                               {"service_ports.http_app", c.service_ports.http_app},
                                               {"service_ports.ftp", c.service_ports.ftp},
                                               {"service_ports.telnet", c.service_ports.telnet}};
  for (const auto& [key, port] : ports) {
    if (port < 0 || port > 65535) throw InvalidValueError(key, "port must be in 0..65535");
  }
  for (std::size_t i = 0; i < std::size(ports); ++i) {
    for (std::size_t j = i + 1; j < std::size(ports); ++j) {
      if (ports[i].second != 0 && ports[i].second == ports[j].second)
        throw DuplicatePortError(ports[i].first, ports[j].first, ports[i].second);
    }
  }

  const auto& st = c.simulation.station;
  positive_ms("simulation.tick_interval_ms", c.simulation.tick_interval);
  if (st.column_count < 1) throw InvalidValueError("simulation.column_count", "must be at least 1");
  const auto& p = st.profile;
  if (!(p.dwell_min_s > 0)) throw InvalidValueError("simulation.profile.dwell_min_s", "must be greater than 0");
  if (!(p.dwell_max_s >= p.dwell_min_s))
    throw InvalidValueError("simulation.profile.dwell_max_s", "must be at least dwell_min_s");
  if (p.capacities_kwh.empty()) throw InvalidValueError("simulation.profile.capacities_kwh", "must not be empty");
  for (double v : p.capacities_kwh)
    if (!(v > 0)) throw InvalidValueError("simulation.profile.capacities_kwh", "values must be greater than 0");
  if (p.charge_rates_kw.empty()) throw InvalidValueError("simulation.profile.charge_rates_kw", "must not be empty");
  for (double v : p.charge_rates_kw)
    if (!(v > 0)) throw InvalidValueError("simulation.profile.charge_rates_kw", "values must be greater than 0");
  if (!(p.requested_fraction_min >= 0 && p.requested_fraction_min < p.requested_fraction_max &&
        p.requested_fraction_max <= 1))
    throw InvalidValueError("simulation.profile.requested_fraction_max",
                            "requires 0 <= requested_fraction_min < requested_fraction_max <= 1");
  if (!(p.idle_gap_min_s >= 0)) throw InvalidValueError("simulation.profile.idle_gap_min_s", "must not be negative");
  if (!(p.idle_gap_max_s >= p.idle_gap_min_s))
    throw InvalidValueError("simulation.profile.idle_gap_max_s", "must be at least idle_gap_min_s");
  if (!(p.tariff_per_kwh >= 0)) throw InvalidValueError("simulation.profile.tariff_per_kwh", "must not be negative");

  if (c.logging.directory.empty()) throw InvalidValueError("logging.directory", "must not be empty");
  if (c.logging.file_prefix.empty() || c.logging.file_prefix.find('/') != std::string::npos)
    throw InvalidValueError("logging.file_prefix", "must be a plain file name");
  if (c.logging.buffer_limit < 1) throw InvalidValueError("logging.buffer_limit", "must be at least 1");

  positive_ms("timeouts.shutdown_grace_ms", c.timeouts.shutdown_grace);
  positive_ms("timeouts.http_idle_ms", c.timeouts.http_idle);
  positive_ms("timeouts.ftp_idle_ms", c.timeouts.ftp_idle);
  positive_ms("timeouts.telnet_idle_ms", c.timeouts.telnet_idle);
  if (c.timeouts.http_login_delay.count() < 0)
    throw InvalidValueError("timeouts.http_login_delay_ms", "must not be negative");
  if (c.timeouts.telnet_failure_delay.count() < 0)
    throw InvalidValueError("timeouts.telnet_failure_delay_ms", "must not be negative");

  if (!(c.enrichment.requests_per_minute > 0))
    throw InvalidValueError("enrichment.requests_per_minute", "must be greater than 0");
  if (c.enrichment.ttl.count() <= 0) throw InvalidValueError("enrichment.ttl_hours", "must be greater than 0");
  positive_ms("enrichment.timeout_ms", c.enrichment.timeout);
  if (c.max_connections_per_service < 1)
    throw InvalidValueError("max_connections_per_service", "must be at least 1");
}

HoneypotConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir,
                            bool apply_env) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigSyntaxError("", std::string("YAML syntax error: ") + e.what());
  }

  HoneypotConfig c;
  c.identity.content_dir = resolve(base_dir, c.identity.content_dir);
  c.identity.device_info_content_path = resolve(base_dir, c.identity.device_info_content_path);
  c.logging.directory = resolve(base_dir, c.logging.directory);
  c.enrichment.cache_path = resolve(base_dir, c.enrichment.cache_path);

  Section top(root, "");
  read_into<std::string>(top, "bind_address", c.bind_address);
  read_into<std::size_t>(top, "max_connections_per_service", c.max_connections_per_service);

  {
    Section s = top.child("service_ports");
    read_into<int>(s, "http_login", c.service_ports.http_login);
    read_into<int>(s, "http_app", c.service_ports.http_app);
    read_into<int>(s, "ftp", c.service_ports.ftp);
    read_into<int>(s, "telnet", c.service_ports.telnet);
    s.reject_unknown();
  }
  {
    Section s = top.child("identity");
    read_into<std::string>(s, "http_server_string", c.identity.http_server_string);
    read_into<std::string>(s, "ftp_banner", c.identity.ftp_banner);
    read_into<std::string>(s, "telnet_banner", c.identity.telnet_banner);
    read_into<std::string>(s, "telnet_login_prompt", c.identity.telnet_login_prompt);
    if (auto v = s.get<std::string>("content_dir")) {
      c.identity.content_dir = resolve(base_dir, *v);
      c.identity.device_info_content_path = c.identity.content_dir / "device_info.html";
    }
    if (auto v = s.get<std::string>("device_info_content_path"))
      c.identity.device_info_content_path = resolve(base_dir, *v);
    s.reject_unknown();
  }
  {
    Section s = top.child("simulation");
    auto& st = c.simulation.station;
    read_into<std::uint64_t>(s, "seed", st.seed);
    read_into<int>(s, "column_count", st.column_count);
    read_ms(s, "tick_interval_ms", c.simulation.tick_interval);
    read_into<bool>(s, "auto_refill", st.auto_refill);
    Section p = s.child("profile");
    read_into<double>(p, "dwell_min_s", st.profile.dwell_min_s);
    read_into<double>(p, "dwell_max_s", st.profile.dwell_max_s);
    if (auto v = p.get_list<double>("capacities_kwh")) st.profile.capacities_kwh = *v;
    if (auto v = p.get_list<double>("charge_rates_kw")) st.profile.charge_rates_kw = *v;
    read_into<double>(p, "requested_fraction_min", st.profile.requested_fraction_min);
    read_into<double>(p, "requested_fraction_max", st.profile.requested_fraction_max);
    read_into<double>(p, "idle_gap_min_s", st.profile.idle_gap_min_s);
    read_into<double>(p, "idle_gap_max_s", st.profile.idle_gap_max_s);
    read_into<double>(p, "tariff_per_kwh", st.profile.tariff_per_kwh);
    p.reject_unknown();
    s.reject_unknown();
  }
  {
    Section s = top.child("logging");
    if (auto v = s.get<std::string>("directory")) c.logging.directory = resolve(base_dir, *v);
    read_into<std::string>(s, "file_prefix", c.logging.file_prefix);
    if (auto v = s.get<std::string>("rotation")) {
      if (*v == "daily") c.logging.rotation = log::Rotation::Daily;
      else if (*v == "none") c.logging.rotation = log::Rotation::None;
      else throw InvalidValueError("logging.rotation", "expected 'daily' or 'none'");
    }
    if (auto v = s.get<long long>("buffer_limit")) {
      if (*v < 1) throw InvalidValueError("logging.buffer_limit", "must be at least 1");
      c.logging.buffer_limit = static_cast<std::size_t>(*v);
    }
    read_into<bool>(s, "sync_each_record", c.logging.sync_each_record);
    s.reject_unknown();
  }
  {
    Section s = top.child("timeouts");
    read_ms(s, "shutdown_grace_ms", c.timeouts.shutdown_grace);
    read_ms(s, "http_idle_ms", c.timeouts.http_idle);
    read_ms(s, "http_login_delay_ms", c.timeouts.http_login_delay);
    read_ms(s, "ftp_idle_ms", c.timeouts.ftp_idle);
    read_ms(s, "telnet_idle_ms", c.timeouts.telnet_idle);
    read_ms(s, "telnet_failure_delay_ms", c.timeouts.telnet_failure_delay);
    s.reject_unknown();
  }
  {
    Section s = top.child("enrichment");
    read_into<std::string>(s, "endpoint", c.enrichment.endpoint);
    read_into<double>(s, "requests_per_minute", c.enrichment.requests_per_minute);
    if (auto v = s.get<std::string>("cache_path")) c.enrichment.cache_path = resolve(base_dir, *v);
    if (auto v = s.get<long long>("ttl_hours")) c.enrichment.ttl = std::chrono::hours(*v);
    read_ms(s, "timeout_ms", c.enrichment.timeout);
    s.reject_unknown();
  }
  top.reject_unknown();

  if (apply_env) {
    if (const char* v = std::getenv(kBindAddressEnv); v && *v) c.bind_address = v;
    if (const char* v = std::getenv(kApiKeyEnv); v && *v) c.enrichment.api_key = v;
  }
  validate(c);
  return c;
}

HoneypotConfig load_config(const std::filesystem::path& path, bool apply_env) {
  std::ifstream in(path);
  if (!in || std::filesystem::is_directory(path)) throw ConfigFileMissing(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto config = parse_config(buffer.str(), path.parent_path(), apply_env);
  config.source_path = path;
  return config;
}

}  // namespace evse_decoy::runtime
