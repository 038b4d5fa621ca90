// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "evse_decoy/ftp/decoy_ftp.hpp"
#include "evse_decoy/http/decoy_http.hpp"
#include "evse_decoy/log/interaction_log.hpp"
#include "evse_decoy/sim/charging.hpp"
#include "evse_decoy/telnet/decoy_telnet.hpp"

namespace evse_decoy::runtime {

inline constexpr const char* kBindAddressEnv = "EVSE_DECOY_BIND_ADDRESS";
inline constexpr const char* kApiKeyEnv = "GREYNOISE_API_KEY";

struct ServicePorts {
  int http_login = 80;
  int http_app = 5000;
  int ftp = 21;
  int telnet = 23;
};

struct Identity {
  std::string http_server_string = "Boa/0.94.14rc21";
  std::string ftp_banner = ftp::FtpOptions{}.banner;
  std::string telnet_banner = telnet::TelnetOptions{}.banner;
  std::string telnet_login_prompt = telnet::TelnetOptions{}.login_prompt;
  std::filesystem::path content_dir = "content";
  std::filesystem::path device_info_content_path = "content/device_info.html";
};

struct SimulationSettings {
  sim::StationConfig station;
  std::chrono::milliseconds tick_interval{1000};
};

struct Timeouts {
  std::chrono::milliseconds shutdown_grace{10'000};
  std::chrono::milliseconds http_idle{15'000};
  std::chrono::milliseconds http_login_delay{800};
  std::chrono::milliseconds ftp_idle{120'000};
  std::chrono::milliseconds telnet_idle{60'000};
  std::chrono::milliseconds telnet_failure_delay{1000};
};

struct EnrichmentSettings {
  std::string endpoint = "https://api.greynoise.io";
  double requests_per_minute = 60.0;
  std::filesystem::path cache_path = "enrichment-cache.json";
  std::chrono::seconds ttl{std::chrono::hours(24 * 7)};
  std::chrono::milliseconds timeout{10'000};
  /// Filled from the environment only, never from the file.
  std::string api_key;
};

struct HoneypotConfig {
  std::string bind_address;
  ServicePorts service_ports;
  Identity identity;
  SimulationSettings simulation;
  log::LogOptions logging;
  Timeouts timeouts;
  EnrichmentSettings enrichment;
  std::size_t max_connections_per_service = 256;
  std::filesystem::path source_path;
};

/// Base of every configuration failure. `key()` is the dotted path of the
/// offending setting, empty when the failure is not tied to one key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& message);
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

class ConfigFileMissing : public ConfigError {
 public:
  explicit ConfigFileMissing(const std::filesystem::path& path);
};

class ConfigSyntaxError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DuplicatePortError : public ConfigError {
 public:
  DuplicatePortError(const std::string& first_key, const std::string& second_key, int port);
  const std::string& other_key() const { return other_key_; }

 private:
  std::string other_key_;
};

class InvalidValueError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class UnknownKeyError : public ConfigError {
 public:
  explicit UnknownKeyError(const std::string& key);
};

class MissingKeyError : public ConfigError {
 public:
  explicit MissingKeyError(const std::string& key);
};

/// Parses YAML text. Relative paths resolve against `base_dir`. Environment
/// overrides are applied when `apply_env` is set.
HoneypotConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir,
                            bool apply_env = true);
HoneypotConfig load_config(const std::filesystem::path& path, bool apply_env = true);

/// Invariant checks shared by both loaders; callable on hand-built configs.
void validate(const HoneypotConfig& config);

}  // namespace evse_decoy::runtime
