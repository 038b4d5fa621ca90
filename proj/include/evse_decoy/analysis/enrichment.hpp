// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "evse_decoy/log/record.hpp"

namespace evse_decoy::analysis {

enum class ReputationLabel { Malicious, Benign, Unknown };
std::string_view to_string(ReputationLabel label);
std::optional<ReputationLabel> parse_label(std::string_view text);

struct IpEnrichment {
  std::string ip;
  ReputationLabel label = ReputationLabel::Unknown;
  std::optional<std::string> organization;
  std::optional<std::string> actor;
  std::optional<std::string> country;
  log::Timestamp fetched_at{};
  /// Set when the provider could not answer. Never stored in the cache.
  bool transient_failure = false;

  bool operator==(const IpEnrichment&) const = default;
};

enum class LookupStatus { Found, NotSeen, Transient };

struct LookupResult {
  LookupStatus status = LookupStatus::Transient;
  IpEnrichment data;  // meaningful for Found
  std::string error;  // meaningful for Transient
};

class ReputationProvider {
 public:
  virtual ~ReputationProvider() = default;
  virtual LookupResult lookup(const std::string& ip) = 0;
};

struct GreyNoiseOptions {
  std::string endpoint = "https://api.greynoise.io";
  std::string api_key;
  std::chrono::milliseconds timeout{10'000};
  double requests_per_minute = 60.0;
};

/// GreyNoise v2 context lookups (GET /v2/noise/context/<ip>, header "key").
/// Requests are spaced to honour requests_per_minute.
class GreyNoiseProvider : public ReputationProvider {
 public:
  explicit GreyNoiseProvider(GreyNoiseOptions options);
  LookupResult lookup(const std::string& ip) override;

 private:
  GreyNoiseOptions options_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
};

/// Decodes a GreyNoise context body. Exposed for tests.
LookupResult parse_greynoise_context(const std::string& ip, std::string_view body,
                                     log::Timestamp fetched_at);

class CacheError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Single-file JSON store:
/// {"version":1,"entries":{"<ip>":{"label","organization","actor","country","fetched_at"}}}
class EnrichmentCache {
 public:
  EnrichmentCache() = default;
  explicit EnrichmentCache(std::filesystem::path path) : path_(std::move(path)) {}
  EnrichmentCache(EnrichmentCache&& other) noexcept;

  /// A missing file is an empty cache. A malformed one throws CacheError.
  static EnrichmentCache load(const std::filesystem::path& path);
  /// Write-to-temp then rename. No-op for an in-memory cache.
  void save() const;

  std::optional<IpEnrichment> find(const std::string& ip) const;
  void put(const IpEnrichment& entry);
  std::size_t size() const;
  std::vector<IpEnrichment> entries() const;

  std::string to_json() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, IpEnrichment> entries_;
};

struct EnrichOptions {
  std::chrono::seconds ttl{std::chrono::hours(24 * 7)};
  bool cache_only = false;
  std::function<log::Timestamp()> clock = log::now_ms;
};

/// Cache first, provider second. Never throws for provider trouble: such
/// failures come back as Unknown with transient_failure set.
IpEnrichment enrich_ip(const std::string& ip, ReputationProvider* provider, EnrichmentCache& cache,
                       const EnrichOptions& options = {});

using OrganizationCount = std::pair<std::string, std::uint64_t>;

/// Organizations of malicious IPs by distinct-IP count, descending, ties by
/// name. At most k entries.
std::vector<OrganizationCount> top_organizations(const std::vector<IpEnrichment>& enrichments,
                                                 std::size_t k);

}  // namespace evse_decoy::analysis
