// SPDX-License-Identifier: Apache-2.0
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "evse_decoy/analysis/enrichment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace evse_decoy::analysis {

using nlohmann::json;

std::string_view to_string(ReputationLabel label) {
  switch (label) {
    case ReputationLabel::Malicious: return "malicious";
    case ReputationLabel::Benign: return "benign";
    case ReputationLabel::Unknown: break;
  }
  return "unknown";
}

std::optional<ReputationLabel> parse_label(std::string_view text) {
  if (text == "malicious") return ReputationLabel::Malicious;
  if (text == "benign") return ReputationLabel::Benign;
  if (text == "unknown") return ReputationLabel::Unknown;
  return std::nullopt;
}

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) return std::nullopt;
  return it->get<std::string>();
}

void put_optional(json& obj, const char* key, const std::optional<std::string>& value) {
  obj[key] = value ? json(*value) : json(nullptr);
}

LookupResult transient(std::string error) {
  LookupResult r;
  r.status = LookupStatus::Transient;
  r.error = std::move(error);
  return r;
}

}  // namespace

LookupResult parse_greynoise_context(const std::string& ip, std::string_view body,
                                     log::Timestamp fetched_at) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return transient("unparseable provider response");
  if (!doc.value("seen", false)) return {LookupStatus::NotSeen, {}, {}};

  LookupResult r;
  r.status = LookupStatus::Found;
  r.data.ip = ip;
  r.data.fetched_at = fetched_at;
  r.data.label = parse_label(doc.value("classification", "unknown")).value_or(ReputationLabel::Unknown);
  r.data.actor = optional_string(doc, "actor");
  if (r.data.actor && *r.data.actor == "unknown") r.data.actor.reset();
  if (auto meta = doc.find("metadata"); meta != doc.end() && meta->is_object()) {
    r.data.organization = optional_string(*meta, "organization");
    r.data.country = optional_string(*meta, "country_code");
  }
  return r;
}

GreyNoiseProvider::GreyNoiseProvider(GreyNoiseOptions options) : options_(std::move(options)) {}

LookupResult GreyNoiseProvider::lookup(const std::string& ip) {
  {
    std::lock_guard lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    if (next_slot_ > now) std::this_thread::sleep_until(next_slot_);
    auto spacing = options_.requests_per_minute > 0
                       ? std::chrono::duration<double>(60.0 / options_.requests_per_minute)
                       : std::chrono::duration<double>(0);
    next_slot_ = std::max(now, next_slot_) +
                 std::chrono::duration_cast<std::chrono::steady_clock::duration>(spacing);
  }

  std::string base = options_.endpoint;
  std::string prefix;
  if (auto scheme = base.find("://"); scheme != std::string::npos) {
    if (auto slash = base.find('/', scheme + 3); slash != std::string::npos) {
      prefix = base.substr(slash);
      base.resize(slash);
    }
  }
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(base);
  auto secs = [](std::chrono::milliseconds ms) {
    return std::make_pair(ms.count() / 1000, (ms.count() % 1000) * 1000);
  };
  auto [s, us] = secs(options_.timeout);
  client.set_connection_timeout(s, us);
  client.set_read_timeout(s, us);
  client.set_write_timeout(s, us);

  httplib::Headers headers{{"Accept", "application/json"}, {"key", options_.api_key}};
  auto res = client.Get(prefix + "/v2/noise/context/" + ip, headers);
  if (!res) return transient("provider unreachable: " + httplib::to_string(res.error()));
  if (res->status == 404) return {LookupStatus::NotSeen, {}, {}};
  if (res->status != 200) return transient("provider status " + std::to_string(res->status));
  return parse_greynoise_context(ip, res->body, log::now_ms());
}

EnrichmentCache EnrichmentCache::load(const std::filesystem::path& path) {
  EnrichmentCache cache(path);
  std::ifstream in(path);
  if (!in) {
    if (std::filesystem::exists(path)) throw CacheError("cannot read cache " + path.string());
    return cache;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  json doc = json::parse(buffer.str(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object() || doc.value("version", 0) != 1 ||
      !doc.contains("entries") || !doc["entries"].is_object())
    throw CacheError("malformed cache file " + path.string());

  for (const auto& [ip, e] : doc["entries"].items()) {
    IpEnrichment entry;
    entry.ip = ip;
    auto label = e.is_object() ? parse_label(e.value("label", "")) : std::nullopt;
    auto fetched = e.is_object() ? log::parse_timestamp(e.value("fetched_at", "")) : std::nullopt;
    if (!label || !fetched) throw CacheError("malformed cache entry for " + ip);
    entry.label = *label;
    entry.fetched_at = *fetched;
    entry.organization = optional_string(e, "organization");
    entry.actor = optional_string(e, "actor");
    entry.country = optional_string(e, "country");
    cache.entries_.emplace(ip, std::move(entry));
  }
  return cache;
}

EnrichmentCache::EnrichmentCache(EnrichmentCache&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  path_ = std::move(other.path_);
  entries_ = std::move(other.entries_);
}

std::string EnrichmentCache::to_json() const {
  std::lock_guard lock(mutex_);
  json entries = json::object();
  for (const auto& [ip, e] : entries_) {
    json item;
    item["label"] = std::string(to_string(e.label));
    put_optional(item, "organization", e.organization);
    put_optional(item, "actor", e.actor);
    put_optional(item, "country", e.country);
    item["fetched_at"] = log::format_timestamp(e.fetched_at);
    entries[ip] = std::move(item);
  }
  return json{{"version", 1}, {"entries", std::move(entries)}}.dump(2) + "\n";
}

void EnrichmentCache::save() const {
  if (path_.empty()) return;
  std::string text = to_json();
  auto tmp = path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << text;
    out.flush();
    if (!out) throw CacheError("cannot write cache " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path_, ec);
  if (ec) throw CacheError("cannot replace cache " + path_.string() + ": " + ec.message());
}

std::optional<IpEnrichment> EnrichmentCache::find(const std::string& ip) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(ip);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EnrichmentCache::put(const IpEnrichment& entry) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(entry.ip, entry);
}

std::size_t EnrichmentCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::vector<IpEnrichment> EnrichmentCache::entries() const {
  std::lock_guard lock(mutex_);
  std::vector<IpEnrichment> out;
  for (const auto& [ip, e] : entries_) out.push_back(e);
  return out;
}

IpEnrichment enrich_ip(const std::string& ip, ReputationProvider* provider, EnrichmentCache& cache,
                       const EnrichOptions& options) {
  auto now = options.clock();
  auto cached = cache.find(ip);
  if (cached && now - cached->fetched_at < options.ttl) return *cached;

  IpEnrichment unknown;
  unknown.ip = ip;
  unknown.fetched_at = now;
  if (options.cache_only || !provider) return unknown;

  LookupResult result;
  try {
    result = provider->lookup(ip);
  } catch (const std::exception& e) {
    result = transient(e.what());
  }
  switch (result.status) {
    case LookupStatus::Found:
      result.data.ip = ip;
      result.data.fetched_at = now;
      result.data.transient_failure = false;
      cache.put(result.data);
      return result.data;
    case LookupStatus::NotSeen:
      cache.put(unknown);
      return unknown;
    case LookupStatus::Transient:
      break;
  }
  unknown.transient_failure = true;
  return unknown;
}

std::vector<OrganizationCount> top_organizations(const std::vector<IpEnrichment>& enrichments,
                                                 std::size_t k) {
  std::map<std::string, std::set<std::string>> ips_by_org;
  for (const auto& e : enrichments) {
    if (e.label == ReputationLabel::Malicious && e.organization)
      ips_by_org[*e.organization].insert(e.ip);
  }
  std::vector<OrganizationCount> ranked;
  for (const auto& [org, ips] : ips_by_org) ranked.emplace_back(org, ips.size());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

}  // namespace evse_decoy::analysis
