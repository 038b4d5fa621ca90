// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "evse_decoy/analysis/classifier.hpp"
#include "evse_decoy/analysis/enrichment.hpp"
#include "evse_decoy/log/record.hpp"

namespace evse_decoy::analysis {

struct PageDwell {
  std::int64_t total_ms = 0;
  std::uint64_t samples = 0;

  double mean_ms() const { return samples ? static_cast<double>(total_ms) / samples : 0.0; }
  bool operator==(const PageDwell&) const = default;
};

struct AggregateReport {
  std::uint64_t total_records = 0;
  std::uint64_t http_requests = 0;
  std::uint64_t malicious_requests = 0;
  std::map<std::string, std::uint64_t> method_counts;
  std::map<std::string, std::uint64_t> malicious_method_counts;
  /// Rule id to number of requests it matched.
  std::map<std::string, std::uint64_t> rule_hits;
  std::map<std::string, PageDwell> time_on_page;
  /// Canonical source IP to record count. System records are excluded.
  std::map<std::string, std::uint64_t> ip_counts;
  /// Unique IPs per reputation label. IPs without an enrichment count as unknown.
  std::map<std::string, std::uint64_t> label_counts;
  std::vector<OrganizationCount> top_organizations;
  std::map<std::string, std::uint64_t> country_histogram;

  std::uint64_t unique_ips() const { return ip_counts.size(); }
  /// Percentage of unique IPs carrying `label`.
  double label_share(ReputationLabel label) const;
  bool operator==(const AggregateReport&) const = default;
};

/// Throws std::invalid_argument if an HTTP-borne record has no classification.
AggregateReport aggregate(const std::vector<log::InteractionRecord>& records,
                          const std::vector<RequestClassification>& classifications,
                          const std::vector<IpEnrichment>& enrichments = {},
                          std::size_t top_k = 5);

}  // namespace evse_decoy::analysis
