// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/analysis/aggregate.hpp"

#include <stdexcept>
#include <unordered_map>

#include "evse_decoy/net/socket.hpp"

namespace evse_decoy::analysis {

double AggregateReport::label_share(ReputationLabel label) const {
  if (ip_counts.empty()) return 0.0;
  auto it = label_counts.find(std::string(to_string(label)));
  std::uint64_t n = it == label_counts.end() ? 0 : it->second;
  return 100.0 * static_cast<double>(n) / static_cast<double>(ip_counts.size());
}

AggregateReport aggregate(const std::vector<log::InteractionRecord>& records,
                          const std::vector<RequestClassification>& classifications,
                          const std::vector<IpEnrichment>& enrichments, std::size_t top_k) {
  std::unordered_map<std::uint64_t, const RequestClassification*> by_id;
  for (const auto& c : classifications) by_id.emplace(c.record_id, &c);

  AggregateReport report;
  for (const auto& record : records) {
    ++report.total_records;
    if (record.category() != log::Category::System) ++report.ip_counts[net::canonical_ip(record.source_ip)];

    if (const auto* http = record.http()) {
      auto it = by_id.find(record.record_id);
      if (it == by_id.end())
        throw std::invalid_argument("no classification for record " + std::to_string(record.record_id));
      ++report.http_requests;
      ++report.method_counts[http->method];
      if (it->second->verdict == Verdict::Malicious) {
        ++report.malicious_requests;
        ++report.malicious_method_counts[http->method];
        for (const auto& rule : it->second->matched_rules) ++report.rule_hits[rule];
      }
    }
    if (const auto* timing = std::get_if<log::TimingPayload>(&record.payload)) {
      if (timing->duration_ms) {
        auto& dwell = report.time_on_page[timing->page];
        dwell.total_ms += *timing->duration_ms;
        ++dwell.samples;
      }
    }
  }

  std::map<std::string, const IpEnrichment*> enrichment_by_ip;
  for (const auto& e : enrichments) enrichment_by_ip[net::canonical_ip(e.ip)] = &e;

  std::vector<IpEnrichment> seen;
  for (const auto& [ip, count] : report.ip_counts) {
    auto it = enrichment_by_ip.find(ip);
    if (it == enrichment_by_ip.end()) {
      ++report.label_counts[std::string(to_string(ReputationLabel::Unknown))];
      continue;
    }
    const IpEnrichment& e = *it->second;
    ++report.label_counts[std::string(to_string(e.label))];
    if (e.country) ++report.country_histogram[*e.country];
    seen.push_back(e);
    seen.back().ip = ip;
  }
  report.top_organizations = top_organizations(seen, top_k);
  return report;
}

}  // namespace evse_decoy::analysis
