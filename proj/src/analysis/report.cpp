// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/analysis/report.hpp"

#include <cstdio>

#include <json.hpp>

namespace evse_decoy::analysis {

namespace {

std::string fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

const ReputationLabel kLabels[] = {ReputationLabel::Malicious, ReputationLabel::Benign,
                                   ReputationLabel::Unknown};

std::uint64_t count_of(const std::map<std::string, std::uint64_t>& m, const std::string& key) {
  auto it = m.find(key);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

std::string render_text(const AggregateReport& r) {
  std::string out;
  out += "Records: " + std::to_string(r.total_records) + "\n";
  out += "HTTP requests: " + std::to_string(r.http_requests) + " (" +
         std::to_string(r.malicious_requests) + " malicious)\n";
  out += "Unique source IPs: " + std::to_string(r.unique_ips()) + "\n";

  out += "\nRequests by method\n";
  for (const auto& [method, n] : r.method_counts)
    out += "  " + method + ": " + std::to_string(n) + " total, " +
           std::to_string(count_of(r.malicious_method_counts, method)) + " malicious\n";

  if (!r.rule_hits.empty()) {
    out += "\nRule hits\n";
    for (const auto& [rule, n] : r.rule_hits) out += "  " + rule + ": " + std::to_string(n) + "\n";
  }

  if (!r.time_on_page.empty()) {
    out += "\nMean time on page\n";
    for (const auto& [page, d] : r.time_on_page)
      out += "  " + page + ": " + fixed(d.mean_ms(), 1) + " ms over " + std::to_string(d.samples) +
             " beacons\n";
  }

  out += "\nSource IP labels\n";
  for (auto label : kLabels) {
    std::string name(to_string(label));
    out += "  " + name + ": " + std::to_string(count_of(r.label_counts, name)) + " (" +
           fixed(r.label_share(label), 1) + "%)\n";
  }

  if (!r.top_organizations.empty()) {
    out += "\nTop organizations by malicious IPs\n";
    int rank = 1;
    for (const auto& [org, n] : r.top_organizations)
      out += "  " + std::to_string(rank++) + ". " + org + ": " + std::to_string(n) + "\n";
  }

  if (!r.country_histogram.empty()) {
    out += "\nCountries\n";
    for (const auto& [cc, n] : r.country_histogram) out += "  " + cc + ": " + std::to_string(n) + "\n";
  }
  return out;
}

std::string render_table(const AggregateReport& r) {
  std::string out = "section\tkey\tvalue\n";
  auto row = [&](const std::string& section, const std::string& key, const std::string& value) {
    out += section + "\t" + key + "\t" + value + "\n";
  };
  row("summary", "records", std::to_string(r.total_records));
  row("summary", "http_requests", std::to_string(r.http_requests));
  row("summary", "malicious_requests", std::to_string(r.malicious_requests));
  row("summary", "unique_ips", std::to_string(r.unique_ips()));
  for (const auto& [m, n] : r.method_counts) row("method", m, std::to_string(n));
  for (const auto& [m, n] : r.malicious_method_counts) row("malicious_method", m, std::to_string(n));
  for (const auto& [rule, n] : r.rule_hits) row("rule", rule, std::to_string(n));
  for (const auto& [page, d] : r.time_on_page) row("mean_time_on_page_ms", page, fixed(d.mean_ms(), 3));
  for (const auto& [ip, n] : r.ip_counts) row("ip", ip, std::to_string(n));
  for (auto label : kLabels) {
    std::string name(to_string(label));
    row("label_count", name, std::to_string(count_of(r.label_counts, name)));
    row("label_share_pct", name, fixed(r.label_share(label), 2));
  }
  for (const auto& [org, n] : r.top_organizations) row("top_organization", org, std::to_string(n));
  for (const auto& [cc, n] : r.country_histogram) row("country", cc, std::to_string(n));
  return out;
}

std::string render_classifications(const std::vector<RequestClassification>& classifications) {
  std::string out;
  for (const auto& c : classifications) {
    nlohmann::ordered_json line;
    line["id"] = c.record_id;
    line["verdict"] = std::string(to_string(c.verdict));
    line["rules"] = c.matched_rules;
    line["decode_failed"] = c.decode_failed;
    out += line.dump() + "\n";
  }
  return out;
}

}  // namespace evse_decoy::analysis
