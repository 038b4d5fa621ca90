// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evse_decoy/log/record.hpp"

namespace evse_decoy::analysis {

enum class Verdict { Benign, Malicious };
std::string_view to_string(Verdict verdict);

/// Which part of the decoded request a rule's pattern runs against.
enum class RuleTarget { Request, Path, Query, Body };

struct ClassifierRule {
  std::string rule_id;
  std::string family;
  std::string description;
  std::string pattern;
  RuleTarget target = RuleTarget::Request;
  std::regex compiled;
};

class RuleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RuleSet {
 public:
  /// {"version":1,"rules":[{"id","family","description","pattern","target"?}]}
  static RuleSet parse(std::string_view json_text);
  static RuleSet load(const std::filesystem::path& path);

  /// Throws RuleError on a duplicate id or a pattern that does not compile.
  void add(std::string rule_id, std::string family, std::string description, std::string pattern,
           RuleTarget target = RuleTarget::Request);
  /// Rules from `other` appended after ours; ids must stay unique.
  void extend(const RuleSet& other);

  const std::vector<ClassifierRule>& rules() const { return rules_; }
  std::size_t size() const { return rules_.size(); }

 private:
  std::vector<ClassifierRule> rules_;
};

/// Path, query and body after one pass of percent and plus decoding. A part
/// whose encoding is malformed is kept raw.
struct DecodedRequest {
  std::string method;
  std::string path;
  std::string query;
  std::string body;
  bool decode_failed = false;

  /// "METHOD path?query" followed by "\n" and the body when there is one.
  std::string request_line() const;
};

DecodedRequest decode_request(const log::HttpEnvelope& http);

struct RequestClassification {
  std::uint64_t record_id = 0;
  Verdict verdict = Verdict::Benign;
  std::vector<std::string> matched_rules;
  bool decode_failed = false;

  bool operator==(const RequestClassification&) const = default;
};

RequestClassification classify(const log::HttpEnvelope& http, const RuleSet& rules);
/// Throws std::invalid_argument when the record carries no HTTP envelope.
RequestClassification classify_request(const log::InteractionRecord& record, const RuleSet& rules);
/// One classification per HTTP-borne record, in input order.
std::vector<RequestClassification> classify_all(const std::vector<log::InteractionRecord>& records,
                                                const RuleSet& rules);

/// The rule set shipped in data/rules.json, compiled in for tools that run
/// without a data directory.
const RuleSet& builtin_rules();
extern const std::string_view kBuiltinRulesJson;

}  // namespace evse_decoy::analysis
