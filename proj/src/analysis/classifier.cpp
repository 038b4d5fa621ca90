// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/analysis/classifier.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "evse_decoy/util/url.hpp"

namespace evse_decoy::analysis {

using nlohmann::json;

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::Malicious ? "Malicious" : "Benign";
}

namespace {

RuleTarget parse_target(const std::string& text) {
  if (text == "request") return RuleTarget::Request;
  if (text == "path") return RuleTarget::Path;
  if (text == "query") return RuleTarget::Query;
  if (text == "body") return RuleTarget::Body;
  throw RuleError("unknown rule target '" + text + "'");
}

std::string decode_part(std::string_view raw, bool& failed) {
  auto decoded = util::percent_decode(raw, true);
  if (!decoded.well_formed) {
    failed = true;
    return std::string(raw);
  }
  return std::move(decoded.text);
}

}  // namespace

RuleSet RuleSet::parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw RuleError(std::string("rules: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array())
    throw RuleError("rules: expected an object with a \"rules\" array");
  if (doc.contains("version") && doc["version"] != 1) throw RuleError("rules: unsupported version");

  RuleSet set;
  for (const auto& entry : doc["rules"]) {
    try {
      set.add(entry.at("id").get<std::string>(), entry.value("family", ""),
              entry.value("description", ""), entry.at("pattern").get<std::string>(),
              parse_target(entry.value("target", "request")));
    } catch (const json::exception& e) {
      throw RuleError(std::string("rules: ") + e.what());
    }
  }
  return set;
}

RuleSet RuleSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuleError("cannot read rule file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

void RuleSet::add(std::string rule_id, std::string family, std::string description,
                  std::string pattern, RuleTarget target) {
  if (rule_id.empty()) throw RuleError("rule id must not be empty");
  if (std::any_of(rules_.begin(), rules_.end(),
                  [&](const ClassifierRule& r) { return r.rule_id == rule_id; }))
    throw RuleError("duplicate rule id '" + rule_id + "'");
  ClassifierRule rule{std::move(rule_id), std::move(family), std::move(description),
                      std::move(pattern), target, {}};
  try {
    rule.compiled = std::regex(rule.pattern, std::regex::ECMAScript | std::regex::icase |
                                                 std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw RuleError("rule '" + rule.rule_id + "': bad pattern: " + e.what());
  }
  rules_.push_back(std::move(rule));
}

void RuleSet::extend(const RuleSet& other) {
  for (const auto& r : other.rules_) add(r.rule_id, r.family, r.description, r.pattern, r.target);
}

std::string DecodedRequest::request_line() const {
  std::string line = method + " " + path;
  if (!query.empty()) line += "?" + query;
  if (!body.empty()) line += "\n" + body;
  return line;
}

DecodedRequest decode_request(const log::HttpEnvelope& http) {
  DecodedRequest out;
  out.method = http.method;
  out.path = decode_part(http.path, out.decode_failed);
  out.query = decode_part(http.query, out.decode_failed);
  out.body = decode_part(http.body_excerpt, out.decode_failed);
  return out;
}

RequestClassification classify(const log::HttpEnvelope& http, const RuleSet& rules) {
  DecodedRequest req = decode_request(http);
  std::string line = req.request_line();

  RequestClassification out;
  out.decode_failed = req.decode_failed;
  for (const auto& rule : rules.rules()) {
    const std::string* subject = &line;
    switch (rule.target) {
      case RuleTarget::Request: break;
      case RuleTarget::Path: subject = &req.path; break;
      case RuleTarget::Query: subject = &req.query; break;
      case RuleTarget::Body: subject = &req.body; break;
    }
    if (std::regex_search(*subject, rule.compiled)) out.matched_rules.push_back(rule.rule_id);
  }
  out.verdict = out.matched_rules.empty() ? Verdict::Benign : Verdict::Malicious;
  return out;
}

RequestClassification classify_request(const log::InteractionRecord& record, const RuleSet& rules) {
  const auto* http = record.http();
  if (!http) throw std::invalid_argument("record " + std::to_string(record.record_id) +
                                         " is not an HTTP request");
  auto out = classify(*http, rules);
  out.record_id = record.record_id;
  return out;
}

std::vector<RequestClassification> classify_all(const std::vector<log::InteractionRecord>& records,
                                                const RuleSet& rules) {
  std::vector<RequestClassification> out;
  for (const auto& record : records) {
    if (record.http()) out.push_back(classify_request(record, rules));
  }
  return out;
}

const RuleSet& builtin_rules() {
  static const RuleSet rules = RuleSet::parse(kBuiltinRulesJson);
  return rules;
}

}  // namespace evse_decoy::analysis
