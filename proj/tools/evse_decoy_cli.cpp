// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "evse_decoy/analysis/aggregate.hpp"
#include "evse_decoy/analysis/classifier.hpp"
#include "evse_decoy/analysis/enrichment.hpp"
#include "evse_decoy/analysis/report.hpp"
#include "evse_decoy/log/log_reader.hpp"
#include "evse_decoy/net/socket.hpp"
#include "evse_decoy/runtime/config.hpp"
#include "evse_decoy/runtime/daemon.hpp"

namespace {

using namespace evse_decoy;

struct LogArgs {
  std::string log_path;
  std::string prefix = "interactions";
  std::string rules_path;
};

void add_log_args(CLI::App* cmd, LogArgs& args) {
  cmd->add_option("--log", args.log_path, "Log file or directory")->required();
  cmd->add_option("--prefix", args.prefix, "Log file prefix when --log is a directory");
  cmd->add_option("--rules", args.rules_path, "Rule file (defaults to the built-in rules)");
}

log::LogReadResult read_records(const LogArgs& args) {
  auto result = log::read_log(args.log_path, {}, args.prefix);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  return result;
}

analysis::RuleSet rules_for(const LogArgs& args) {
  return args.rules_path.empty() ? analysis::builtin_rules() : analysis::RuleSet::load(args.rules_path);
}

int cmd_validate(const std::string& path) {
  auto c = runtime::load_config(path);
  std::cout << "config OK: " << path << "\n"
            << "  bind_address " << c.bind_address << "\n"
            << "  ports http_login=" << c.service_ports.http_login << " http_app=" << c.service_ports.http_app
            << " ftp=" << c.service_ports.ftp << " telnet=" << c.service_ports.telnet << "\n"
            << "  columns " << c.simulation.station.column_count << ", seed " << c.simulation.station.seed
            << ", tick " << c.simulation.tick_interval.count() << " ms\n"
            << "  log directory " << c.logging.directory.string() << "\n";
  return 0;
}

int cmd_classify(const LogArgs& args) {
  auto records = read_records(args).records;
  std::cout << analysis::render_classifications(analysis::classify_all(records, rules_for(args)));
  return 0;
}

int cmd_report(const LogArgs& args, const std::string& cache_path, const std::string& format,
               std::size_t top) {
  auto records = read_records(args).records;
  auto classifications = analysis::classify_all(records, rules_for(args));
  std::vector<analysis::IpEnrichment> enrichments;
  if (!cache_path.empty()) enrichments = analysis::EnrichmentCache::load(cache_path).entries();
  auto report = analysis::aggregate(records, classifications, enrichments, top);
  if (format == "text" || format == "both") std::cout << analysis::render_text(report);
  if (format == "both") std::cout << "\n";
  if (format == "table" || format == "both") std::cout << analysis::render_table(report);
  return 0;
}

struct EnrichArgs {
  std::string log_path;
  std::string prefix = "interactions";
  std::vector<std::string> ips;
  std::string config_path;
  std::string cache_path;
  std::string endpoint;
  double rate = 0;
  bool cache_only = false;
};

int cmd_enrich(const EnrichArgs& args) {
  runtime::EnrichmentSettings settings;
  if (!args.config_path.empty()) settings = runtime::load_config(args.config_path).enrichment;
  if (const char* key = std::getenv(runtime::kApiKeyEnv); key && *key) settings.api_key = key;
  if (!args.cache_path.empty()) settings.cache_path = args.cache_path;
  if (!args.endpoint.empty()) settings.endpoint = args.endpoint;
  if (args.rate > 0) settings.requests_per_minute = args.rate;

  std::set<std::string> ips;
  for (const auto& ip : args.ips) ips.insert(net::canonical_ip(ip));
  if (!args.log_path.empty()) {
    auto result = log::read_log(args.log_path, {}, args.prefix);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& r : result.records) {
      if (r.category() != log::Category::System) ips.insert(net::canonical_ip(r.source_ip));
    }
  }

  bool cache_only = args.cache_only || settings.api_key.empty();
  if (cache_only && !args.cache_only)
    std::cerr << "note: " << runtime::kApiKeyEnv << " is not set, using the cache only\n";

  auto cache = analysis::EnrichmentCache::load(settings.cache_path);
  analysis::GreyNoiseProvider provider({settings.endpoint, settings.api_key, settings.timeout,
                                        settings.requests_per_minute});
  analysis::EnrichOptions options;
  options.ttl = settings.ttl;
  options.cache_only = cache_only;

  std::size_t transient = 0;
  std::cout << "ip\tlabel\torganization\tactor\tcountry\tstatus\n";
  for (const auto& ip : ips) {
    auto e = analysis::enrich_ip(ip, &provider, cache, options);
    if (e.transient_failure) ++transient;
    std::cout << ip << "\t" << analysis::to_string(e.label) << "\t" << e.organization.value_or("-") << "\t"
              << e.actor.value_or("-") << "\t" << e.country.value_or("-") << "\t"
              << (e.transient_failure ? "transient-failure" : "ok") << "\n";
  }
  cache.save();
  if (transient) std::cerr << transient << " lookups failed transiently and were not cached\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EV charging station decoy daemon and log analysis toolkit", "evse-decoy"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Start the decoy services");
  run->add_option("--config", config_path, "YAML configuration file")->required();
  auto* validate = app.add_subcommand("validate", "Check a configuration file");
  validate->add_option("--config", config_path, "YAML configuration file")->required();
  auto* version = app.add_subcommand("version", "Print the version");

  LogArgs log_args;
  auto* classify = app.add_subcommand("classify", "Classify HTTP requests in a log (JSON lines)");
  add_log_args(classify, log_args);

  std::string cache_path;
  std::string format = "text";
  std::size_t top = 5;
  auto* report = app.add_subcommand("report", "Aggregate statistics for a log");
  add_log_args(report, log_args);
  report->add_option("--cache", cache_path, "Enrichment cache for label, organization and country data");
  report->add_option("--format", format, "text, table or both")
      ->check(CLI::IsMember({"text", "table", "both"}));
  report->add_option("--top", top, "Number of organizations to rank");

  EnrichArgs enrich_args;
  auto* enrich = app.add_subcommand("enrich", "Look up source IP reputation");
  enrich->add_option("--log", enrich_args.log_path, "Log file or directory to take IPs from");
  enrich->add_option("--prefix", enrich_args.prefix, "Log file prefix when --log is a directory");
  enrich->add_option("--ip", enrich_args.ips, "IP address to look up (repeatable)");
  enrich->add_option("--config", enrich_args.config_path, "Take enrichment settings from this config");
  enrich->add_option("--cache", enrich_args.cache_path, "Cache file");
  enrich->add_option("--endpoint", enrich_args.endpoint, "Provider base URL");
  enrich->add_option("--rate", enrich_args.rate, "Provider requests per minute");
  enrich->add_flag("--cache-only", enrich_args.cache_only, "Never contact the provider");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*version) {
      std::cout << "evse-decoy " << runtime::version() << "\n";
      return 0;
    }
    if (*validate) return cmd_validate(config_path);
    if (*run) return runtime::run_until_signal(runtime::load_config(config_path));
    if (*classify) return cmd_classify(log_args);
    if (*report) return cmd_report(log_args, cache_path, format, top);
    if (*enrich) {
      if (enrich_args.log_path.empty() && enrich_args.ips.empty()) {
        std::cerr << "enrich: give --log or --ip\n";
        return 1;
      }
      return cmd_enrich(enrich_args);
    }
  } catch (const runtime::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return runtime::kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
