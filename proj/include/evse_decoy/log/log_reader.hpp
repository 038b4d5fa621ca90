// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "evse_decoy/log/record.hpp"

namespace evse_decoy::log {

struct LogFilter {
  std::optional<Category> category;
  std::optional<std::string> source_ip;
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // exclusive

  bool matches(const InteractionRecord& record) const;
};

struct LogReadResult {
  std::vector<InteractionRecord> records;
  std::vector<std::string> warnings;
};

/// A line other than a file's last one failed to parse.
class LogCorruption : public std::runtime_error {
 public:
  LogCorruption(std::filesystem::path file, std::size_t line_number, const std::string& reason);
  const std::filesystem::path& file() const { return file_; }
  std::size_t line_number() const { return line_number_; }

 private:
  std::filesystem::path file_;
  std::size_t line_number_;
};

/// "<prefix>.jsonl" and "<prefix>-YYYY-MM-DD.jsonl" in name order.
std::vector<std::filesystem::path> log_files(const std::filesystem::path& directory,
                                             const std::string& prefix = "interactions");

/// Id of the last parseable record in a file, reading from the end.
std::optional<std::uint64_t> last_record_id(const std::filesystem::path& file);

/// Reads one log file, or every log file in a directory. A bad final line is
/// treated as a crash artifact: skipped, with a warning.
LogReadResult read_log(const std::filesystem::path& path, const LogFilter& filter = {},
                       const std::string& prefix = "interactions");

}  // namespace evse_decoy::log
