// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>

#include "evse_decoy/log/record.hpp"

namespace evse_decoy::log {

enum class Rotation { None, Daily };

struct LogOptions {
  std::filesystem::path directory = "logs";
  std::string file_prefix = "interactions";
  Rotation rotation = Rotation::Daily;
  /// Lines held in memory while the destination is unwritable.
  std::size_t buffer_limit = 10000;
  bool sync_each_record = false;
  /// Raised when the destination becomes unwritable or a torn tail is repaired.
  std::function<void(const std::string&)> alarm;
  /// Test hook; defaults to the system clock.
  std::function<Timestamp()> clock;
};

struct LogEvent {
  int port = 0;
  std::string source_ip;
  Payload payload;
};

/// File name for a record written at `ts` under the given policy.
std::string log_file_name(const std::string& prefix, Rotation rotation, Timestamp ts);

/// Append-only JSON-lines writer shared by every service.
///
/// Each record is encoded and written with a single write(2) on an O_APPEND
/// descriptor while holding the appender lock, so lines never interleave.
/// When the destination fails, lines queue in memory up to buffer_limit; past
/// that the oldest are dropped and a System "records_dropped" record is
/// written once the destination recovers.
class InteractionLog {
 public:
  explicit InteractionLog(LogOptions options);
  ~InteractionLog();

  InteractionLog(const InteractionLog&) = delete;
  InteractionLog& operator=(const InteractionLog&) = delete;

  std::uint64_t record(LogEvent event);
  /// Retries buffered lines. Returns true when nothing is left pending.
  bool flush();
  void close();

  bool healthy() const;
  std::size_t buffered() const;
  std::uint64_t dropped_total() const;
  std::uint64_t last_record_id() const;
  std::optional<std::filesystem::path> current_file() const;

 private:
  struct PendingLine {
    std::uint64_t id;
    Timestamp timestamp;
    std::string line;
  };

  Timestamp now() const;
  bool drain_locked();
  bool ensure_open_locked(const std::string& file_name);
  bool write_line_locked(const std::string& line);
  void enforce_limit_locked();
  void raise_alarm(const std::string& message);
  void recover_next_id();
  void repair_tail(int fd, const std::filesystem::path& path);

  LogOptions options_;
  mutable std::mutex mutex_;
  int fd_ = -1;
  std::string open_name_;
  std::uint64_t next_id_ = 1;
  std::deque<PendingLine> pending_;
  std::optional<std::uint64_t> drop_marker_id_;
  std::uint64_t drops_since_marker_ = 0;
  std::uint64_t dropped_total_ = 0;
  bool healthy_ = true;
  bool closed_ = false;
};

}  // namespace evse_decoy::log
