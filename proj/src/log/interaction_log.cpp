// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/log/interaction_log.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ctime>
#include <iostream>
#include <stdexcept>
#include <vector>

#include "evse_decoy/log/log_reader.hpp"

namespace evse_decoy::log {

namespace fs = std::filesystem;

std::string log_file_name(const std::string& prefix, Rotation rotation, Timestamp ts) {
  if (rotation == Rotation::None) return prefix + ".jsonl";
  std::time_t t = std::chrono::system_clock::to_time_t(
      std::chrono::floor<std::chrono::seconds>(ts));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char date[16];
  std::strftime(date, sizeof date, "%Y-%m-%d", &tm);
  return prefix + "-" + date + ".jsonl";
}

InteractionLog::InteractionLog(LogOptions options) : options_(std::move(options)) {
  if (!options_.alarm) {
    options_.alarm = [](const std::string& message) {
      std::cerr << "[interaction-log] " << message << std::endl;
    };
  }
  recover_next_id();
}

InteractionLog::~InteractionLog() { close(); }

Timestamp InteractionLog::now() const { return options_.clock ? options_.clock() : now_ms(); }

void InteractionLog::raise_alarm(const std::string& message) { options_.alarm(message); }

void InteractionLog::recover_next_id() {
  std::error_code ec;
  if (!fs::is_directory(options_.directory, ec)) return;
  auto files = log_files(options_.directory, options_.file_prefix);
  for (auto it = files.rbegin(); it != files.rend(); ++it) {
    if (auto last = log::last_record_id(*it)) {
      next_id_ = *last + 1;
      return;
    }
  }
}

void InteractionLog::repair_tail(int fd, const fs::path& path) {
  struct stat st {};
  if (fstat(fd, &st) != 0 || st.st_size == 0) return;
  off_t end = st.st_size;
  char last = 0;
  if (pread(fd, &last, 1, end - 1) != 1 || last == '\n') return;

  // Torn final line from an earlier crash: cut back to the last newline so the
  // next append does not glue onto it.
  std::vector<char> chunk(4096);
  off_t pos = end;
  off_t cut = 0;
  while (pos > 0) {
    off_t start = std::max<off_t>(0, pos - static_cast<off_t>(chunk.size()));
    auto len = static_cast<std::size_t>(pos - start);
    if (pread(fd, chunk.data(), len, start) != static_cast<ssize_t>(len)) return;
    auto* hit = static_cast<char*>(memrchr(chunk.data(), '\n', len));
    if (hit) {
      cut = start + (hit - chunk.data()) + 1;
      break;
    }
    pos = start;
  }
  if (ftruncate(fd, cut) == 0) {
    raise_alarm("truncated torn trailing line in " + path.string() + " (" +
                std::to_string(end - cut) + " bytes)");
  }
}

bool InteractionLog::ensure_open_locked(const std::string& file_name) {
  if (fd_ >= 0 && open_name_ == file_name) return true;
  if (fd_ >= 0) {
    ::fsync(fd_);
    ::close(fd_);
    fd_ = -1;
  }
  std::error_code ec;
  fs::create_directories(options_.directory, ec);
  fs::path path = options_.directory / file_name;
  int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) return false;
  repair_tail(fd, path);
  fd_ = fd;
  open_name_ = file_name;
  return true;
}

bool InteractionLog::write_line_locked(const std::string& line) {
  off_t before = ::lseek(fd_, 0, SEEK_END);
  std::size_t done = 0;
  while (done < line.size()) {
    ssize_t n = ::write(fd_, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (before >= 0) (void)::ftruncate(fd_, before);
      return false;
    }
    done += static_cast<std::size_t>(n);
  }
  if (options_.sync_each_record) ::fdatasync(fd_);
  return true;
}

void InteractionLog::enforce_limit_locked() {
  while (pending_.size() > options_.buffer_limit) {
    pending_.pop_front();
    ++dropped_total_;
    ++drops_since_marker_;
    if (!drop_marker_id_) drop_marker_id_ = next_id_++;
  }
}

bool InteractionLog::drain_locked() {
  auto fail = [this] {
    if (healthy_) {
      raise_alarm("log destination " + options_.directory.string() +
                  " is not writable; buffering records");
    }
    healthy_ = false;
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    enforce_limit_locked();
    return false;
  };
  auto write_marker = [this] {
    InteractionRecord marker;
    marker.record_id = *drop_marker_id_;
    marker.timestamp = now();
    marker.source_ip = "0.0.0.0";
    marker.payload = SystemPayload{"records_dropped", "log destination was unwritable",
                                   drops_since_marker_};
    if (!ensure_open_locked(log_file_name(options_.file_prefix, options_.rotation,
                                          marker.timestamp))) {
      return false;
    }
    if (!write_line_locked(encode_record(marker) + "\n")) return false;
    drop_marker_id_.reset();
    drops_since_marker_ = 0;
    return true;
  };

  while (!pending_.empty()) {
    const PendingLine& front = pending_.front();
    if (drop_marker_id_ && *drop_marker_id_ < front.id && !write_marker()) return fail();
    if (!ensure_open_locked(log_file_name(options_.file_prefix, options_.rotation,
                                          front.timestamp))) {
      return fail();
    }
    if (!write_line_locked(front.line)) return fail();
    pending_.pop_front();
  }
  if (drop_marker_id_ && !write_marker()) return fail();
  if (!healthy_) raise_alarm("log destination recovered");
  healthy_ = true;
  return true;
}

std::uint64_t InteractionLog::record(LogEvent event) {
  std::lock_guard lock(mutex_);
  if (closed_) throw std::logic_error("record() on a closed interaction log");
  InteractionRecord rec;
  rec.record_id = next_id_++;
  rec.timestamp = now();
  rec.port = event.port;
  rec.source_ip = event.source_ip.empty() ? "0.0.0.0" : std::move(event.source_ip);
  rec.payload = std::move(event.payload);
  pending_.push_back({rec.record_id, rec.timestamp, encode_record(rec) + "\n"});
  drain_locked();
  return rec.record_id;
}

bool InteractionLog::flush() {
  std::lock_guard lock(mutex_);
  return drain_locked();
}

void InteractionLog::close() {
  std::lock_guard lock(mutex_);
  if (closed_) return;
  drain_locked();
  if (fd_ >= 0) {
    ::fsync(fd_);
    ::close(fd_);
    fd_ = -1;
  }
  closed_ = true;
}

bool InteractionLog::healthy() const {
  std::lock_guard lock(mutex_);
  return healthy_;
}

std::size_t InteractionLog::buffered() const {
  std::lock_guard lock(mutex_);
  return pending_.size();
}

std::uint64_t InteractionLog::dropped_total() const {
  std::lock_guard lock(mutex_);
  return dropped_total_;
}

std::uint64_t InteractionLog::last_record_id() const {
  std::lock_guard lock(mutex_);
  return next_id_ - 1;
}

std::optional<fs::path> InteractionLog::current_file() const {
  std::lock_guard lock(mutex_);
  if (fd_ < 0) return std::nullopt;
  return options_.directory / open_name_;
}

}  // namespace evse_decoy::log
