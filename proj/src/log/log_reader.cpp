// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/log/log_reader.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace evse_decoy::log {

namespace fs = std::filesystem;

bool LogFilter::matches(const InteractionRecord& record) const {
  if (category && record.category() != *category) return false;
  if (source_ip && record.source_ip != *source_ip) return false;
  if (from && record.timestamp < *from) return false;
  if (to && record.timestamp >= *to) return false;
  return true;
}

LogCorruption::LogCorruption(fs::path file, std::size_t line_number, const std::string& reason)
    : std::runtime_error("corrupt log line " + std::to_string(line_number) + " in " +
                         file.string() + ": " + reason),
      file_(std::move(file)),
      line_number_(line_number) {}

std::vector<fs::path> log_files(const fs::path& directory, const std::string& prefix) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(directory, ec)) {
    if (!entry.is_regular_file()) continue;
    std::string name = entry.path().filename().string();
    if (name.size() < 6 || name.substr(name.size() - 6) != ".jsonl") continue;
    std::string stem = name.substr(0, name.size() - 6);
    if (stem == prefix) {
      files.push_back(entry.path());
    } else if (stem.size() == prefix.size() + 11 && stem.compare(0, prefix.size(), prefix) == 0 &&
               stem[prefix.size()] == '-') {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::optional<std::uint64_t> last_record_id(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  in.seekg(0, std::ios::end);
  auto size = static_cast<std::streamoff>(in.tellg());
  std::streamoff window = 64 * 1024;
  while (true) {
    std::streamoff start = std::max<std::streamoff>(0, size - window);
    in.clear();
    in.seekg(start);
    std::string tail(static_cast<std::size_t>(size - start), '\0');
    in.read(tail.data(), static_cast<std::streamsize>(tail.size()));
    // Skip a possibly-partial first line unless we read from offset 0.
    std::size_t first = 0;
    if (start > 0) {
      auto nl = tail.find('\n');
      first = nl == std::string::npos ? tail.size() : nl + 1;
    }
    std::vector<std::string_view> lines;
    std::string_view view(tail);
    std::size_t pos = first;
    while (pos < view.size()) {
      auto nl = view.find('\n', pos);
      if (nl == std::string_view::npos) break;  // unterminated: torn
      lines.push_back(view.substr(pos, nl - pos));
      pos = nl + 1;
    }
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      try {
        return decode_record(*it).record_id;
      } catch (const RecordFormatError&) {
      }
    }
    if (start == 0) return std::nullopt;
    window *= 4;
  }
}

namespace {

void read_file(const fs::path& file, const LogFilter& filter, LogReadResult& out) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open log file " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();

  std::size_t pos = 0;
  std::size_t line_number = 0;
  while (pos < content.size()) {
    auto nl = content.find('\n', pos);
    bool terminated = nl != std::string::npos;
    std::string_view line(content.data() + pos, (terminated ? nl : content.size()) - pos);
    pos = terminated ? nl + 1 : content.size();
    ++line_number;
    bool is_last = pos >= content.size();
    if (line.empty()) {
      if (is_last) break;
      throw LogCorruption(file, line_number, "empty line");
    }
    try {
      InteractionRecord record = decode_record(line);
      if (!terminated) {
        out.warnings.push_back(file.string() + ":" + std::to_string(line_number) +
                               ": final line has no terminating newline");
      }
      if (filter.matches(record)) out.records.push_back(std::move(record));
    } catch (const RecordFormatError& e) {
      if (!is_last) throw LogCorruption(file, line_number, e.what());
      out.warnings.push_back(file.string() + ":" + std::to_string(line_number) +
                             ": skipped torn trailing line (" + e.what() + ")");
    }
  }
}

}  // namespace

LogReadResult read_log(const fs::path& path, const LogFilter& filter, const std::string& prefix) {
  LogReadResult result;
  if (fs::is_directory(path)) {
    for (const auto& file : log_files(path, prefix)) read_file(file, filter, result);
  } else {
    read_file(path, filter, result);
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const InteractionRecord& a, const InteractionRecord& b) {
                     return a.record_id < b.record_id;
                   });
  return result;
}

}  // namespace evse_decoy::log
