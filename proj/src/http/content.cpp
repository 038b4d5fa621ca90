// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/http/content.hpp"

#include <fstream>
#include <sstream>

namespace evse_decoy::http {

namespace fs = std::filesystem;

ContentError::ContentError(const fs::path& path, const std::string& reason)
    : std::runtime_error(reason + ": " + path.string()), path_(path) {}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::error_code ec;
    throw ContentError(path, fs::exists(path, ec) ? "cannot read content file"
                                                  : "content file not found");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SiteContent SiteContent::load(const fs::path& content_dir, const fs::path& device_info_path) {
  SiteContent site;
  std::error_code ec;
  if (!fs::is_directory(content_dir, ec)) {
    throw ContentError(content_dir, "content directory not found");
  }
  site.device_info_ = read_file(device_info_path);
  for (const char* name : kRequiredPages) {
    site.pages_.emplace(name, read_file(content_dir / name));
  }
  fs::path static_dir = content_dir / "static";
  if (fs::is_directory(static_dir, ec)) {
    for (const auto& entry : fs::recursive_directory_iterator(static_dir, ec)) {
      if (!entry.is_regular_file()) continue;
      std::string rel = fs::relative(entry.path(), static_dir).generic_string();
      site.assets_.emplace("/static/" + rel,
                           StaticAsset{content_type_for(entry.path()), read_file(entry.path())});
    }
  }
  return site;
}

const std::string& SiteContent::page(std::string_view name) const {
  auto it = pages_.find(name);
  if (it == pages_.end()) throw std::out_of_range("unknown page " + std::string(name));
  return it->second;
}

const StaticAsset* SiteContent::asset(std::string_view url_path) const {
  auto it = assets_.find(url_path);
  return it == assets_.end() ? nullptr : &it->second;
}

std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(text.size());
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    std::string key(text.substr(open + 2, close - open - 2));
    auto it = values.find(key);
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(text.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

std::string html_escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string content_type_for(const fs::path& path) {
  auto ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".css") return "text/css";
  if (ext == ".js") return "application/javascript";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".ico") return "image/x-icon";
  if (ext == ".txt") return "text/plain";
  return "application/octet-stream";
}

}  // namespace evse_decoy::http
