// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace evse_decoy::http {

class ContentError : public std::runtime_error {
 public:
  ContentError(const std::filesystem::path& path, const std::string& reason);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct StaticAsset {
  std::string content_type;
  std::string bytes;
};

/// Pages and assets of the decoy site, read once at startup.
///
/// The content directory holds the page templates (dashboard.html,
/// admin.html, login.html, register.html, not_found.html, error.html) and an
/// optional static/ tree served under /static/. The device-info page lives
/// at its own configurable path.
class SiteContent {
 public:
  static constexpr const char* kRequiredPages[] = {"dashboard.html", "admin.html", "login.html",
                                                   "register.html", "not_found.html",
                                                   "error.html"};

  /// Throws ContentError naming the first missing or unreadable file.
  static SiteContent load(const std::filesystem::path& content_dir,
                          const std::filesystem::path& device_info_path);

  const std::string& device_info() const { return device_info_; }
  /// Template by file name, e.g. "login.html".
  const std::string& page(std::string_view name) const;
  const StaticAsset* asset(std::string_view url_path) const;

 private:
  std::string device_info_;
  std::map<std::string, std::string, std::less<>> pages_;
  std::map<std::string, StaticAsset, std::less<>> assets_;
};

/// Replaces every "{{key}}" with value.
std::string fill_template(std::string_view text, const std::map<std::string, std::string>& values);

std::string html_escape(std::string_view text);
std::string content_type_for(const std::filesystem::path& path);

}  // namespace evse_decoy::http
