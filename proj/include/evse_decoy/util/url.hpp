// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace evse_decoy::util {

struct DecodeResult {
  std::string text;
  /// False when a '%' was not followed by two hex digits. Such sequences are
  /// copied through unchanged.
  bool well_formed = true;
};

/// Single pass of percent-decoding. With plus_as_space, '+' becomes ' '.
DecodeResult percent_decode(std::string_view text, bool plus_as_space);

using FormFields = std::vector<std::pair<std::string, std::string>>;

/// application/x-www-form-urlencoded body or query string.
FormFields parse_form(std::string_view body);
std::optional<std::string> form_value(const FormFields& fields, std::string_view name);

std::string to_lower(std::string_view text);
std::string to_upper(std::string_view text);

}  // namespace evse_decoy::util
