// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "evse_decoy/sim/charging.hpp"

namespace evse_decoy::sim {

/// Wire format version for /api/status and /api/action bodies.
inline constexpr int kWireVersion = 1;

std::string encode_view(const DashboardView& view);
/// Throws std::invalid_argument on malformed input or an unsupported version.
DashboardView decode_view(std::string_view text);

/// Action request as sent by the dashboard: {"version":1,"kind":..,"session_id":..}.
struct ActionRequest {
  std::string kind;
  std::string session_id;
};
std::string encode_action_request(const ActionRequest& request);
/// nullopt when the body is not a JSON object carrying both string fields.
std::optional<ActionRequest> decode_action_request(std::string_view text);

}  // namespace evse_decoy::sim
