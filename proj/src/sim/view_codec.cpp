// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/sim/view_codec.hpp"

#include <stdexcept>

#include "json.hpp"

namespace evse_decoy::sim {

using ordered_json = nlohmann::ordered_json;

std::string encode_view(const DashboardView& view) {
  ordered_json j;
  j["version"] = kWireVersion;
  j["clock_s"] = view.clock;
  j["aggregate_demand_kw"] = view.aggregate_demand_kw;
  j["tariff_per_kwh"] = view.tariff_per_kwh;
  j["sessions_served"] = view.sessions_served;
  auto columns = ordered_json::array();
  for (const auto& c : view.columns) {
    ordered_json col;
    col["column"] = c.column_id;
    col["vacant"] = c.vacant;
    if (!c.vacant) {
      col["session_id"] = c.session_id;
      col["status"] = std::string(to_string(c.status));
      col["completion_pct"] = c.completion_pct;
      col["delivered_kwh"] = c.delivered_kwh;
      col["requested_kwh"] = c.requested_kwh;
      col["capacity_kwh"] = c.capacity_kwh;
      col["charge_rate_kw"] = c.charge_rate_kw;
      col["cost"] = c.cost;
      col["remaining_time_s"] = c.remaining_time_s;
      col["plugged_in_s"] = c.plugged_in_s;
    }
    columns.push_back(std::move(col));
  }
  j["columns"] = std::move(columns);
  return j.dump();
}

DashboardView decode_view(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw std::invalid_argument("status body is not a JSON object");
  try {
    if (j.at("version").get<int>() != kWireVersion) {
      throw std::invalid_argument("unsupported status version");
    }
    DashboardView view;
    view.clock = j.at("clock_s").get<double>();
    view.aggregate_demand_kw = j.at("aggregate_demand_kw").get<double>();
    view.tariff_per_kwh = j.at("tariff_per_kwh").get<double>();
    view.sessions_served = j.at("sessions_served").get<std::uint64_t>();
    for (const auto& col : j.at("columns")) {
      ColumnView c;
      c.column_id = col.at("column").get<int>();
      c.vacant = col.at("vacant").get<bool>();
      if (!c.vacant) {
        c.session_id = col.at("session_id").get<std::string>();
        auto status = parse_status(col.at("status").get<std::string>());
        if (!status) throw std::invalid_argument("unknown session status");
        c.status = *status;
        c.completion_pct = col.at("completion_pct").get<double>();
        c.delivered_kwh = col.at("delivered_kwh").get<double>();
        c.requested_kwh = col.at("requested_kwh").get<double>();
        c.capacity_kwh = col.at("capacity_kwh").get<double>();
        c.charge_rate_kw = col.at("charge_rate_kw").get<double>();
        c.cost = col.at("cost").get<double>();
        c.remaining_time_s = col.at("remaining_time_s").get<double>();
        c.plugged_in_s = col.at("plugged_in_s").get<double>();
      }
      view.columns.push_back(std::move(c));
    }
    return view;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed status body: ") + e.what());
  }
}

std::string encode_action_request(const ActionRequest& request) {
  ordered_json j;
  j["version"] = kWireVersion;
  j["kind"] = request.kind;
  j["session_id"] = request.session_id;
  return j.dump();
}

std::optional<ActionRequest> decode_action_request(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  if (j.contains("version") && j["version"] != kWireVersion) return std::nullopt;
  if (!j.contains("kind") || !j["kind"].is_string()) return std::nullopt;
  if (!j.contains("session_id") || !j["session_id"].is_string()) return std::nullopt;
  return ActionRequest{j["kind"].get<std::string>(), j["session_id"].get<std::string>()};
}

}  // namespace evse_decoy::sim
