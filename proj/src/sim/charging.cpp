// SPDX-License-Identifier: Apache-2.0
#include "evse_decoy/sim/charging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace evse_decoy::sim {

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::Charging: return "Charging";
    case SessionStatus::Paused: return "Paused";
    case SessionStatus::Stopped: return "Stopped";
    case SessionStatus::Completed: return "Completed";
    case SessionStatus::Departed: return "Departed";
  }
  return "Unknown";
}

std::string_view to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Stop: return "Stop";
    case ActionKind::Pause: return "Pause";
    case ActionKind::Resume: return "Resume";
  }
  return "Unknown";
}

std::string_view to_string(ActionResult result) {
  switch (result) {
    case ActionResult::Applied: return "applied";
    case ActionResult::UnknownSession: return "unknown_session";
    case ActionResult::IllegalTransition: return "illegal_transition";
  }
  return "unknown";
}

std::optional<SessionStatus> parse_status(std::string_view text) {
  for (auto s : {SessionStatus::Charging, SessionStatus::Paused, SessionStatus::Stopped,
                 SessionStatus::Completed, SessionStatus::Departed}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::optional<ActionKind> parse_action_kind(std::string_view text) {
  if (text == "Stop" || text == "stop") return ActionKind::Stop;
  if (text == "Pause" || text == "pause") return ActionKind::Pause;
  if (text == "Resume" || text == "resume") return ActionKind::Resume;
  return std::nullopt;
}

std::optional<SessionStatus> next_status(SessionStatus current, ActionKind kind) {
  switch (kind) {
    case ActionKind::Stop:
      if (current == SessionStatus::Charging || current == SessionStatus::Paused ||
          current == SessionStatus::Completed) {
        return SessionStatus::Stopped;
      }
      return std::nullopt;
    case ActionKind::Pause:
      if (current == SessionStatus::Charging) return SessionStatus::Paused;
      return std::nullopt;
    case ActionKind::Resume:
      if (current == SessionStatus::Paused) return SessionStatus::Charging;
      return std::nullopt;
  }
  return std::nullopt;
}

ColumnOccupied::ColumnOccupied(int column)
    : SimError("column " + std::to_string(column) + " already holds a session") {}

InvalidColumn::InvalidColumn(int column)
    : SimError("no such column: " + std::to_string(column)) {}

double SimRng::unit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SimRng::uniform(double lo, double hi) {
  if (!(hi > lo)) return lo;
  return lo + (hi - lo) * unit();
}

std::size_t SimRng::index(std::size_t n) {
  if (n == 0) return 0;
  return static_cast<std::size_t>(unit() * static_cast<double>(n)) % n;
}

std::uint32_t SimRng::bits32() {
  return static_cast<std::uint32_t>(engine_() >> 32);
}

double estimate_initial_energy(double capacity_kwh, double requested_kwh, SimRng& rng) {
  if (!(requested_kwh > 0) || requested_kwh > capacity_kwh) {
    throw InvalidDemand("requested energy must be in (0, capacity]");
  }
  double headroom = capacity_kwh - requested_kwh;
  if (headroom <= 0) return 0.0;
  // unit() < 1 keeps the draw strictly below the upper bound.
  return headroom * rng.unit();
}

double completion_percentage(const ChargingSession& session) {
  if (!(session.battery_capacity_kwh > 0)) return 0.0;
  double pct = 100.0 * (session.initial_energy_kwh + session.delivered_energy_kwh) /
               session.battery_capacity_kwh;
  return std::clamp(pct, 0.0, 100.0);
}

double round_cents(double amount) {
  double scaled = amount * 100.0;
  double whole = std::floor(scaled);
  // Products such as 2.5 * 0.41 land a hair below the half-cent.
  if (scaled - whole >= 0.5 - 1e-7) whole += 1.0;
  return whole / 100.0;
}

double charging_cost(const ChargingSession& session) {
  return round_cents(session.delivered_energy_kwh * session.tariff_per_kwh);
}

Station::Station(StationConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  if (config_.column_count < 1) throw SimError("column_count must be >= 1");
  const auto& p = config_.profile;
  if (p.capacities_kwh.empty() || p.charge_rates_kw.empty()) {
    throw SimError("session profile catalogs must not be empty");
  }
  if (!(p.requested_fraction_min >= 0) || !(p.requested_fraction_max <= 1) ||
      !(p.requested_fraction_min < p.requested_fraction_max)) {
    throw SimError("requested fraction range must satisfy 0 <= min < max <= 1");
  }
  if (!(p.dwell_min_s > 0) || p.dwell_max_s < p.dwell_min_s) {
    throw SimError("dwell range must satisfy 0 < min <= max");
  }
  if (p.idle_gap_min_s < 0 || p.idle_gap_max_s < p.idle_gap_min_s) {
    throw SimError("idle gap range must satisfy 0 <= min <= max");
  }
  columns_.resize(static_cast<std::size_t>(config_.column_count));
  for (int c = 0; c < config_.column_count; ++c) {
    if (config_.populate) {
      generate_session(c);
    } else {
      schedule_refill(columns_[static_cast<std::size_t>(c)]);
    }
  }
}

Station::Column& Station::column(int column_id) {
  if (column_id < 0 || column_id >= column_count()) throw InvalidColumn(column_id);
  return columns_[static_cast<std::size_t>(column_id)];
}

std::string Station::make_session_id() {
  char buf[32];
  std::snprintf(buf, sizeof buf, "TX%06llu-%08X",
                static_cast<unsigned long long>(sessions_generated_ + 1), rng_.bits32());
  return buf;
}

const ChargingSession& Station::generate_session(int column_id) {
  Column& col = column(column_id);
  if (col.session) throw ColumnOccupied(column_id);

  const auto& p = config_.profile;
  ChargingSession s;
  s.session_id = make_session_id();
  s.column_id = column_id;
  s.arrival_time = clock_;
  s.departure_time = clock_ + rng_.uniform(p.dwell_min_s, p.dwell_max_s);
  s.battery_capacity_kwh = p.capacities_kwh[rng_.index(p.capacities_kwh.size())];
  s.max_charge_rate_kw = p.charge_rates_kw[rng_.index(p.charge_rates_kw.size())];
  // (min, max]: unit() is in [0, 1), so subtract from the top of the range.
  double fraction = p.requested_fraction_max -
                    rng_.unit() * (p.requested_fraction_max - p.requested_fraction_min);
  s.requested_energy_kwh = fraction * s.battery_capacity_kwh;
  s.initial_energy_kwh =
      estimate_initial_energy(s.battery_capacity_kwh, s.requested_energy_kwh, rng_);
  s.requested_energy_kwh =
      std::min(s.requested_energy_kwh, s.battery_capacity_kwh - s.initial_energy_kwh);
  s.delivered_energy_kwh = 0;
  s.tariff_per_kwh = p.tariff_per_kwh;
  s.status = SessionStatus::Charging;

  ++sessions_generated_;
  col.refill_at.reset();
  col.session = std::move(s);
  aggregate_demand_kw_ += col.session->max_charge_rate_kw;
  return *col.session;
}

void Station::attach(ChargingSession session) {
  Column& col = column(session.column_id);
  if (col.session) throw ColumnOccupied(session.column_id);
  const auto& s = session;
  bool valid = s.battery_capacity_kwh > 0 && s.initial_energy_kwh >= 0 &&
               s.initial_energy_kwh < s.battery_capacity_kwh && s.requested_energy_kwh > 0 &&
               s.initial_energy_kwh + s.requested_energy_kwh <= s.battery_capacity_kwh &&
               s.delivered_energy_kwh >= 0 && s.delivered_energy_kwh <= s.requested_energy_kwh &&
               s.arrival_time < s.departure_time && s.departure_time > clock_ &&
               s.max_charge_rate_kw > 0 && s.tariff_per_kwh >= 0 &&
               s.status != SessionStatus::Departed;
  if (!valid) throw InvalidDemand("session " + s.session_id + " violates session invariants");
  if (find(s.session_id)) throw SimError("duplicate session id " + s.session_id);
  col.refill_at.reset();
  col.session = std::move(session);
  if (col.session->status == SessionStatus::Charging) {
    aggregate_demand_kw_ += col.session->max_charge_rate_kw;
  }
}

void Station::set_status(ChargingSession& session, SessionStatus status) {
  if (session.status == status) return;
  if (session.status == SessionStatus::Charging) {
    aggregate_demand_kw_ -= session.max_charge_rate_kw;
  } else if (status == SessionStatus::Charging) {
    aggregate_demand_kw_ += session.max_charge_rate_kw;
  }
  session.status = status;
}

void Station::schedule_refill(Column& col) {
  if (!config_.auto_refill) return;
  const auto& p = config_.profile;
  col.refill_at = clock_ + rng_.uniform(p.idle_gap_min_s, p.idle_gap_max_s);
}

std::optional<SimSeconds> Station::next_event_time() const {
  std::optional<SimSeconds> next;
  auto consider = [&next](SimSeconds t) {
    if (!next || t < *next) next = t;
  };
  for (const auto& col : columns_) {
    if (col.session) {
      consider(col.session->departure_time);
    } else if (col.refill_at) {
      consider(*col.refill_at);
    }
  }
  return next;
}

void Station::integrate(SimSeconds dt) {
  if (dt <= 0) return;
  for (auto& col : columns_) {
    if (!col.session || col.session->status != SessionStatus::Charging) continue;
    ChargingSession& s = *col.session;
    double remaining = s.requested_energy_kwh - s.delivered_energy_kwh;
    double gain = s.max_charge_rate_kw * dt / 3600.0;
    if (gain >= remaining - kEnergyEpsilon) {
      s.delivered_energy_kwh = s.requested_energy_kwh;
      set_status(s, SessionStatus::Completed);
    } else {
      s.delivered_energy_kwh += gain;
    }
  }
}

void Station::process_events() {
  for (auto& col : columns_) {
    if (col.session && col.session->departure_time <= clock_) {
      set_status(*col.session, SessionStatus::Departed);
      departed_.push_back(std::move(*col.session));
      if (departed_.size() > kDepartedHistory) departed_.pop_front();
      col.session.reset();
      schedule_refill(col);
    }
  }
  for (int c = 0; c < column_count(); ++c) {
    Column& col = columns_[static_cast<std::size_t>(c)];
    if (!col.session && col.refill_at && *col.refill_at <= clock_) {
      generate_session(c);
    }
  }
  bool any_charging = std::any_of(columns_.begin(), columns_.end(), [](const Column& col) {
    return col.session && col.session->status == SessionStatus::Charging;
  });
  if (!any_charging) aggregate_demand_kw_ = 0;
}

void Station::advance(SimSeconds dt) {
  if (dt < 0 || std::isnan(dt)) throw SimError("advance requires dt >= 0");
  if (dt == 0) return;
  const SimSeconds target = clock_ + dt;
  while (true) {
    auto next = next_event_time();
    if (!next || *next > target) {
      integrate(target - clock_);
      clock_ = target;
      return;
    }
    integrate(*next - clock_);
    clock_ = std::max(clock_, *next);
    process_events();
  }
}

ChargingSession* Station::find_mutable(std::string_view session_id) {
  for (auto& col : columns_) {
    if (col.session && col.session->session_id == session_id) return &*col.session;
  }
  return nullptr;
}

const ChargingSession* Station::find(std::string_view session_id) const {
  for (const auto& col : columns_) {
    if (col.session && col.session->session_id == session_id) return &*col.session;
  }
  for (const auto& s : departed_) {
    if (s.session_id == session_id) return &s;
  }
  return nullptr;
}

const ChargingSession* Station::session_at(int column_id) const {
  if (column_id < 0 || column_id >= column_count()) throw InvalidColumn(column_id);
  const auto& col = columns_[static_cast<std::size_t>(column_id)];
  return col.session ? &*col.session : nullptr;
}

std::vector<const ChargingSession*> Station::sessions() const {
  std::vector<const ChargingSession*> out;
  for (const auto& col : columns_) {
    if (col.session) out.push_back(&*col.session);
  }
  return out;
}

double Station::recompute_demand() const {
  double total = 0;
  for (const auto& col : columns_) {
    if (col.session && col.session->status == SessionStatus::Charging) {
      total += col.session->max_charge_rate_kw;
    }
  }
  return total;
}

ActionResult Station::apply_action(const ChargeAction& action) {
  ChargingSession* session = find_mutable(action.session_id);
  if (!session) {
    // Departed sessions are still known, but nothing can be done to them.
    return find(action.session_id) ? ActionResult::IllegalTransition
                                   : ActionResult::UnknownSession;
  }
  auto next = next_status(session->status, action.kind);
  if (!next) return ActionResult::IllegalTransition;
  set_status(*session, *next);
  return ActionResult::Applied;
}

DashboardView Station::snapshot() const {
  DashboardView view;
  view.clock = clock_;
  view.aggregate_demand_kw = aggregate_demand_kw_;
  view.tariff_per_kwh = config_.profile.tariff_per_kwh;
  view.sessions_served = sessions_generated_;
  view.columns.reserve(columns_.size());
  for (int c = 0; c < column_count(); ++c) {
    ColumnView cv;
    cv.column_id = c;
    const auto& col = columns_[static_cast<std::size_t>(c)];
    if (col.session) {
      const ChargingSession& s = *col.session;
      cv.vacant = false;
      cv.session_id = s.session_id;
      cv.status = s.status;
      cv.completion_pct = completion_percentage(s);
      cv.delivered_kwh = s.delivered_energy_kwh;
      cv.requested_kwh = s.requested_energy_kwh;
      cv.capacity_kwh = s.battery_capacity_kwh;
      cv.charge_rate_kw = s.status == SessionStatus::Charging ? s.max_charge_rate_kw : 0.0;
      cv.cost = charging_cost(s);
      if (s.status == SessionStatus::Charging || s.status == SessionStatus::Paused) {
        cv.remaining_time_s =
            (s.requested_energy_kwh - s.delivered_energy_kwh) / s.max_charge_rate_kw * 3600.0;
      }
      cv.plugged_in_s = clock_ - s.arrival_time;
    }
    view.columns.push_back(std::move(cv));
  }
  return view;
}

bool Station::operator==(const Station& other) const {
  return rng_ == other.rng_ && clock_ == other.clock_ &&
         aggregate_demand_kw_ == other.aggregate_demand_kw_ &&
         sessions_generated_ == other.sessions_generated_ && columns_ == other.columns_ &&
         departed_ == other.departed_;
}

}  // namespace evse_decoy::sim
