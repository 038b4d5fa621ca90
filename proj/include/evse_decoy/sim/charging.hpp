// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evse_decoy::sim {

/// Simulation timestamps and durations, in seconds.
using SimSeconds = double;

enum class SessionStatus { Charging, Paused, Stopped, Completed, Departed };
enum class ActionKind { Stop, Pause, Resume };

std::string_view to_string(SessionStatus status);
std::string_view to_string(ActionKind kind);
std::optional<SessionStatus> parse_status(std::string_view text);
/// Case-sensitive on the canonical names ("Stop", "Pause", "Resume"), also
/// accepts all-lowercase.
std::optional<ActionKind> parse_action_kind(std::string_view text);

struct ChargingSession {
  std::string session_id;
  int column_id = 0;
  SimSeconds arrival_time = 0;
  SimSeconds departure_time = 0;
  double battery_capacity_kwh = 0;
  double initial_energy_kwh = 0;
  double requested_energy_kwh = 0;
  double delivered_energy_kwh = 0;
  double max_charge_rate_kw = 0;
  double tariff_per_kwh = 0;
  SessionStatus status = SessionStatus::Charging;

  bool operator==(const ChargingSession&) const = default;
};

struct ChargeAction {
  ActionKind kind = ActionKind::Stop;
  std::string session_id;
  std::string source_ip;
  std::int64_t received_at_ms = 0;  // wall clock, ms since epoch
};

enum class ActionResult { Applied, UnknownSession, IllegalTransition };
std::string_view to_string(ActionResult result);

/// Pure transition function over the 3 x 5 action/status table.
/// Returns nullopt when the action is illegal in that status.
std::optional<SessionStatus> next_status(SessionStatus current, ActionKind kind);

/// Distributions used to fabricate sessions. All ranges are inclusive unless
/// noted; the requested-energy fraction is drawn from (min, max].
struct SessionProfile {
  SimSeconds dwell_min_s = 30 * 60;
  SimSeconds dwell_max_s = 8 * 3600;
  std::vector<double> capacities_kwh{24, 40, 52, 64, 75, 100};
  std::vector<double> charge_rates_kw{3.7, 7.4, 11, 22};
  double requested_fraction_min = 0.2;
  double requested_fraction_max = 0.9;
  SimSeconds idle_gap_min_s = 60;
  SimSeconds idle_gap_max_s = 20 * 60;
  double tariff_per_kwh = 0.40;
};

struct StationConfig {
  std::uint64_t seed = 42;
  int column_count = 4;
  SessionProfile profile;
  /// Fill every column with a fresh session at construction time.
  bool populate = true;
  /// Spawn a new session on an empty column after an idle gap.
  bool auto_refill = true;
};

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ColumnOccupied : public SimError {
 public:
  explicit ColumnOccupied(int column);
};
class InvalidDemand : public SimError {
 public:
  using SimError::SimError;
};
class InvalidColumn : public SimError {
 public:
  explicit InvalidColumn(int column);
};

/// Seeded generator with a portable uniform mapping. std distributions are
/// implementation-defined, which would break cross-platform determinism.
class SimRng {
 public:
  explicit SimRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double unit();
  /// Uniform in [lo, hi]. Collapses to lo when hi <= lo.
  double uniform(double lo, double hi);
  std::size_t index(std::size_t n);
  std::uint32_t bits32();

  bool operator==(const SimRng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Uniform over the feasible interval [0, capacity - requested].
double estimate_initial_energy(double capacity_kwh, double requested_kwh, SimRng& rng);

double completion_percentage(const ChargingSession& session);
/// delivered x tariff, rounded half-up to cents.
double charging_cost(const ChargingSession& session);
/// Round half-up to 2 decimals, tolerant of binary representation error.
double round_cents(double amount);

struct ColumnView {
  int column_id = 0;
  bool vacant = true;
  std::string session_id;
  SessionStatus status = SessionStatus::Charging;
  double completion_pct = 0;
  double delivered_kwh = 0;
  double requested_kwh = 0;
  double capacity_kwh = 0;
  double charge_rate_kw = 0;
  double cost = 0;
  SimSeconds remaining_time_s = 0;
  SimSeconds plugged_in_s = 0;

  bool operator==(const ColumnView&) const = default;
};

/// Read-only projection handed to the web layer.
struct DashboardView {
  SimSeconds clock = 0;
  double aggregate_demand_kw = 0;
  double tariff_per_kwh = 0;
  std::uint64_t sessions_served = 0;
  std::vector<ColumnView> columns;

  bool operator==(const DashboardView&) const = default;
};

class Station {
 public:
  static constexpr std::size_t kDepartedHistory = 64;
  static constexpr double kEnergyEpsilon = 1e-12;

  explicit Station(StationConfig config);

  /// Builds a session for an empty column at the current clock and attaches it.
  const ChargingSession& generate_session(int column_id);
  /// Attaches an externally built session (tests, fixtures). Validates the
  /// session invariants and that the column is free.
  void attach(ChargingSession session);

  void advance(SimSeconds dt);
  ActionResult apply_action(const ChargeAction& action);
  DashboardView snapshot() const;

  SimSeconds clock() const { return clock_; }
  double aggregate_demand_kw() const { return aggregate_demand_kw_; }
  /// Sum over Charging sessions, computed from scratch.
  double recompute_demand() const;
  int column_count() const { return static_cast<int>(columns_.size()); }
  const ChargingSession* session_at(int column_id) const;
  const ChargingSession* find(std::string_view session_id) const;
  std::vector<const ChargingSession*> sessions() const;
  const std::deque<ChargingSession>& departed() const { return departed_; }
  std::uint64_t sessions_generated() const { return sessions_generated_; }
  const StationConfig& config() const { return config_; }

  bool operator==(const Station& other) const;

 private:
  struct Column {
    std::optional<ChargingSession> session;
    std::optional<SimSeconds> refill_at;
    bool operator==(const Column&) const = default;
  };

  Column& column(int column_id);
  ChargingSession* find_mutable(std::string_view session_id);
  void set_status(ChargingSession& session, SessionStatus status);
  void integrate(SimSeconds dt);
  void process_events();
  std::optional<SimSeconds> next_event_time() const;
  void schedule_refill(Column& column);
  std::string make_session_id();

  StationConfig config_;
  SimRng rng_;
  SimSeconds clock_ = 0;
  double aggregate_demand_kw_ = 0;
  std::uint64_t sessions_generated_ = 0;
  std::vector<Column> columns_;
  std::deque<ChargingSession> departed_;
};

}  // namespace evse_decoy::sim
