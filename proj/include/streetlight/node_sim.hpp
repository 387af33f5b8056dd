#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "streetlight/core.hpp"
#include "streetlight/decimal.hpp"
#include "streetlight/rng.hpp"
#include "streetlight/wire.hpp"

namespace streetlight::sim {

// Deterministic discrete-time streetlight node simulation.
//
// Each tick a node (1) samples the environment, (2) reads its sensors, which
// reflect what the lamps did during the tick that just ended, (3) runs fault
// detection on those readings and (4) decides the lamp commands that hold
// until the next tick. Everything is a pure function of the scenario.

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline constexpr SimTime kDay = 86400;

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

struct CurvePoint {
  SimTime second_of_day = 0;
  int value = 0;
};

struct TrafficEvent {
  SimTime time = 0;
  int node = 0;
  int lamp = 0;
  SimTime duration = 1;  // present on [time, time + duration)
};

enum class TrafficMode { Scripted, Stochastic };

struct EnvironmentConfig {
  // Empty sun_curve selects a smooth arc from sunrise to sunset peaking at
  // 100% at solar noon.
  std::vector<CurvePoint> sun_curve;
  SimTime sunrise_s = 6 * 3600;
  SimTime sunset_s = 18 * 3600;
  std::vector<CurvePoint> temp_curve = {{0, 20}, {5 * 3600, 18}, {14 * 3600, 30}, {kDay, 20}};
  TrafficMode traffic_mode = TrafficMode::Stochastic;
  std::vector<TrafficEvent> traffic_events;
  // Expected detections per lamp per hour of day.
  std::array<double, 24> hourly_rate = {2, 2, 2, 2, 2, 6, 20, 60, 60, 60, 30, 30,
                                        30, 30, 30, 30, 30, 60, 60, 60, 60, 20, 20, 6};
  std::uint64_t rng_seed = 1;
};

struct EnvSample {
  int sun_pct = 0;
  int temp_c = 0;
  std::vector<bool> traffic;  // per lamp
  friend bool operator==(const EnvSample&, const EnvSample&) = default;
};

inline void validate(const EnvironmentConfig& env) {
  auto check_curve = [](const std::vector<CurvePoint>& c, int lo, int hi, const char* name) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i].value < lo || c[i].value > hi) throw ConfigError(std::string(name) + " value out of range");
      if (c[i].second_of_day < 0 || c[i].second_of_day > kDay) throw ConfigError(std::string(name) + " time out of range");
      if (i > 0 && c[i].second_of_day <= c[i - 1].second_of_day)
        throw ConfigError(std::string(name) + " points must be strictly time-ordered");
    }
  };
  check_curve(env.sun_curve, 0, 100, "sun_curve");
  check_curve(env.temp_curve, -100, 200, "temp_curve");
  if (env.temp_curve.empty()) throw ConfigError("temp_curve needs at least one point");
  if (env.sun_curve.empty() && !(0 <= env.sunrise_s && env.sunrise_s < env.sunset_s && env.sunset_s <= kDay))
    throw ConfigError("sunrise must precede sunset within one day");
  for (double r : env.hourly_rate)
    if (!(r >= 0.0 && r <= 3600.0)) throw ConfigError("hourly traffic rate must be within [0, 3600]");
  for (std::size_t i = 0; i < env.traffic_events.size(); ++i) {
    const auto& e = env.traffic_events[i];
    if (e.duration <= 0 || e.time < 0 || e.lamp < 0 || e.node < 0) throw ConfigError("invalid traffic event");
    if (i > 0 && e.time < env.traffic_events[i - 1].time) throw ConfigError("traffic events must be time-ordered");
  }
}

inline int interpolate(const std::vector<CurvePoint>& c, SimTime s) {
  if (s <= c.front().second_of_day) return c.front().value;
  if (s >= c.back().second_of_day) return c.back().value;
  const auto hi = std::upper_bound(c.begin(), c.end(), s,
                                   [](SimTime v, const CurvePoint& p) { return v < p.second_of_day; });
  const auto lo = hi - 1;
  const double f = static_cast<double>(s - lo->second_of_day) / static_cast<double>(hi->second_of_day - lo->second_of_day);
  return static_cast<int>(std::lround(lo->value + f * (hi->value - lo->value)));
}

inline SimTime second_of_day(SimTime t) { return ((t % kDay) + kDay) % kDay; }

inline int sun_pct_at(const EnvironmentConfig& env, SimTime t) {
  const SimTime s = second_of_day(t);
  if (!env.sun_curve.empty()) return interpolate(env.sun_curve, s);
  if (s <= env.sunrise_s || s >= env.sunset_s) return 0;
  // 100 * 4a(D-a)/D^2, rounded half-up in integers.
  const std::int64_t a = s - env.sunrise_s;
  const std::int64_t d = env.sunset_s - env.sunrise_s;
  return static_cast<int>((400 * a * (d - a) + d * d / 2) / (d * d));
}

inline EnvSample env_sample(const EnvironmentConfig& env, int node_index, int lamp_count, SimTime t) {
  if (t < 0) throw std::invalid_argument("env_sample at negative time");
  EnvSample out;
  out.sun_pct = sun_pct_at(env, t);
  out.temp_c = interpolate(env.temp_curve, second_of_day(t));
  out.traffic.assign(static_cast<std::size_t>(lamp_count), false);
  if (env.traffic_mode == TrafficMode::Scripted) {
    for (const auto& e : env.traffic_events) {
      if (e.time > t) break;
      if (e.node == node_index && e.lamp < lamp_count && t < e.time + e.duration)
        out.traffic[static_cast<std::size_t>(e.lamp)] = true;
    }
  } else {
    const double p = env.hourly_rate[static_cast<std::size_t>(second_of_day(t) / 3600)] / 3600.0;
    for (int i = 0; i < lamp_count; ++i)
      out.traffic[static_cast<std::size_t>(i)] =
          counter_uniform(env.rng_seed, {1, static_cast<std::uint64_t>(node_index), static_cast<std::uint64_t>(t),
                                         static_cast<std::uint64_t>(i)}) < p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Controller
// ---------------------------------------------------------------------------

struct ControllerConfig {
  int sun_on_threshold_pct = 40;   // night starts below this
  int sun_off_threshold_pct = 55;  // night ends above this
  int dim_level_pct = 50;
  int boost_level_pct = 100;
  SimTime boost_hold_s = 30;
  int fault_feedback_threshold_pct = 15;
  int fault_debounce_ticks = 3;
  SimTime tick_s = 1;
};

inline void validate(const ControllerConfig& c) {
  if (!(c.sun_on_threshold_pct < c.sun_off_threshold_pct))
    throw ConfigError("sun_on_threshold_pct must be < sun_off_threshold_pct");
  if (!(0 < c.dim_level_pct && c.dim_level_pct <= c.boost_level_pct && c.boost_level_pct <= 100))
    throw ConfigError("require 0 < dim_level_pct <= boost_level_pct <= 100");
  if (c.boost_hold_s < 0) throw ConfigError("boost_hold_s must be >= 0");
  if (c.fault_debounce_ticks < 1) throw ConfigError("fault_debounce_ticks must be >= 1");
  if (c.fault_feedback_threshold_pct < 0 || c.fault_feedback_threshold_pct > 100)
    throw ConfigError("fault_feedback_threshold_pct must be 0..100");
  if (c.tick_s < 1) throw ConfigError("tick_s must be >= 1");
}

enum class LampMode { Day, NightDim, NightBoost };

inline const char* to_string(LampMode m) {
  switch (m) {
    case LampMode::Day: return "Day";
    case LampMode::NightDim: return "NightDim";
    case LampMode::NightBoost: return "NightBoost";
  }
  return "?";
}

struct Override {
  int state_bit = 1;
  int brightness = 100;
  SimTime until = 0;  // exclusive
  friend bool operator==(const Override&, const Override&) = default;
};

struct LampControl {
  LampMode mode = LampMode::Day;
  std::optional<SimTime> boost_deadline;  // boost holds while t < deadline
  int dark_streak = 0;
  std::optional<FaultRecord> open_fault;
  std::optional<Override> override_;
  friend bool operator==(const LampControl&, const LampControl&) = default;
};

struct NodeState {
  std::string node_id;
  bool night_active = false;
  std::vector<LampControl> lamps;
  // Commands currently driving the lamps (decided on the previous tick).
  std::vector<LampState> applied;

  NodeState() = default;
  NodeState(std::string id, int lamp_count)
      : node_id(std::move(id)), lamps(static_cast<std::size_t>(lamp_count)), applied(static_cast<std::size_t>(lamp_count)) {}
  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct SimEvent {
  enum class Kind { NightStarted, NightEnded, ModeChanged, FaultOpened, FaultCleared, OverrideSet, OverrideCleared, OverrideExpired };
  Kind kind = Kind::ModeChanged;
  SimTime t = 0;
  int lamp = -1;
  LampMode from = LampMode::Day;
  LampMode to = LampMode::Day;
  std::optional<FaultRecord> fault;
  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

enum class FaultAction { None, Open, Clear };

struct FaultCheck {
  int streak = 0;
  FaultAction action = FaultAction::None;
};

// A lamp commanded on whose feedback stays below threshold for
// fault_debounce_ticks consecutive readings opens one LampDark fault; the first
// non-qualifying reading clears it.
inline FaultCheck detect_fault(const ControllerConfig& cfg, const LampState& lamp, int streak, bool fault_open) {
  if (streak < 0) throw std::invalid_argument("negative dark streak");
  const bool dark = lamp.on() && lamp.feedback_pct < cfg.fault_feedback_threshold_pct;
  if (!dark) return {0, fault_open ? FaultAction::Clear : FaultAction::None};
  const int next = streak + 1;
  return {next, !fault_open && next >= cfg.fault_debounce_ticks ? FaultAction::Open : FaultAction::None};
}

struct StepResult {
  NodeState next;
  std::vector<LampState> commands;
  std::vector<SimEvent> events;
};

// One control tick. `feedback` holds the lamp sensor readings for the
// commands in `st.applied`.
inline StepResult controller_step(const ControllerConfig& cfg, const NodeState& st, const EnvSample& sample,
                                  std::span<const int> feedback, SimTime t) {
  const std::size_t n = st.lamps.size();
  if (st.applied.size() != n || feedback.size() != n || sample.traffic.size() != n)
    throw std::invalid_argument("controller_step: lamp count mismatch");

  StepResult r;
  r.next = st;
  auto& nx = r.next;

  // Error detection on the readings of the tick that just ended.
  for (std::size_t i = 0; i < n; ++i) {
    auto& lc = nx.lamps[i];
    LampState observed = st.applied[i];
    observed.feedback_pct = feedback[i];
    const auto check = detect_fault(cfg, observed, lc.dark_streak, lc.open_fault.has_value());
    lc.dark_streak = check.streak;
    if (check.action == FaultAction::Open) {
      lc.open_fault = FaultRecord{st.node_id, static_cast<int>(i), FaultKind::LampDark, t, std::nullopt};
      r.events.push_back({SimEvent::Kind::FaultOpened, t, static_cast<int>(i), lc.mode, lc.mode, lc.open_fault});
    } else if (check.action == FaultAction::Clear) {
      FaultRecord closed = *lc.open_fault;
      closed.cleared = t;
      lc.open_fault.reset();
      r.events.push_back({SimEvent::Kind::FaultCleared, t, static_cast<int>(i), lc.mode, lc.mode, closed});
    }
  }

  // Sunlight gate with hysteresis.
  if (sample.sun_pct < cfg.sun_on_threshold_pct && !nx.night_active) {
    nx.night_active = true;
    r.events.push_back({SimEvent::Kind::NightStarted, t, -1, LampMode::Day, LampMode::Day, {}});
  } else if (sample.sun_pct > cfg.sun_off_threshold_pct && nx.night_active) {
    nx.night_active = false;
    r.events.push_back({SimEvent::Kind::NightEnded, t, -1, LampMode::Day, LampMode::Day, {}});
  }

  // Light control.
  r.commands.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& lc = nx.lamps[i];
    const int lamp = static_cast<int>(i);
    if (lc.override_ && t >= lc.override_->until) {
      lc.override_.reset();
      r.events.push_back({SimEvent::Kind::OverrideExpired, t, lamp, LampMode::Day, LampMode::Day, {}});
    }
    if (sample.traffic[i]) lc.boost_deadline = t + cfg.boost_hold_s;

    LampMode mode = LampMode::Day;
    if (nx.night_active)
      mode = sample.traffic[i] || (lc.boost_deadline && t < *lc.boost_deadline) ? LampMode::NightBoost : LampMode::NightDim;
    if (mode != lc.mode) {
      r.events.push_back({SimEvent::Kind::ModeChanged, t, lamp, lc.mode, mode, {}});
      lc.mode = mode;
    }

    LampState cmd = st.applied[i];
    cmd.feedback_pct = 0;
    if (lc.override_) {
      cmd.commanded = lc.override_->state_bit ? Commanded::On : Commanded::Off;
      cmd.brightness = BrightnessPct(lc.override_->brightness);
    } else if (mode == LampMode::Day) {
      cmd.commanded = Commanded::Off;
    } else {
      cmd.commanded = Commanded::On;
      cmd.brightness = BrightnessPct(mode == LampMode::NightBoost ? cfg.boost_level_pct : cfg.dim_level_pct);
    }
    r.commands[i] = cmd;
  }
  nx.applied = r.commands;
  return r;
}

// Applies an operator command to the node state. Returns false (and leaves
// the state untouched) when the lamp selector is out of range.
inline bool apply_command(NodeState& st, const wire::Command& c, SimTime t, std::vector<SimEvent>* events = nullptr) {
  const int n = static_cast<int>(st.lamps.size());
  if (c.lamp && (*c.lamp < 0 || *c.lamp >= n)) return false;
  const int first = c.lamp ? *c.lamp : 0;
  const int last = c.lamp ? *c.lamp : n - 1;
  for (int i = first; i <= last; ++i) {
    auto& lc = st.lamps[static_cast<std::size_t>(i)];
    if (c.action == wire::CommandAction::SetOverride) {
      lc.override_ = Override{c.state_bit, c.brightness, t + c.expiry_s};
      if (events) events->push_back({SimEvent::Kind::OverrideSet, t, i, LampMode::Day, LampMode::Day, {}});
    } else if (c.action == wire::CommandAction::ClearOverride && lc.override_) {
      lc.override_.reset();
      if (events) events->push_back({SimEvent::Kind::OverrideCleared, t, i, LampMode::Day, LampMode::Day, {}});
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Sensors
// ---------------------------------------------------------------------------

enum class InjectionKind { LampBurnedOut, FeedbackSensorCovered };

inline const char* to_string(InjectionKind k) {
  return k == InjectionKind::LampBurnedOut ? "LampBurnedOut" : "FeedbackSensorCovered";
}

struct FaultInjection {
  int node = 0;
  int lamp = 0;
  InjectionKind kind = InjectionKind::LampBurnedOut;
  SimTime start = 0;
  std::optional<SimTime> end;  // active on [start, end)

  bool active_at(SimTime t) const { return t >= start && (!end || t < *end); }
};

struct NodeConfig {
  std::string node_id = "N1";
  int index = 0;
  int lamp_count = kDefaultLampCount;
  int rated_watts = 40;
  int centivolts = 500;
  int baseline_ma = 95;
  int feedback_noise_pct = 0;
};

// Readings for the interval ending at `t`, produced by `applied` while the
// injections active at `measured_at` were in effect.
inline SensorFrame sensor_emulate(const NodeConfig& node, std::span<const LampState> applied, const EnvSample& sample,
                                  std::span<const FaultInjection> injections, std::uint64_t seed, SimTime measured_at,
                                  SimTime t) {
  SensorFrame f;
  f.node_id = node.node_id;
  f.sim_time = t;
  f.centivolts = node.centivolts;
  f.temp_c = sample.temp_c;
  f.sun_pct = sample.sun_pct;
  f.lamps.assign(applied.begin(), applied.end());
  f.override_until.assign(applied.size(), std::nullopt);

  std::int64_t centiwatts = 0;  // watts * brightness pct
  for (std::size_t i = 0; i < applied.size(); ++i) {
    bool burned = false;
    bool covered = false;
    for (const auto& inj : injections) {
      if (inj.node != node.index || inj.lamp != static_cast<int>(i) || !inj.active_at(measured_at)) continue;
      (inj.kind == InjectionKind::LampBurnedOut ? burned : covered) = true;
    }
    const bool emitting = applied[i].on() && !burned;
    int fb = emitting ? applied[i].brightness.value() : 0;
    if (node.feedback_noise_pct > 0) {
      const double u = counter_uniform(seed, {2, static_cast<std::uint64_t>(node.index), static_cast<std::uint64_t>(t),
                                              static_cast<std::uint64_t>(i)});
      fb += static_cast<int>(std::lround((2.0 * u - 1.0) * node.feedback_noise_pct));
    }
    f.lamps[i].feedback_pct = covered ? 0 : std::clamp(fb, 0, 100);
    if (emitting) centiwatts += static_cast<std::int64_t>(node.rated_watts) * applied[i].brightness.value();
  }
  // mA = 1000 * W / V = 1000 * (centiwatts / 100) / (centivolts / 100)
  f.milliamps = node.baseline_ma +
                static_cast<int>(std::llround(static_cast<double>(centiwatts) * 1000.0 / static_cast<double>(node.centivolts)));
  return f;
}

// ---------------------------------------------------------------------------
// Scenario and simulation
// ---------------------------------------------------------------------------

struct Scenario {
  EnvironmentConfig env;
  ControllerConfig controller;
  int node_count = 1;
  int lamps_per_node = kDefaultLampCount;
  int rated_watts = 40;
  int centivolts = 500;
  int baseline_ma = 95;
  int feedback_noise_pct = 0;
  std::vector<FaultInjection> injections;
  SimTime duration_s = kDay;
  SimTime report_every_s = 10;
  wire::Date epoch_date{13, 2, 2022};

  static std::string node_id(int index) { return "N" + std::to_string(index + 1); }
};

inline void validate(const Scenario& s) {
  validate(s.controller);
  validate(s.env);
  if (s.duration_s <= 0) throw ConfigError("duration_s must be > 0");
  if (s.node_count < 1 || s.node_count > 10000) throw ConfigError("node count must be 1..10000");
  if (s.lamps_per_node < 1 || s.lamps_per_node > 64) throw ConfigError("lamps_per_node must be 1..64");
  if (s.rated_watts < 0) throw ConfigError("lamp watts must be >= 0");
  if (s.centivolts <= 0) throw ConfigError("volts must be > 0");
  if (s.baseline_ma < 0) throw ConfigError("baseline_ma must be >= 0");
  if (s.feedback_noise_pct < 0 || s.feedback_noise_pct > 100) throw ConfigError("feedback_noise_pct must be 0..100");
  if (s.report_every_s < s.controller.tick_s || s.report_every_s % s.controller.tick_s != 0)
    throw ConfigError("report_every_s must be a positive multiple of tick_s");
  for (const auto& inj : s.injections) {
    if (inj.node < 0 || inj.node >= s.node_count || inj.lamp < 0 || inj.lamp >= s.lamps_per_node)
      throw ConfigError("injection targets an unknown node or lamp");
    if (inj.end && !(inj.start < *inj.end)) throw ConfigError("injection start must be < end");
  }
  for (const auto& e : s.env.traffic_events)
    if (e.node >= s.node_count || e.lamp >= s.lamps_per_node) throw ConfigError("traffic event targets an unknown lamp");
  if (s.epoch_date.year < 1000 || s.epoch_date.year > 9000 || s.epoch_date.month < 1 || s.epoch_date.month > 12 ||
      s.epoch_date.day < 1 || s.epoch_date.day > wire::days_in_month(s.epoch_date.year, s.epoch_date.month))
    throw ConfigError("invalid epoch date");
}

struct NodeTick {
  std::string node_id;
  int node_index = 0;
  SimTime t = 0;
  bool night_active = false;
  SensorFrame readings;                 // every tick
  bool reported = false;                // readings go out as telemetry
  std::vector<LampState> commands;      // decided this tick
  std::vector<SimEvent> events;
  std::vector<wire::AckPayload> acks;
};

class Simulation {
 public:
  explicit Simulation(Scenario s) : scenario_(std::move(s)) {
    validate(scenario_);
    for (int i = 0; i < scenario_.node_count; ++i) {
      NodeConfig cfg;
      cfg.node_id = Scenario::node_id(i);
      cfg.index = i;
      cfg.lamp_count = scenario_.lamps_per_node;
      cfg.rated_watts = scenario_.rated_watts;
      cfg.centivolts = scenario_.centivolts;
      cfg.baseline_ma = scenario_.baseline_ma;
      cfg.feedback_noise_pct = scenario_.feedback_noise_pct;
      nodes_.push_back({cfg, NodeState(cfg.node_id, cfg.lamp_count), {}, false});
    }
  }

  const Scenario& scenario() const { return scenario_; }
  SimTime now() const { return now_; }
  bool done() const { return now_ > scenario_.duration_s; }
  const NodeState& node_state(int i) const { return nodes_.at(static_cast<std::size_t>(i)).state; }
  int node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (nodes_[i].config.node_id == id) return static_cast<int>(i);
    return -1;
  }

  // Queues a command; it takes effect at the node's next tick.
  bool deliver(std::uint64_t command_seq, const wire::Command& c) {
    const int i = node_index(c.node);
    if (i < 0) return false;
    nodes_[static_cast<std::size_t>(i)].inbox.push_back({command_seq, c});
    return true;
  }

  // Lamp energy accumulated so far as watt-seconds * 100.
  std::int64_t centiwatt_seconds() const { return centiwatt_seconds_; }

  // Advances all nodes by one tick at time now().
  std::vector<NodeTick> step() {
    const SimTime t = now_;
    const auto& cfg = scenario_.controller;
    std::vector<NodeTick> out;
    out.reserve(nodes_.size());
    for (auto& node : nodes_) {
      NodeTick tick;
      tick.node_id = node.config.node_id;
      tick.node_index = node.config.index;
      tick.t = t;
      const auto sample = env_sample(scenario_.env, node.config.index, node.config.lamp_count, t);
      tick.readings = sensor_emulate(node.config, node.state.applied, sample, scenario_.injections,
                                     scenario_.env.rng_seed, t - cfg.tick_s, t);
      for (std::size_t i = 0; i < node.state.lamps.size(); ++i)
        if (const auto& o = node.state.lamps[i].override_) tick.readings.override_until[i] = o->until;
      tick.reported = t % scenario_.report_every_s == 0 || node.snapshot_requested;
      node.snapshot_requested = false;

      while (!node.inbox.empty()) {
        const auto [seq, c] = node.inbox.front();
        node.inbox.pop_front();
        const bool ok = apply_command(node.state, c, t, &tick.events);
        if (ok && c.action == wire::CommandAction::RequestSnapshot) node.snapshot_requested = true;
        tick.acks.push_back({node.config.node_id, seq, ok, ok ? "" : "lamp index out of range"});
      }

      std::vector<int> feedback;
      feedback.reserve(tick.readings.lamps.size());
      for (const auto& l : tick.readings.lamps) feedback.push_back(l.feedback_pct);
      auto step = controller_step(cfg, node.state, sample, feedback, t);
      node.state = std::move(step.next);
      tick.night_active = node.state.night_active;
      tick.commands = std::move(step.commands);
      tick.events.insert(tick.events.end(), step.events.begin(), step.events.end());
      for (const auto& c : tick.commands)
        if (c.on()) centiwatt_seconds_ += static_cast<std::int64_t>(node.config.rated_watts) * c.brightness.value() * cfg.tick_s;
      out.push_back(std::move(tick));
    }
    now_ += cfg.tick_s;
    return out;
  }

 private:
  struct Node {
    NodeConfig config;
    NodeState state;
    std::deque<std::pair<std::uint64_t, wire::Command>> inbox;
    bool snapshot_requested = false;
  };

  Scenario scenario_;
  std::vector<Node> nodes_;
  SimTime now_ = 0;
  std::int64_t centiwatt_seconds_ = 0;
};

// Turns node ticks into wire frames, keeping per-node sequence counters.
class WireEmitter {
 public:
  WireEmitter(int rated_watts, wire::Date epoch) : rated_watts_(rated_watts), epoch_(epoch) {}

  std::vector<wire::Message> messages(const NodeTick& tick) {
    std::vector<wire::Message> out;
    auto& seq = seqs_[tick.node_id];
    if (tick.reported) out.push_back({++seq.telemetry, telemetry(tick.readings)});
    for (const auto& e : tick.events) {
      if (!e.fault) continue;
      out.push_back({++seq.fault, wire::FaultPayload{e.fault->node_id, e.fault->lamp_index, e.fault->kind,
                                                     e.fault->onset, e.fault->cleared}});
    }
    for (const auto& a : tick.acks) out.push_back({++seq.ack, a});
    return out;
  }

  std::string encode(const NodeTick& tick) {
    std::string out;
    for (const auto& m : messages(tick)) out += wire::encode_message(m);
    return out;
  }

  wire::TelemetryPayload telemetry(const SensorFrame& f) const {
    wire::TelemetryPayload p;
    p.node = f.node_id;
    p.t = f.sim_time;
    p.rated_watts = rated_watts_;
    wire::set_labels(p.row, wire::days_from_civil(epoch_) * kDay + f.sim_time);
    p.row.centivolts = f.centivolts;
    p.row.milliamps = f.milliamps;
    p.row.temp_c = f.temp_c;
    p.row.sun_pct = f.sun_pct;
    p.row.lamps = f.cells();
    for (const auto& l : f.lamps) p.feedback.push_back(l.feedback_pct);
    p.override_until = f.override_until;
    return p;
  }

 private:
  struct Seqs {
    std::uint64_t telemetry = 0, fault = 0, ack = 0;
  };
  int rated_watts_;
  wire::Date epoch_;
  std::map<std::string, Seqs> seqs_;
};

struct SimSummary {
  std::uint64_t ticks = 0;
  std::uint64_t frames = 0;
  std::uint64_t faults_opened = 0;
  std::uint64_t faults_cleared = 0;
  std::uint64_t mode_changes = 0;
  Decimal lamp_kwh;

  std::string to_string() const {
    return "ticks=" + std::to_string(ticks) + " frames=" + std::to_string(frames) +
           " faults_opened=" + std::to_string(faults_opened) + " faults_cleared=" + std::to_string(faults_cleared) +
           " mode_changes=" + std::to_string(mode_changes) + " lamp_kwh=" + lamp_kwh.to_string();
  }
};

struct SimResult {
  // Ticks that reported telemetry or produced events, in time then node order.
  std::vector<NodeTick> ticks;
  std::string stream;  // the wire encoding of `ticks`
  SimSummary summary;
};

// Runs the scenario from t = 0 through duration_s inclusive.
inline SimResult simulate(const Scenario& scenario) {
  Simulation sim(scenario);
  WireEmitter emitter(scenario.rated_watts, scenario.epoch_date);
  SimResult r;
  while (!sim.done()) {
    for (auto& tick : sim.step()) {
      ++r.summary.ticks;
      for (const auto& e : tick.events) {
        if (e.kind == SimEvent::Kind::FaultOpened) ++r.summary.faults_opened;
        if (e.kind == SimEvent::Kind::FaultCleared) ++r.summary.faults_cleared;
        if (e.kind == SimEvent::Kind::ModeChanged) ++r.summary.mode_changes;
      }
      if (!tick.reported && tick.events.empty()) continue;
      if (tick.reported) ++r.summary.frames;
      r.stream += emitter.encode(tick);
      r.ticks.push_back(std::move(tick));
    }
  }
  r.summary.lamp_kwh = Decimal(sim.centiwatt_seconds()).divided(Decimal(360000000), 9);
  return r;
}

}  // namespace streetlight::sim
