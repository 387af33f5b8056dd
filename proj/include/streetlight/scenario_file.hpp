#pragma once

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "streetlight/node_sim.hpp"

namespace streetlight::sim {

// YAML scenario files. Every key is optional and falls back to the
// Scenario defaults; unknown keys are rejected so typos do not silently
// run the default. Times of day are "HH:MM" or "HH:MM:SS"; absolute times
// are seconds of simulation time. Schema: docs/scenario-format.md.

namespace yaml_detail {

inline void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& where) {
  if (!n.IsMap()) throw ConfigError(where + ": expected a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const YAML::Node& n, const char* key, T& out, const std::string& where) {
  if (!n[key]) return;
  try {
    out = n[key].as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

inline SimTime parse_time_of_day(const YAML::Node& n, const std::string& where) {
  const auto s = n.as<std::string>();
  int parts[3] = {0, 0, 0};
  int count = 0;
  std::size_t i = 0;
  bool ok = !s.empty();
  while (ok && i < s.size() && count < 3) {
    const std::size_t start = i;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    ok = i - start == 2 || (count == 0 && i - start == 1);
    if (ok) parts[count++] = std::stoi(s.substr(start, i - start));
    if (i < s.size()) ok = ok && s[i++] == ':' && i < s.size();
  }
  const int h = parts[0], m = parts[1], sec = parts[2];
  if (!ok || i != s.size() || count < 2 || h > 24 || m > 59 || sec > 59 || (h == 24 && (m || sec)))
    throw ConfigError(where + ": bad time of day '" + s + "'");
  return h * 3600 + m * 60 + sec;
}

inline std::vector<CurvePoint> read_curve(const YAML::Node& n, const std::string& where) {
  if (!n.IsSequence()) throw ConfigError(where + ": expected a list of [time, value] pairs");
  std::vector<CurvePoint> out;
  for (const auto& p : n) {
    if (!p.IsSequence() || p.size() != 2) throw ConfigError(where + ": expected [time, value]");
    try {
      out.push_back({parse_time_of_day(p[0], where), p[1].as<int>()});
    } catch (const YAML::Exception&) {
      throw ConfigError(where + ": bad curve point");
    }
  }
  return out;
}

}  // namespace yaml_detail

namespace yaml_detail {

inline Scenario scenario_from_node(const YAML::Node& root) {
  Scenario s;
  if (root.IsNull()) {
    validate(s);
    return s;
  }
  check_keys(root,
             {"seed", "duration_s", "report_every_s", "epoch_date", "nodes", "lamps_per_node", "lamp_watts", "volts",
              "baseline_ma", "feedback_noise_pct", "controller", "environment", "injections"},
             "scenario");
  read(root, "seed", s.env.rng_seed, "scenario");
  read(root, "duration_s", s.duration_s, "scenario");
  read(root, "report_every_s", s.report_every_s, "scenario");
  read(root, "nodes", s.node_count, "scenario");
  read(root, "lamps_per_node", s.lamps_per_node, "scenario");
  read(root, "lamp_watts", s.rated_watts, "scenario");
  read(root, "baseline_ma", s.baseline_ma, "scenario");
  read(root, "feedback_noise_pct", s.feedback_noise_pct, "scenario");
  if (root["volts"]) {
    const auto v = Decimal::parse(root["volts"].as<std::string>());
    s.centivolts = static_cast<int>((v * Decimal(100)).rounded(0).mantissa());
  }
  if (root["epoch_date"]) {
    try {
      // Reuse the row date codec: DD/MM/YYYY.
      const auto row = wire::decode_row(root["epoch_date"].as<std::string>() + "\t12:00:00am\t0.00\t0\t0\t0\t0@0", 1);
      s.epoch_date = row.date;
    } catch (const wire::ParseError&) {
      throw ConfigError("scenario.epoch_date: expected DD/MM/YYYY");
    }
  }

  if (const auto c = root["controller"]) {
    check_keys(c,
               {"sun_on_threshold_pct", "sun_off_threshold_pct", "dim_level_pct", "boost_level_pct", "boost_hold_s",
                "fault_feedback_threshold_pct", "fault_debounce_ticks", "tick_s"},
               "controller");
    auto& k = s.controller;
    read(c, "sun_on_threshold_pct", k.sun_on_threshold_pct, "controller");
    read(c, "sun_off_threshold_pct", k.sun_off_threshold_pct, "controller");
    read(c, "dim_level_pct", k.dim_level_pct, "controller");
    read(c, "boost_level_pct", k.boost_level_pct, "controller");
    read(c, "boost_hold_s", k.boost_hold_s, "controller");
    read(c, "fault_feedback_threshold_pct", k.fault_feedback_threshold_pct, "controller");
    read(c, "fault_debounce_ticks", k.fault_debounce_ticks, "controller");
    read(c, "tick_s", k.tick_s, "controller");
  }

  if (const auto e = root["environment"]) {
    check_keys(e, {"sunrise", "sunset", "sun_curve", "temp_curve", "traffic"}, "environment");
    if (e["sunrise"]) s.env.sunrise_s = parse_time_of_day(e["sunrise"], "environment.sunrise");
    if (e["sunset"]) s.env.sunset_s = parse_time_of_day(e["sunset"], "environment.sunset");
    if (e["sun_curve"]) s.env.sun_curve = read_curve(e["sun_curve"], "environment.sun_curve");
    if (e["temp_curve"]) s.env.temp_curve = read_curve(e["temp_curve"], "environment.temp_curve");
    if (const auto t = e["traffic"]) {
      check_keys(t, {"mode", "hourly_rate", "events"}, "environment.traffic");
      if (t["mode"]) {
        const auto mode = t["mode"].as<std::string>();
        if (mode == "scripted") s.env.traffic_mode = TrafficMode::Scripted;
        else if (mode == "stochastic") s.env.traffic_mode = TrafficMode::Stochastic;
        else throw ConfigError("environment.traffic.mode must be scripted or stochastic");
      }
      if (const auto r = t["hourly_rate"]) {
        if (!r.IsSequence() || r.size() != 24) throw ConfigError("environment.traffic.hourly_rate needs 24 values");
        for (std::size_t h = 0; h < 24; ++h) s.env.hourly_rate[h] = r[h].as<double>();
      }
      if (const auto ev = t["events"]) {
        if (!ev.IsSequence()) throw ConfigError("environment.traffic.events must be a list");
        for (const auto& item : ev) {
          check_keys(item, {"time", "node", "lamp", "duration"}, "traffic event");
          TrafficEvent te;
          read(item, "time", te.time, "traffic event");
          read(item, "node", te.node, "traffic event");
          read(item, "lamp", te.lamp, "traffic event");
          read(item, "duration", te.duration, "traffic event");
          s.env.traffic_events.push_back(te);
        }
      }
    }
  }

  if (const auto inj = root["injections"]) {
    if (!inj.IsSequence()) throw ConfigError("injections must be a list");
    for (const auto& item : inj) {
      check_keys(item, {"node", "lamp", "kind", "start", "end"}, "injection");
      FaultInjection fi;
      read(item, "node", fi.node, "injection");
      read(item, "lamp", fi.lamp, "injection");
      read(item, "start", fi.start, "injection");
      if (item["end"]) fi.end = item["end"].as<SimTime>();
      const auto kind = item["kind"] ? item["kind"].as<std::string>() : std::string();
      if (kind == "LampBurnedOut") fi.kind = InjectionKind::LampBurnedOut;
      else if (kind == "FeedbackSensorCovered") fi.kind = InjectionKind::FeedbackSensorCovered;
      else throw ConfigError("injection.kind must be LampBurnedOut or FeedbackSensorCovered");
      s.injections.push_back(fi);
    }
  }

  validate(s);
  return s;
}

}  // namespace yaml_detail

inline Scenario parse_scenario(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario is not valid YAML: ") + e.what());
  }
  try {
    return yaml_detail::scenario_from_node(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario: bad value: ") + e.msg);
  }
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read scenario file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

}  // namespace streetlight::sim
