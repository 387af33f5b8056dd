#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace streetlight {

// Seconds of virtual (simulation) time since the stream's epoch.
using SimTime = std::int64_t;

inline constexpr int kDefaultLampCount = 6;

// Integer percentage clamped to [0, 100].
class BrightnessPct {
 public:
  constexpr BrightnessPct() = default;
  constexpr explicit BrightnessPct(int v) : value_(std::clamp(v, 0, 100)) {}
  constexpr int value() const { return value_; }
  friend constexpr auto operator<=>(BrightnessPct, BrightnessPct) = default;

 private:
  int value_ = 0;
};

constexpr BrightnessPct clamp_brightness(int raw) { return BrightnessPct(raw); }

enum class Commanded : std::uint8_t { Off, On };

struct LampState {
  Commanded commanded = Commanded::Off;
  // Last commanded level; kept while Off but draws no power.
  BrightnessPct brightness{};
  // Lamp-facing light sensor reading. Unconstrained relative to `commanded`.
  int feedback_pct = 0;

  constexpr bool on() const { return commanded == Commanded::On; }
  friend bool operator==(const LampState&, const LampState&) = default;
};

// One `<state_bit>@<level>` telemetry cell.
struct LampStatus {
  int state_bit = 0;
  int level = 0;
  friend bool operator==(const LampStatus&, const LampStatus&) = default;
};

// The cell records commanded brightness when the lamp is on and the
// feedback sensor reading when it is off.
inline LampStatus to_status(const LampState& s) {
  return s.on() ? LampStatus{1, s.brightness.value()} : LampStatus{0, std::clamp(s.feedback_pct, 0, 100)};
}

// Linear brightness->power law. Off lamps draw nothing.
constexpr double lamp_power_watts(double rated_watts, const LampState& state) {
  if (!state.on()) return 0.0;
  return rated_watts * state.brightness.value() / 100.0;
}

struct SensorFrame {
  std::string node_id;
  SimTime sim_time = 0;
  int centivolts = 500;  // 5.00 V
  int milliamps = 0;
  int temp_c = 0;
  int sun_pct = 0;
  std::vector<LampState> lamps;
  // Per lamp: end of the active operator override, if any.
  std::vector<std::optional<SimTime>> override_until;

  std::vector<LampStatus> cells() const {
    std::vector<LampStatus> out;
    out.reserve(lamps.size());
    for (const auto& l : lamps) out.push_back(to_status(l));
    return out;
  }
  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

enum class FaultKind : std::uint8_t { LampDark };

inline const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::LampDark:
      return "LampDark";
  }
  return "?";
}

struct FaultRecord {
  std::string node_id;
  int lamp_index = 0;
  FaultKind kind = FaultKind::LampDark;
  SimTime onset = 0;
  std::optional<SimTime> cleared;

  bool open() const { return !cleared.has_value(); }
  friend bool operator==(const FaultRecord&, const FaultRecord&) = default;
};

}  // namespace streetlight
