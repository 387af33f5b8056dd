#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "streetlight/core.hpp"

namespace streetlight::wire {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

// Malformed telemetry row. `column()` is the 1-based field position.
class ParseError : public std::runtime_error {
 public:
  ParseError(int column, const std::string& what)
      : std::runtime_error("column " + std::to_string(column) + ": " + what), column_(column) {}
  int column() const { return column_; }

 private:
  int column_;
};

class FrameError : public std::runtime_error {
 public:
  enum class Kind { BadTag, Malformed, SequenceRegression, Truncated };
  FrameError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// ---------------------------------------------------------------------------
// Strict token helpers. Every accepted token is in canonical form, so
// decode followed by encode reproduces the input bytes.
// ---------------------------------------------------------------------------
namespace detail {

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

// Canonical unsigned decimal: no sign, no leading zeros.
inline std::optional<std::uint64_t> parse_uint(std::string_view s) {
  if (s.empty() || s.size() > 19) return std::nullopt;
  if (s.size() > 1 && s[0] == '0') return std::nullopt;
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Canonical signed decimal: optional '-', never "-0".
inline std::optional<std::int64_t> parse_int(std::string_view s) {
  bool neg = !s.empty() && s[0] == '-';
  auto mag = parse_uint(neg ? s.substr(1) : s);
  if (!mag || *mag > static_cast<std::uint64_t>(INT64_MAX)) return std::nullopt;
  if (neg && *mag == 0) return std::nullopt;
  return neg ? -static_cast<std::int64_t>(*mag) : static_cast<std::int64_t>(*mag);
}

inline std::optional<int> parse_fixed_digits(std::string_view s, std::size_t width) {
  if (s.size() != width) return std::nullopt;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    v = v * 10 + (c - '0');
  }
  return v;
}

inline std::string pad2(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Civil calendar
// ---------------------------------------------------------------------------

struct Date {
  int day = 1;
  int month = 1;
  int year = 1970;
  friend bool operator==(const Date&, const Date&) = default;
};

struct ClockTime {
  int hour12 = 12;  // 1..12
  int minute = 0;
  int second = 0;
  bool pm = false;
  friend bool operator==(const ClockTime&, const ClockTime&) = default;
};

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : kDays[m - 1];
}

// Days since 1970-01-01 (proleptic Gregorian).
inline std::int64_t days_from_civil(const Date& d) {
  const std::int64_t y = d.year - (d.month <= 2 ? 1 : 0);
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const std::int64_t yoe = y - era * 400;
  const std::int64_t mp = (d.month + 9) % 12;
  const std::int64_t doy = (153 * mp + 2) / 5 + d.day - 1;
  const std::int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

inline Date civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const int day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  const int month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  const int year = static_cast<int>(yoe + era * 400 + (month <= 2 ? 1 : 0));
  return {day, month, year};
}

inline ClockTime clock_from_seconds_of_day(std::int64_t s) {
  const int h24 = static_cast<int>(s / 3600);
  ClockTime c;
  c.minute = static_cast<int>((s / 60) % 60);
  c.second = static_cast<int>(s % 60);
  c.pm = h24 >= 12;
  c.hour12 = h24 % 12 == 0 ? 12 : h24 % 12;
  return c;
}

inline std::int64_t seconds_of_day(const ClockTime& c) {
  const int h24 = (c.hour12 % 12) + (c.pm ? 12 : 0);
  return h24 * 3600 + c.minute * 60 + c.second;
}

// ---------------------------------------------------------------------------
// Telemetry row: Date, Time, Volt, Amp, Temp, Sun, Light 01..N
// ---------------------------------------------------------------------------

inline constexpr int kFixedColumns = 6;

struct TelemetryRow {
  Date date;
  ClockTime time;
  int centivolts = 500;
  int milliamps = 0;
  int temp_c = 0;
  int sun_pct = 0;
  std::vector<LampStatus> lamps;
  friend bool operator==(const TelemetryRow&, const TelemetryRow&) = default;
};

// Label timestamps as seconds since 1970-01-01 00:00:00, no time zone.
inline std::int64_t label_seconds(const TelemetryRow& r) {
  return days_from_civil(r.date) * 86400 + seconds_of_day(r.time);
}

inline void set_labels(TelemetryRow& r, std::int64_t seconds_since_1970) {
  const std::int64_t day = seconds_since_1970 >= 0 ? seconds_since_1970 / 86400 : (seconds_since_1970 - 86399) / 86400;
  r.date = civil_from_days(day);
  r.time = clock_from_seconds_of_day(seconds_since_1970 - day * 86400);
}

inline std::string encode_lamp_cell(const LampStatus& s) {
  if (s.state_bit != 0 && s.state_bit != 1) throw std::invalid_argument("state bit must be 0 or 1");
  if (s.level < 0 || s.level > 100) throw std::invalid_argument("lamp level out of range");
  return std::to_string(s.state_bit) + "@" + std::to_string(s.level);
}

inline LampStatus decode_lamp_cell(std::string_view cell, int column = 0) {
  const auto at = cell.find('@');
  if (at != 1) throw ParseError(column, "lamp cell must be <bit>@<level>");
  if (cell[0] != '0' && cell[0] != '1') throw ParseError(column, "lamp state bit must be 0 or 1");
  const auto level = detail::parse_uint(cell.substr(2));
  if (!level || *level > 100) throw ParseError(column, "lamp level must be 0..100");
  return {cell[0] - '0', static_cast<int>(*level)};
}

inline std::string encode_date(const Date& d) {
  return detail::pad2(d.day) + "/" + detail::pad2(d.month) + "/" + std::to_string(d.year);
}

inline std::string encode_time(const ClockTime& t) {
  return detail::pad2(t.hour12) + ":" + detail::pad2(t.minute) + ":" + detail::pad2(t.second) + (t.pm ? "pm" : "am");
}

inline std::string encode_volts(int centivolts) {
  if (centivolts < 0) throw std::invalid_argument("negative volts");
  return std::to_string(centivolts / 100) + "." + detail::pad2(centivolts % 100);
}

// Rejects values decode_row would not accept back.
inline void validate_row(const TelemetryRow& r) {
  const auto& d = r.date;
  if (d.year < 1000 || d.year > 9999 || d.month < 1 || d.month > 12 || d.day < 1 || d.day > days_in_month(d.year, d.month))
    throw std::invalid_argument("invalid row date");
  const auto& t = r.time;
  if (t.hour12 < 1 || t.hour12 > 12 || t.minute < 0 || t.minute > 59 || t.second < 0 || t.second > 59)
    throw std::invalid_argument("invalid row time");
  if (r.centivolts < 0 || r.centivolts > 10000099 || r.milliamps < 0 || r.milliamps > 100000000 || r.temp_c < -100 ||
      r.temp_c > 200 || r.sun_pct < 0 || r.sun_pct > 100)
    throw std::invalid_argument("row value out of range");
}

inline std::string encode_row(const TelemetryRow& r, char sep = '\t') {
  validate_row(r);
  std::string out = encode_date(r.date);
  out += sep;
  out += encode_time(r.time);
  out += sep;
  out += encode_volts(r.centivolts);
  out += sep;
  out += std::to_string(r.milliamps);
  out += sep;
  out += std::to_string(r.temp_c);
  out += sep;
  out += std::to_string(r.sun_pct);
  for (const auto& l : r.lamps) {
    out += sep;
    out += encode_lamp_cell(l);
  }
  return out;
}

inline TelemetryRow decode_row(std::string_view line, std::size_t lamp_count, char sep = '\t') {
  const auto f = detail::split(line, sep);
  if (f.size() != kFixedColumns + lamp_count)
    throw ParseError(static_cast<int>(std::min(f.size(), kFixedColumns + lamp_count)) + 1,
                     "expected " + std::to_string(kFixedColumns + lamp_count) + " fields, got " +
                         std::to_string(f.size()));
  TelemetryRow r;

  // Date: DD/MM/YYYY
  {
    const auto& s = f[0];
    auto d = s.size() == 10 && s[2] == '/' && s[5] == '/' ? detail::parse_fixed_digits(s.substr(0, 2), 2) : std::nullopt;
    auto m = d ? detail::parse_fixed_digits(s.substr(3, 2), 2) : std::nullopt;
    auto y = m ? detail::parse_fixed_digits(s.substr(6, 4), 4) : std::nullopt;
    if (!y || *y < 1000 || *m < 1 || *m > 12 || *d < 1 || *d > days_in_month(*y, *m))
      throw ParseError(1, "date must be DD/MM/YYYY");
    r.date = {*d, *m, *y};
  }
  // Time: hh:mm:ss{am,pm}
  {
    const auto& s = f[1];
    bool ok = s.size() == 10 && s[2] == ':' && s[5] == ':' && (s.substr(8) == "am" || s.substr(8) == "pm");
    auto h = ok ? detail::parse_fixed_digits(s.substr(0, 2), 2) : std::nullopt;
    auto mi = h ? detail::parse_fixed_digits(s.substr(3, 2), 2) : std::nullopt;
    auto se = mi ? detail::parse_fixed_digits(s.substr(6, 2), 2) : std::nullopt;
    if (!se || *h < 1 || *h > 12 || *mi > 59 || *se > 59) throw ParseError(2, "time must be hh:mm:ss followed by am/pm");
    r.time = {*h, *mi, *se, s.substr(8) == "pm"};
  }
  // Volt: fixed two decimals
  {
    const auto& s = f[2];
    const auto dot = s.find('.');
    auto whole = dot == std::string_view::npos ? std::nullopt : detail::parse_uint(s.substr(0, dot));
    auto frac = whole ? detail::parse_fixed_digits(s.substr(dot + 1), 2) : std::nullopt;
    if (!frac || *whole > 100000) throw ParseError(3, "volt must have exactly two decimals");
    r.centivolts = static_cast<int>(*whole) * 100 + *frac;
  }
  {
    auto a = detail::parse_uint(f[3]);
    if (!a || *a > 100000000) throw ParseError(4, "amp must be a non-negative integer");
    r.milliamps = static_cast<int>(*a);
  }
  {
    auto t = detail::parse_int(f[4]);
    if (!t || *t < -100 || *t > 200) throw ParseError(5, "temp must be an integer");
    r.temp_c = static_cast<int>(*t);
  }
  {
    auto s = detail::parse_uint(f[5]);
    if (!s || *s > 100) throw ParseError(6, "sun must be 0..100");
    r.sun_pct = static_cast<int>(*s);
  }
  r.lamps.reserve(lamp_count);
  for (std::size_t i = 0; i < lamp_count; ++i)
    r.lamps.push_back(decode_lamp_cell(f[kFixedColumns + i], static_cast<int>(kFixedColumns + i + 1)));
  return r;
}

// Arity-free variant: the lamp count is whatever follows the fixed columns.
inline TelemetryRow decode_row_any_arity(std::string_view line, char sep = '\t') {
  const auto n = detail::split(line, sep).size();
  if (n <= static_cast<std::size_t>(kFixedColumns)) throw ParseError(static_cast<int>(n) + 1, "row has no lamp cells");
  return decode_row(line, n - kFixedColumns, sep);
}

inline std::string row_header(std::size_t lamp_count, char sep = '\t') {
  std::string out = "Date";
  for (const char* c : {"Time", "Volt", "Amp", "Temp", "Sun"}) {
    out += sep;
    out += c;
  }
  for (std::size_t i = 1; i <= lamp_count; ++i) {
    out += sep;
    out += "Light " + detail::pad2(static_cast<int>(i));
  }
  return out;
}

inline std::string csv_header(std::size_t lamp_count) { return row_header(lamp_count, ','); }
inline std::string encode_csv_row(const TelemetryRow& r) { return encode_row(r, ','); }
inline TelemetryRow decode_csv_row(std::string_view line, std::size_t lamp_count) {
  return decode_row(line, lamp_count, ',');
}

// ---------------------------------------------------------------------------
// Messages
// ---------------------------------------------------------------------------

inline constexpr std::string_view kControlRoomSender = "control-room";

enum class MessageKind { Telemetry, Fault, Command, Ack };

inline const char* tag(MessageKind k) {
  switch (k) {
    case MessageKind::Telemetry: return "TEL";
    case MessageKind::Fault: return "FLT";
    case MessageKind::Command: return "CMD";
    case MessageKind::Ack: return "ACK";
  }
  return "?";
}

inline bool valid_node_id(std::string_view id) {
  if (id.empty() || id.size() > 32) return false;
  for (char c : id)
    if (!((c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.' || c == '-'))
      return false;
  return true;
}

struct TelemetryPayload {
  std::string node;
  SimTime t = 0;
  int rated_watts = 40;
  std::vector<int> feedback;                       // per lamp, 0..100
  std::vector<std::optional<SimTime>> override_until;  // per lamp
  TelemetryRow row;
  friend bool operator==(const TelemetryPayload&, const TelemetryPayload&) = default;
};

struct FaultPayload {
  std::string node;
  int lamp = 0;
  FaultKind kind = FaultKind::LampDark;
  SimTime onset = 0;
  std::optional<SimTime> cleared;  // set on the clearing event
  friend bool operator==(const FaultPayload&, const FaultPayload&) = default;
};

enum class CommandAction { SetOverride, ClearOverride, RequestSnapshot };

struct Command {
  std::string node;
  std::optional<int> lamp;  // nullopt selects ALL lamps
  CommandAction action = CommandAction::RequestSnapshot;
  int state_bit = 1;
  int brightness = 100;
  std::int64_t expiry_s = 600;
  friend bool operator==(const Command&, const Command&) = default;
};

struct AckPayload {
  std::string node;
  std::uint64_t command_seq = 0;
  bool accepted = true;
  std::string note;
  friend bool operator==(const AckPayload&, const AckPayload&) = default;
};

struct Message {
  std::uint64_t seq = 1;
  std::variant<TelemetryPayload, FaultPayload, Command, AckPayload> body;

  MessageKind kind() const { return static_cast<MessageKind>(body.index()); }
  const std::string& node() const {
    return std::visit([](const auto& b) -> const std::string& { return b.node; }, body);
  }
  std::string sender() const {
    return kind() == MessageKind::Command ? std::string(kControlRoomSender) : node();
  }
  friend bool operator==(const Message&, const Message&) = default;
};

// Free text escaping: bytes outside 0x21..0x7E plus '%' and '-' become %XX,
// and the empty string is "-". The output never contains spaces or newlines.
inline std::string escape_text(std::string_view s) {
  if (s.empty()) return "-";
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (c > 0x20 && c < 0x7F && c != '%' && c != '-') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0xF];
    }
  }
  return out;
}

inline std::optional<std::string> unescape_text(std::string_view s) {
  if (s == "-") return std::string();
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (c == '%') {
      if (i + 2 >= s.size()) return std::nullopt;
      const int hi = hex(s[i + 1]);
      const int lo = hex(s[i + 2]);
      if (hi < 0 || lo < 0) return std::nullopt;
      const auto v = static_cast<unsigned char>(hi * 16 + lo);
      if (v > 0x20 && v < 0x7F && v != '%' && v != '-') return std::nullopt;  // non-canonical
      out += static_cast<char>(v);
      i += 2;
    } else if (c > 0x20 && c < 0x7F && c != '-') {
      out += static_cast<char>(c);
    } else {
      return std::nullopt;
    }
  }
  if (out.empty()) return std::nullopt;
  return out;
}

namespace detail {

[[noreturn]] inline void malformed(const std::string& what) { throw FrameError(FrameError::Kind::Malformed, what); }

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

inline std::string join_overrides(const std::vector<std::optional<SimTime>>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + (v[i] ? std::to_string(*v[i]) : std::string("-"));
  return out;
}

inline void check_node(std::string_view node) {
  if (!valid_node_id(node)) throw std::invalid_argument("invalid node id: " + std::string(node));
}

inline std::uint64_t need_uint(std::string_view s, const char* field) {
  auto v = parse_uint(s);
  if (!v) malformed(std::string("bad ") + field + ": '" + std::string(s) + "'");
  return *v;
}

inline std::int64_t need_int(std::string_view s, const char* field) {
  auto v = parse_int(s);
  if (!v) malformed(std::string("bad ") + field + ": '" + std::string(s) + "'");
  return *v;
}

}  // namespace detail

// One newline-terminated frame. Throws std::invalid_argument for values that
// violate the message invariants.
inline std::string encode_message(const Message& m) {
  if (m.seq == 0) throw std::invalid_argument("sequence numbers start at 1");
  detail::check_node(m.node());
  std::string out = std::string(tag(m.kind())) + " " + std::to_string(m.seq) + " " + m.node() + " ";
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, TelemetryPayload>) {
          const auto n = b.row.lamps.size();
          if (n == 0 || b.feedback.size() != n || b.override_until.size() != n)
            throw std::invalid_argument("telemetry lamp arrays disagree");
          for (int f : b.feedback)
            if (f < 0 || f > 100) throw std::invalid_argument("feedback out of range");
          if (b.rated_watts < 0) throw std::invalid_argument("negative rated watts");
          out += std::to_string(b.t) + " " + std::to_string(b.rated_watts) + " " + detail::join_ints(b.feedback) + " " +
                 detail::join_overrides(b.override_until) + " " + encode_row(b.row);
        } else if constexpr (std::is_same_v<T, FaultPayload>) {
          if (b.lamp < 0) throw std::invalid_argument("negative lamp index");
          out += std::to_string(b.lamp) + " " + to_string(b.kind) + " ";
          if (b.cleared) {
            if (*b.cleared < b.onset) throw std::invalid_argument("fault cleared before onset");
            out += "clear " + std::to_string(b.onset) + " " + std::to_string(*b.cleared);
          } else {
            out += "open " + std::to_string(b.onset);
          }
        } else if constexpr (std::is_same_v<T, Command>) {
          if (b.lamp && *b.lamp < 0) throw std::invalid_argument("negative lamp index");
          out += b.lamp ? std::to_string(*b.lamp) : std::string("ALL");
          switch (b.action) {
            case CommandAction::SetOverride:
              if (b.state_bit != 0 && b.state_bit != 1) throw std::invalid_argument("state bit must be 0 or 1");
              if (b.brightness < 0 || b.brightness > 100) throw std::invalid_argument("brightness must be 0..100");
              if (b.expiry_s <= 0) throw std::invalid_argument("override expiry must be > 0");
              out += " SET " + std::to_string(b.state_bit) + " " + std::to_string(b.brightness) + " " +
                     std::to_string(b.expiry_s);
              break;
            case CommandAction::ClearOverride: out += " CLR"; break;
            case CommandAction::RequestSnapshot: out += " SNAP"; break;
          }
        } else {
          if (b.command_seq == 0) throw std::invalid_argument("ack must reference a command sequence");
          out += std::to_string(b.command_seq) + (b.accepted ? " ok " : " rejected ") + escape_text(b.note);
        }
      },
      m.body);
  out += '\n';
  return out;
}

inline Message decode_message(std::string_view frame) {
  if (!frame.empty() && frame.back() == '\n') frame.remove_suffix(1);
  if (frame.find('\n') != std::string_view::npos || frame.find('\r') != std::string_view::npos)
    detail::malformed("embedded line break");

  // Telemetry carries the tab-separated row as its final field.
  const auto head_end = frame.find('\t');
  const auto head = detail::split(frame.substr(0, head_end), ' ');
  if (head.empty() || head[0].empty()) throw FrameError(FrameError::Kind::BadTag, "empty frame");

  std::optional<MessageKind> kind;
  for (auto k : {MessageKind::Telemetry, MessageKind::Fault, MessageKind::Command, MessageKind::Ack})
    if (head[0] == tag(k)) kind = k;
  if (!kind) throw FrameError(FrameError::Kind::BadTag, "unknown frame tag '" + std::string(head[0]) + "'");
  if (head.size() < 3) detail::malformed("frame too short");

  Message m;
  m.seq = detail::need_uint(head[1], "sequence");
  if (m.seq == 0) detail::malformed("sequence numbers start at 1");
  const std::string node(head[2]);
  if (!valid_node_id(node)) detail::malformed("bad node id");
  if (*kind != MessageKind::Telemetry && head_end != std::string_view::npos) detail::malformed("unexpected tab");

  switch (*kind) {
    case MessageKind::Telemetry: {
      // head = TEL seq node t watts feedback overrides <first row field>
      if (head.size() != 8 || head_end == std::string_view::npos) detail::malformed("telemetry field count");
      TelemetryPayload p;
      p.node = node;
      p.t = detail::need_int(head[3], "time");
      const auto w = detail::need_uint(head[4], "rated watts");
      if (w > 1000000) detail::malformed("rated watts out of range");
      p.rated_watts = static_cast<int>(w);
      for (auto f : detail::split(head[5], ',')) {
        const auto v = detail::need_uint(f, "feedback");
        if (v > 100) detail::malformed("feedback out of range");
        p.feedback.push_back(static_cast<int>(v));
      }
      for (auto o : detail::split(head[6], ','))
        p.override_until.push_back(o == "-" ? std::nullopt : std::optional<SimTime>(detail::need_int(o, "override")));
      const auto row_text = frame.substr(head_end - head[7].size());
      try {
        p.row = decode_row(row_text, p.feedback.size());
      } catch (const ParseError& e) {
        detail::malformed(std::string("telemetry row: ") + e.what());
      }
      if (p.override_until.size() != p.feedback.size()) detail::malformed("override list length");
      m.body = std::move(p);
      break;
    }
    case MessageKind::Fault: {
      if (head.size() != 7 && head.size() != 8) detail::malformed("fault field count");
      FaultPayload p;
      p.node = node;
      const auto lamp = detail::need_uint(head[3], "lamp");
      if (lamp > 1000) detail::malformed("lamp index out of range");
      p.lamp = static_cast<int>(lamp);
      if (head[4] != to_string(FaultKind::LampDark)) detail::malformed("unknown fault kind");
      p.onset = detail::need_int(head[6], "onset");
      if (head[5] == "open" && head.size() == 7) {
      } else if (head[5] == "clear" && head.size() == 8) {
        p.cleared = detail::need_int(head[7], "cleared");
        if (*p.cleared < p.onset) detail::malformed("fault cleared before onset");
      } else {
        detail::malformed("fault event must be 'open <onset>' or 'clear <onset> <cleared>'");
      }
      m.body = std::move(p);
      break;
    }
    case MessageKind::Command: {
      if (head.size() < 5) detail::malformed("command field count");
      Command c;
      c.node = node;
      if (head[3] != "ALL") {
        const auto lamp = detail::need_uint(head[3], "lamp selector");
        if (lamp > 1000) detail::malformed("lamp index out of range");
        c.lamp = static_cast<int>(lamp);
      }
      if (head[4] == "SET" && head.size() == 8) {
        c.action = CommandAction::SetOverride;
        if (head[5] != "0" && head[5] != "1") detail::malformed("state bit must be 0 or 1");
        c.state_bit = head[5][0] - '0';
        const auto b = detail::need_uint(head[6], "brightness");
        if (b > 100) detail::malformed("brightness out of range");
        c.brightness = static_cast<int>(b);
        c.expiry_s = detail::need_int(head[7], "expiry");
        if (c.expiry_s <= 0) detail::malformed("override expiry must be > 0");
      } else if (head[4] == "CLR" && head.size() == 5) {
        c.action = CommandAction::ClearOverride;
      } else if (head[4] == "SNAP" && head.size() == 5) {
        c.action = CommandAction::RequestSnapshot;
      } else {
        detail::malformed("unknown command action");
      }
      m.body = std::move(c);
      break;
    }
    case MessageKind::Ack: {
      if (head.size() != 6) detail::malformed("ack field count");
      AckPayload a;
      a.node = node;
      a.command_seq = detail::need_uint(head[3], "command sequence");
      if (a.command_seq == 0) detail::malformed("ack must reference a command sequence");
      if (head[4] == "ok") a.accepted = true;
      else if (head[4] == "rejected") a.accepted = false;
      else detail::malformed("ack status must be ok or rejected");
      auto note = unescape_text(head[5]);
      if (!note) detail::malformed("bad ack note escaping");
      a.note = std::move(*note);
      m.body = std::move(a);
      break;
    }
  }
  return m;
}

// Enforces strictly increasing sequence numbers per (sender, kind) stream.
class SequenceTracker {
 public:
  enum class Verdict { InOrder, Gap, Regression };

  struct Result {
    Verdict verdict = Verdict::InOrder;
    std::uint64_t expected = 0;  // next sequence the stream should have carried
    std::uint64_t missing = 0;   // frames skipped when verdict == Gap
  };

  Result classify(const Message& m) const {
    const auto it = last_.find({m.sender(), m.kind()});
    if (it == last_.end()) return {Verdict::InOrder, m.seq, 0};
    if (m.seq <= it->second) return {Verdict::Regression, it->second + 1, 0};
    if (m.seq == it->second + 1) return {Verdict::InOrder, m.seq, 0};
    return {Verdict::Gap, it->second + 1, m.seq - it->second - 1};
  }

  void commit(const Message& m) { last_[{m.sender(), m.kind()}] = m.seq; }

  // classify + commit; a regression is surfaced as FrameError.
  Result observe(const Message& m) {
    const auto r = classify(m);
    if (r.verdict == Verdict::Regression)
      throw FrameError(FrameError::Kind::SequenceRegression,
                       "sequence " + std::to_string(m.seq) + " after " + std::to_string(r.expected - 1) + " on " +
                           m.sender() + "/" + tag(m.kind()));
    commit(m);
    return r;
  }

  std::optional<std::uint64_t> last(const std::string& sender, MessageKind k) const {
    const auto it = last_.find({sender, k});
    if (it == last_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::map<std::pair<std::string, MessageKind>, std::uint64_t> last_;
};

// Splits a byte stream into frames. The last frame is `terminated == false`
// when the stream does not end with a newline.
struct StreamLine {
  std::size_t number = 0;  // 1-based
  std::string text;
  bool terminated = true;
};

inline std::vector<StreamLine> split_stream(std::string_view data) {
  std::vector<StreamLine> out;
  std::size_t start = 0;
  std::size_t number = 1;
  while (start < data.size()) {
    const auto nl = data.find('\n', start);
    if (nl == std::string_view::npos) {
      out.push_back({number, std::string(data.substr(start)), false});
      break;
    }
    out.push_back({number++, std::string(data.substr(start, nl - start)), true});
    start = nl + 1;
  }
  return out;
}

// Decodes a whole recorded stream, failing on the first bad or truncated line.
inline std::vector<Message> decode_stream(std::string_view data) {
  std::vector<Message> out;
  for (const auto& line : split_stream(data)) {
    if (!line.terminated)
      throw FrameError(FrameError::Kind::Truncated, "line " + std::to_string(line.number) + ": truncated frame");
    try {
      out.push_back(decode_message(line.text));
    } catch (const FrameError& e) {
      throw FrameError(e.kind(), "line " + std::to_string(line.number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace streetlight::wire
