#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "streetlight/core.hpp"
#include "streetlight/decimal.hpp"
#include "streetlight/wire.hpp"

namespace streetlight::control {

// The monitoring service core: serialized ingest of node frames into an
// append-only log, immutable fleet snapshots for readers, fault alerts,
// operator command dispatch with acknowledgement tracking, and the energy
// integrator. Transport (sockets, HTTP) lives in server.hpp.

using json = nlohmann::json;

class InvalidRange : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnknownNode : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Log store
// ---------------------------------------------------------------------------

enum class LogKind { Row, Fault, Command, Ack, Gap, Transition };

inline constexpr LogKind kAllLogKinds[] = {LogKind::Row, LogKind::Fault, LogKind::Command,
                                           LogKind::Ack, LogKind::Gap,   LogKind::Transition};

inline const char* to_string(LogKind k) {
  switch (k) {
    case LogKind::Row: return "row";
    case LogKind::Fault: return "fault";
    case LogKind::Command: return "command";
    case LogKind::Ack: return "ack";
    case LogKind::Gap: return "gap";
    case LogKind::Transition: return "transition";
  }
  return "?";
}

inline std::optional<LogKind> parse_log_kind(std::string_view s) {
  for (auto k : kAllLogKinds)
    if (s == to_string(k)) return k;
  return std::nullopt;
}

struct GapEvent {
  std::string sender;
  wire::MessageKind stream = wire::MessageKind::Telemetry;
  std::uint64_t expected = 0;
  std::uint64_t received = 0;
  std::uint64_t missing() const { return received - expected; }
  friend bool operator==(const GapEvent&, const GapEvent&) = default;
};

// A lamp's state bit or on-level changed between consecutive frames.
struct Transition {
  int lamp = 0;
  LampStatus from;
  LampStatus to;
  friend bool operator==(const Transition&, const Transition&) = default;
};

struct LogEntry {
  LogKind kind = LogKind::Row;
  std::string node;
  SimTime t = 0;
  std::uint64_t index = 0;  // global ingest order, assigned by the store
  std::variant<wire::Message, GapEvent, Transition> body;
  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

struct LogQuery {
  std::optional<std::string> node;
  SimTime from = std::numeric_limits<SimTime>::min();
  SimTime to = std::numeric_limits<SimTime>::max();
  std::set<LogKind> kinds;  // empty selects every kind
  std::size_t offset = 0;
  std::size_t limit = std::numeric_limits<std::size_t>::max();
};

struct LogPage {
  std::vector<LogEntry> entries;
  std::size_t total = 0;  // matches before pagination
};

// Entries ordered by (t, index). Appends in time order are O(1); late
// entries are inserted in place so queries stay time-ordered.
class LogStore {
 public:
  std::uint64_t append(LogEntry e) {
    std::unique_lock lock(mu_);
    e.index = next_index_++;
    const auto pos = std::upper_bound(entries_.begin(), entries_.end(), e.t,
                                      [](SimTime t, const LogEntry& x) { return t < x.t; });
    entries_.insert(pos, std::move(e));
    return next_index_ - 1;
  }

  LogPage query(const LogQuery& q) const {
    if (q.from > q.to) throw InvalidRange("from must be <= to");
    std::shared_lock lock(mu_);
    LogPage page;
    auto it = std::lower_bound(entries_.begin(), entries_.end(), q.from,
                               [](const LogEntry& x, SimTime t) { return x.t < t; });
    for (; it != entries_.end() && it->t <= q.to; ++it) {
      if (q.node && it->node != *q.node) continue;
      if (!q.kinds.empty() && !q.kinds.count(it->kind)) continue;
      if (page.total >= q.offset && page.entries.size() < q.limit) page.entries.push_back(*it);
      ++page.total;
    }
    return page;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }

 private:
  mutable std::shared_mutex mu_;
  std::vector<LogEntry> entries_;
  std::uint64_t next_index_ = 0;
};

// ---------------------------------------------------------------------------
// Fleet snapshot
// ---------------------------------------------------------------------------

struct LampView {
  LampState state;
  std::optional<SimTime> override_until;
  bool faulted = false;
  friend bool operator==(const LampView&, const LampView&) = default;
};

struct NodeView {
  std::string node_id;
  SimTime t = 0;
  int rated_watts = 0;
  std::optional<wire::TelemetryRow> row;  // last telemetry, absent until the first frame
  std::vector<LampView> lamps;
  std::vector<FaultRecord> open_faults;
  std::uint64_t frames = 0;
  std::uint64_t gaps = 0;

  // Instantaneous lamp power in watts * 100.
  std::int64_t centiwatts() const {
    std::int64_t cw = 0;
    for (const auto& l : lamps)
      if (l.state.on()) cw += static_cast<std::int64_t>(rated_watts) * l.state.brightness.value();
    return cw;
  }
  friend bool operator==(const NodeView&, const NodeView&) = default;
};

struct FleetSnapshot {
  std::uint64_t version = 0;  // frames applied so far
  SimTime snapshot_time = 0;  // latest node time seen
  std::map<std::string, NodeView> nodes;
  std::uint64_t frames_received = 0;
  std::uint64_t gaps_detected = 0;

  std::int64_t total_centiwatts() const {
    std::int64_t cw = 0;
    for (const auto& [id, n] : nodes) cw += n.centiwatts();
    return cw;
  }
  friend bool operator==(const FleetSnapshot&, const FleetSnapshot&) = default;
};

// ---------------------------------------------------------------------------
// Command audit
// ---------------------------------------------------------------------------

enum class DispatchResult { Pending, Acked, Rejected, TimedOut };

inline const char* to_string(DispatchResult r) {
  switch (r) {
    case DispatchResult::Pending: return "pending";
    case DispatchResult::Acked: return "acked";
    case DispatchResult::Rejected: return "rejected";
    case DispatchResult::TimedOut: return "timed-out";
  }
  return "?";
}

struct CommandAudit {
  std::uint64_t seq = 0;
  wire::Command command;
  std::string issuer;
  SimTime received_t = 0;            // fleet time when issued
  std::int64_t received_wall_ms = 0;  // unix ms
  DispatchResult result = DispatchResult::Pending;
  std::string note;
  friend bool operator==(const CommandAudit&, const CommandAudit&) = default;
};

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

struct EnergyReport {
  SimTime from = 0;
  SimTime to = 0;
  Decimal tariff;
  std::int64_t centiwatt_seconds = 0;
  Decimal kwh;
  Decimal cost;
};

inline constexpr unsigned kEnergyPlaces = 12;

// kWh = W*s / 3.6e6; centiwatt-seconds carry an extra factor of 100.
inline EnergyReport make_energy_report(SimTime from, SimTime to, Decimal tariff, std::int64_t cws) {
  const Decimal divisor(360000000);
  return {from, to, tariff, cws, Decimal(cws).divided(divisor, kEnergyPlaces),
          (Decimal(cws) * tariff).divided(divisor, kEnergyPlaces)};
}

// ---------------------------------------------------------------------------
// Live event fan-out
// ---------------------------------------------------------------------------

struct Event {
  std::uint64_t id = 0;
  std::string name;
  std::string data;  // JSON
};

class EventHub {
 public:
  static constexpr std::size_t kMaxQueued = 4096;

  class Subscription {
   public:
    // Next event, or nullopt after `wait` with nothing queued or once closed.
    std::optional<Event> next(std::chrono::milliseconds wait) {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, wait, [&] { return !queue_.empty() || closed_; });
      if (queue_.empty()) return std::nullopt;
      Event e = std::move(queue_.front());
      queue_.pop_front();
      return e;
    }
    bool closed() const {
      std::lock_guard lock(mu_);
      return closed_;
    }

   private:
    friend class EventHub;
    void push(const Event& e) {
      std::lock_guard lock(mu_);
      if (queue_.size() >= kMaxQueued) {
        // Slow reader: drop the backlog and tell it to refetch.
        queue_.clear();
        queue_.push_back({e.id, "resync", "{}"});
      } else {
        queue_.push_back(e);
      }
      cv_.notify_one();
    }
    void close() {
      std::lock_guard lock(mu_);
      closed_ = true;
      cv_.notify_all();
    }
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<Event> queue_;
    bool closed_ = false;
  };

  std::shared_ptr<Subscription> subscribe() {
    auto s = std::make_shared<Subscription>();
    std::lock_guard lock(mu_);
    subs_.push_back(s);
    return s;
  }

  void publish(std::string name, std::string data) {
    std::lock_guard lock(mu_);
    const Event e{++next_id_, std::move(name), std::move(data)};
    std::erase_if(subs_, [](const std::weak_ptr<Subscription>& w) { return w.expired(); });
    for (auto& w : subs_)
      if (auto s = w.lock()) s->push(e);
  }

  void close_all() {
    std::lock_guard lock(mu_);
    for (auto& w : subs_)
      if (auto s = w.lock()) s->close();
    subs_.clear();
  }

 private:
  std::mutex mu_;
  std::vector<std::weak_ptr<Subscription>> subs_;
  std::uint64_t next_id_ = 0;
};

// ---------------------------------------------------------------------------
// JSON views
// ---------------------------------------------------------------------------

inline json to_json(const FaultRecord& f) {
  return {{"node", f.node_id},
          {"lamp", f.lamp_index},
          {"kind", to_string(f.kind)},
          {"onset", f.onset},
          {"cleared", f.cleared ? json(*f.cleared) : json(nullptr)},
          {"open", f.open()}};
}

inline json to_json(const wire::Command& c) {
  json j = {{"node", c.node}, {"lamp", c.lamp ? json(*c.lamp) : json("ALL")}};
  switch (c.action) {
    case wire::CommandAction::SetOverride:
      j["action"] = "set";
      j["state"] = c.state_bit;
      j["brightness"] = c.brightness;
      j["expiry_s"] = c.expiry_s;
      break;
    case wire::CommandAction::ClearOverride: j["action"] = "clear"; break;
    case wire::CommandAction::RequestSnapshot: j["action"] = "snapshot"; break;
  }
  return j;
}

inline json to_json(const CommandAudit& a) {
  return {{"seq", a.seq},
          {"command", to_json(a.command)},
          {"issuer", a.issuer},
          {"received_t", a.received_t},
          {"received_wall_ms", a.received_wall_ms},
          {"result", to_string(a.result)},
          {"note", a.note}};
}

inline json to_json(const NodeView& n) {
  json lamps = json::array();
  for (std::size_t i = 0; i < n.lamps.size(); ++i) {
    const auto& l = n.lamps[i];
    const auto cell = to_status(l.state);
    lamps.push_back({{"index", i},
                     {"state", cell.state_bit},
                     {"brightness", l.state.brightness.value()},
                     {"feedback", l.state.feedback_pct},
                     {"cell", wire::encode_lamp_cell(cell)},
                     {"override_until", l.override_until ? json(*l.override_until) : json(nullptr)},
                     {"faulted", l.faulted}});
  }
  json faults = json::array();
  for (const auto& f : n.open_faults) faults.push_back(to_json(f));
  json overrides = json::array();
  for (std::size_t i = 0; i < n.lamps.size(); ++i)
    if (n.lamps[i].override_until) overrides.push_back({{"lamp", i}, {"until", *n.lamps[i].override_until}});
  json j = {{"node_id", n.node_id}, {"t", n.t},           {"rated_watts", n.rated_watts},
            {"lamps", lamps},       {"open_faults", faults}, {"overrides", overrides},
            {"frames", n.frames},   {"gaps", n.gaps},     {"watts", static_cast<double>(n.centiwatts()) / 100.0}};
  if (n.row) {
    j["frame"] = {{"date", wire::encode_date(n.row->date)},
                  {"time", wire::encode_time(n.row->time)},
                  {"volts", wire::encode_volts(n.row->centivolts)},
                  {"milliamps", n.row->milliamps},
                  {"temp_c", n.row->temp_c},
                  {"sun_pct", n.row->sun_pct},
                  {"row", wire::encode_row(*n.row)}};
  } else {
    j["frame"] = nullptr;
  }
  return j;
}

inline json to_json(const FleetSnapshot& s) {
  json nodes = json::object();
  for (const auto& [id, n] : s.nodes) nodes[id] = to_json(n);
  return {{"version", s.version},
          {"snapshot_time", s.snapshot_time},
          {"frames_received", s.frames_received},
          {"gaps_detected", s.gaps_detected},
          {"total_watts", static_cast<double>(s.total_centiwatts()) / 100.0},
          {"nodes", nodes}};
}

inline json to_json(const LogEntry& e) {
  json j = {{"kind", to_string(e.kind)}, {"node", e.node}, {"t", e.t}, {"index", e.index}};
  std::visit(
      [&](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, wire::Message>) {
          j["frame"] = [&] {
            auto f = wire::encode_message(b);
            f.pop_back();
            return f;
          }();
          j["seq"] = b.seq;
          if (const auto* tel = std::get_if<wire::TelemetryPayload>(&b.body)) {
            j["row"] = wire::encode_row(tel->row);
            json cells = json::array();
            for (const auto& c : tel->row.lamps) cells.push_back(wire::encode_lamp_cell(c));
            j["cells"] = cells;
          } else if (const auto* f = std::get_if<wire::FaultPayload>(&b.body)) {
            j["fault"] = to_json(FaultRecord{f->node, f->lamp, f->kind, f->onset, f->cleared});
            j["event"] = f->cleared ? "clear" : "open";
          } else if (const auto* c = std::get_if<wire::Command>(&b.body)) {
            j["command"] = to_json(*c);
          } else if (const auto* a = std::get_if<wire::AckPayload>(&b.body)) {
            j["command_seq"] = a->command_seq;
            j["accepted"] = a->accepted;
            j["note"] = a->note;
          }
        } else if constexpr (std::is_same_v<T, GapEvent>) {
          j["stream"] = wire::tag(b.stream);
          j["expected"] = b.expected;
          j["received"] = b.received;
          j["missing"] = b.missing();
        } else {
          j["lamp"] = b.lamp;
          j["from"] = wire::encode_lamp_cell(b.from);
          j["to"] = wire::encode_lamp_cell(b.to);
        }
      },
      e.body);
  return j;
}

inline json to_json(const EnergyReport& r) {
  return {{"from", r.from},
          {"to", r.to},
          {"tariff", r.tariff.to_string()},
          {"watt_seconds", Decimal(r.centiwatt_seconds).divided(Decimal(100), 2).to_string()},
          {"kwh", r.kwh.to_string()},
          {"cost_tk", r.cost.to_string()},
          {"cost_tk_display", r.cost.to_fixed(2)}};
}

// ---------------------------------------------------------------------------
// Control room
// ---------------------------------------------------------------------------

struct ControlRoomOptions {
  std::optional<std::filesystem::path> data_dir;  // no persistence when empty
  std::chrono::milliseconds ack_timeout{5000};
};

struct IngestStats {
  std::uint64_t accepted = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t malformed = 0;
  std::uint64_t rejected = 0;  // well-formed but not valid from a node
  std::uint64_t commands = 0;
  std::uint64_t log_entries = 0;
};

// Sends one encoded frame to a node; false when the link is down.
using CommandSink = std::function<bool(const std::string& frame)>;

class ControlRoom {
 public:
  static constexpr const char* kLogFileName = "telemetry.log";

  enum class IngestStatus { Accepted, Duplicate, Malformed, Rejected };

  struct IngestResult {
    IngestStatus status = IngestStatus::Accepted;
    std::string error;
    std::optional<wire::Message> message;
  };

  explicit ControlRoom(ControlRoomOptions opts = {}) : opts_(std::move(opts)) {
    snapshot_ = std::make_shared<const FleetSnapshot>();
    if (opts_.data_dir) open_log();
  }

  ~ControlRoom() {
    events_.close_all();
    if (fd_ >= 0) ::close(fd_);
  }

  ControlRoom(const ControlRoom&) = delete;
  ControlRoom& operator=(const ControlRoom&) = delete;

  // Ingests one newline-framed message from a node. Never throws for bad
  // input; storage failures surface as StorageError.
  IngestResult ingest_line(std::string_view line) {
    std::lock_guard lock(mu_);
    return ingest_locked(line, /*replaying=*/false);
  }

  // Counts a frame the transport had to discard (overlong or cut off).
  void note_malformed() {
    std::lock_guard lock(mu_);
    ++stats_.malformed;
  }

  // Readers get an immutable snapshot that always corresponds to a prefix
  // of the accepted frames.
  std::shared_ptr<const FleetSnapshot> snapshot() const {
    std::lock_guard lock(snap_mu_);
    return snapshot_;
  }

  IngestStats stats() const {
    std::lock_guard lock(mu_);
    auto s = stats_;
    s.log_entries = log_.size();
    return s;
  }

  LogPage query_log(const LogQuery& q) const { return log_.query(q); }

  std::vector<FaultRecord> faults(bool open_only) const {
    std::lock_guard lock(mu_);
    std::vector<FaultRecord> out;
    for (const auto& f : faults_)
      if (!open_only || f.open()) out.push_back(f);
    return out;
  }

  std::vector<CommandAudit> audits() const {
    std::lock_guard lock(mu_);
    std::vector<CommandAudit> out;
    for (const auto& [seq, a] : audits_) out.push_back(a);
    return out;
  }

  std::optional<CommandAudit> audit(std::uint64_t seq) const {
    std::lock_guard lock(mu_);
    const auto it = audits_.find(seq);
    if (it == audits_.end()) return std::nullopt;
    return it->second;
  }

  // Lamp energy integrated over [from, to] with each frame's power held
  // until the node's next frame (the last frame holds to `to`).
  EnergyReport energy(SimTime from, SimTime to, const Decimal& tariff,
                      const std::optional<std::string>& node = std::nullopt) const {
    if (from > to) throw InvalidRange("from must be <= to");
    if (tariff.is_negative()) throw InvalidRange("tariff must be >= 0");
    std::lock_guard lock(mu_);
    std::int64_t cws = 0;
    for (const auto& [id, series] : power_) {
      if (node && id != *node) continue;
      for (std::size_t k = 0; k < series.size(); ++k) {
        const SimTime start = std::max(series[k].first, from);
        const SimTime end = std::min(k + 1 < series.size() ? series[k + 1].first : to, to);
        if (end > start) cws += series[k].second * (end - start);
      }
    }
    return make_energy_report(from, to, tariff, cws);
  }

  // Registers the link used to reach `node`. Returns a token for detach.
  std::uint64_t attach_node(const std::string& node, CommandSink sink) {
    std::lock_guard lock(sink_mu_);
    const auto id = ++next_sink_id_;
    sinks_[node] = {id, std::move(sink)};
    return id;
  }

  void detach_node(const std::string& node, std::uint64_t token) {
    std::lock_guard lock(sink_mu_);
    const auto it = sinks_.find(node);
    if (it != sinks_.end() && it->second.first == token) sinks_.erase(it);
  }

  bool node_attached(const std::string& node) const {
    std::lock_guard lock(sink_mu_);
    return sinks_.count(node) > 0;
  }

  // Frames, persists and sends a command, then waits for the node's ack.
  // Throws UnknownNode when the node never reported.
  CommandAudit issue_command(const wire::Command& cmd, const std::string& issuer) {
    std::string frame;
    std::uint64_t seq = 0;
    {
      std::lock_guard lock(mu_);
      if (!state_.nodes.count(cmd.node)) throw UnknownNode("unknown node '" + cmd.node + "'");
      seq = ++command_seq_;
      const wire::Message m{seq, cmd};
      frame = wire::encode_message(m);  // validates the command
      CommandAudit a;
      a.seq = seq;
      a.command = cmd;
      a.issuer = issuer;
      a.received_t = state_.snapshot_time;
      a.received_wall_ms = wall_ms();
      persist("AUD " + std::to_string(seq) + " issued " + std::to_string(a.received_wall_ms) + " " +
              wire::escape_text(issuer) + "\n" + frame);
      record_command(m, a);
    }

    CommandSink sink;
    {
      std::lock_guard lock(sink_mu_);
      const auto it = sinks_.find(cmd.node);
      if (it != sinks_.end()) sink = it->second.second;
    }
    const bool sent = sink && sink(frame);

    std::unique_lock lock(mu_);
    if (sent) ack_cv_.wait_for(lock, opts_.ack_timeout, [&] { return audits_.at(seq).result != DispatchResult::Pending; });
    auto& a = audits_.at(seq);
    if (a.result == DispatchResult::Pending) time_out(a, sent ? "no ack within timeout" : "node not connected");
    return a;
  }

  EventHub& events() { return events_; }

  json snapshot_json() const { return to_json(*snapshot()); }

 private:
  struct State {
    std::map<std::string, NodeView> nodes;
    SimTime snapshot_time = 0;
    std::uint64_t version = 0;
    std::uint64_t frames = 0;
    std::uint64_t gaps = 0;
  };

  static std::int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
  }

  // ----- persistence -------------------------------------------------------

  std::filesystem::path log_path() const { return *opts_.data_dir / kLogFileName; }

  void open_log() {
    std::error_code ec;
    std::filesystem::create_directories(*opts_.data_dir, ec);
    if (ec) throw StorageError("cannot create data dir " + opts_.data_dir->string() + ": " + ec.message());
    const auto path = log_path();
    std::string data;
    if (std::filesystem::exists(path)) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw StorageError("cannot read " + path.string());
      std::ostringstream ss;
      ss << in.rdbuf();
      data = ss.str();
    }
    // An unterminated tail is a write cut short by a crash; drop it.
    const auto keep = data.rfind('\n') == std::string::npos ? 0 : data.rfind('\n') + 1;
    if (keep < data.size()) {
      std::filesystem::resize_file(path, keep, ec);
      if (ec) throw StorageError("cannot truncate " + path.string());
      data.resize(keep);
    }
    {
      std::lock_guard lock(mu_);
      for (const auto& line : wire::split_stream(data)) replay_line(line.text, line.number);
      for (auto& [seq, a] : audits_)
        if (a.result == DispatchResult::Pending) time_out(a, "control room restarted");
    }
    fd_ = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw StorageError("cannot open " + path.string() + " for append");
    std::lock_guard lock(mu_);
    for (const auto& line : pending_persist_) write_all(line);
    pending_persist_.clear();
  }

  void replay_line(const std::string& line, std::size_t number) {
    if (line.rfind("AUD ", 0) == 0) {
      const auto f = wire::detail::split(line, ' ');
      const auto seq = f.size() == 5 ? wire::detail::parse_uint(f[1]) : std::nullopt;
      const auto ms = f.size() == 5 ? wire::detail::parse_int(f[3]) : std::nullopt;
      const auto text = f.size() == 5 ? wire::unescape_text(f[4]) : std::nullopt;
      if (!seq || !ms || !text || (f[2] != "issued" && f[2] != "timed-out"))
        throw StorageError("corrupt audit record at " + log_path().string() + ":" + std::to_string(number));
      if (f[2] == "issued") {
        pending_issue_ = {*seq, *ms, *text};
      } else if (const auto it = audits_.find(*seq); it != audits_.end()) {
        it->second.result = DispatchResult::TimedOut;
        it->second.note = *text;
      }
      return;
    }
    const auto r = ingest_locked(line, /*replaying=*/true);
    if (r.status == IngestStatus::Malformed)
      throw StorageError("corrupt record at " + log_path().string() + ":" + std::to_string(number) + ": " + r.error);
  }

  void write_all(const std::string& bytes) {
    std::size_t off = 0;
    while (off < bytes.size()) {
      const auto n = ::write(fd_, bytes.data() + off, bytes.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw StorageError("log write failed");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void persist(const std::string& bytes) {
    if (!opts_.data_dir || replaying_) return;
    if (fd_ < 0) {
      pending_persist_.push_back(bytes);
      return;
    }
    write_all(bytes);
  }

  // ----- ingest ------------------------------------------------------------

  IngestResult ingest_locked(std::string_view line, bool replaying) {
    replaying_ = replaying;
    auto r = ingest_frame(line, replaying);
    replaying_ = false;
    return r;
  }

  IngestResult ingest_frame(std::string_view line, bool replaying) {
    IngestResult r;
    wire::Message m;
    try {
      m = wire::decode_message(line);
    } catch (const std::exception& e) {
      ++stats_.malformed;
      return {IngestStatus::Malformed, e.what(), std::nullopt};
    }
    r.message = m;

    if (m.kind() == wire::MessageKind::Command) {
      if (!replaying) {
        ++stats_.rejected;
        return {IngestStatus::Rejected, "nodes may not send commands", m};
      }
      CommandAudit a;
      a.seq = m.seq;
      a.command = std::get<wire::Command>(m.body);
      if (pending_issue_ && pending_issue_->seq == m.seq) {
        a.received_wall_ms = pending_issue_->wall_ms;
        a.issuer = pending_issue_->issuer;
      }
      pending_issue_.reset();
      a.received_t = state_.snapshot_time;
      command_seq_ = std::max(command_seq_, m.seq);
      record_command(m, a);
      return r;
    }

    const auto order = tracker_.classify(m);
    if (order.verdict == wire::SequenceTracker::Verdict::Regression) {
      ++stats_.duplicates;
      return {IngestStatus::Duplicate, "sequence " + std::to_string(m.seq) + " already seen", m};
    }

    // Persist first: the snapshot must never show an unlogged frame.
    persist(wire::encode_message(m));
    tracker_.commit(m);
    ++stats_.accepted;
    apply(m, order);
    return r;
  }

  void record_command(const wire::Message& m, const CommandAudit& a) {
    ++stats_.commands;
    const auto& cmd = std::get<wire::Command>(m.body);
    const auto node = state_.nodes.find(cmd.node);
    log_.append({LogKind::Command, cmd.node, node != state_.nodes.end() ? node->second.t : state_.snapshot_time, 0, m});
    audits_[a.seq] = a;
    events_.publish("audit", to_json(a).dump());
  }

  void time_out(CommandAudit& a, const std::string& note) {
    a.result = DispatchResult::TimedOut;
    a.note = note;
    persist("AUD " + std::to_string(a.seq) + " timed-out " + std::to_string(wall_ms()) + " " + wire::escape_text(note) +
            "\n");
    events_.publish("audit", to_json(a).dump());
  }

  NodeView& node_view(const std::string& id) {
    auto& n = state_.nodes[id];
    n.node_id = id;
    return n;
  }

  void refresh_fault_flags(NodeView& n) {
    n.open_faults.clear();
    for (auto& l : n.lamps) l.faulted = false;
    for (const auto& f : faults_) {
      if (f.node_id != n.node_id || !f.open()) continue;
      n.open_faults.push_back(f);
      if (f.lamp_index >= 0 && static_cast<std::size_t>(f.lamp_index) < n.lamps.size())
        n.lamps[static_cast<std::size_t>(f.lamp_index)].faulted = true;
    }
  }

  void apply(const wire::Message& m, const wire::SequenceTracker::Result& order) {
    const auto& id = m.node();
    auto& n = node_view(id);

    if (order.verdict == wire::SequenceTracker::Verdict::Gap) {
      const GapEvent g{m.sender(), m.kind(), order.expected, m.seq};
      ++state_.gaps;
      ++n.gaps;
      const SimTime t = std::holds_alternative<wire::TelemetryPayload>(m.body)
                            ? std::get<wire::TelemetryPayload>(m.body).t
                            : n.t;
      log_.append({LogKind::Gap, id, t, 0, g});
      events_.publish("gap", to_json(LogEntry{LogKind::Gap, id, t, 0, g}).dump());
    }

    std::visit(
        [&](const auto& b) {
          using T = std::decay_t<decltype(b)>;
          if constexpr (std::is_same_v<T, wire::TelemetryPayload>) {
            apply_telemetry(n, m, b);
          } else if constexpr (std::is_same_v<T, wire::FaultPayload>) {
            apply_fault(n, m, b);
          } else if constexpr (std::is_same_v<T, wire::AckPayload>) {
            log_.append({LogKind::Ack, id, n.t, 0, m});
            const auto it = audits_.find(b.command_seq);
            if (it != audits_.end() && it->second.command.node == id &&
                it->second.result == DispatchResult::Pending) {
              it->second.result = b.accepted ? DispatchResult::Acked : DispatchResult::Rejected;
              it->second.note = b.note;
              events_.publish("audit", to_json(it->second).dump());
              ack_cv_.notify_all();
            }
          }
        },
        m.body);

    ++n.frames;
    ++state_.frames;
    ++state_.version;
    publish_snapshot(id);
  }

  void apply_telemetry(NodeView& n, const wire::Message& m, const wire::TelemetryPayload& p) {
    const auto prev_lamps = n.lamps;
    const bool had_row = n.row.has_value();
    const auto prev_cells = had_row ? n.row->lamps : std::vector<LampStatus>{};

    log_.append({LogKind::Row, n.node_id, p.t, 0, m});
    n.t = p.t;
    n.rated_watts = p.rated_watts;
    n.row = p.row;
    n.lamps.assign(p.row.lamps.size(), {});
    for (std::size_t i = 0; i < p.row.lamps.size(); ++i) {
      auto& l = n.lamps[i];
      const auto& cell = p.row.lamps[i];
      l.state.commanded = cell.state_bit ? Commanded::On : Commanded::Off;
      // An off cell carries feedback, so keep the last known on-level.
      l.state.brightness = cell.state_bit ? BrightnessPct(cell.level)
                                          : (i < prev_lamps.size() ? prev_lamps[i].state.brightness : BrightnessPct(0));
      l.state.feedback_pct = p.feedback[i];
      l.override_until = p.override_until[i];
    }
    refresh_fault_flags(n);
    state_.snapshot_time = std::max(state_.snapshot_time, p.t);

    if (had_row) {
      for (std::size_t i = 0; i < p.row.lamps.size() && i < prev_cells.size(); ++i) {
        const auto& a = prev_cells[i];
        const auto& b = p.row.lamps[i];
        if (a.state_bit != b.state_bit || (b.state_bit == 1 && a.level != b.level))
          log_.append({LogKind::Transition, n.node_id, p.t, 0, Transition{static_cast<int>(i), a, b}});
      }
    }

    auto& series = power_[n.node_id];
    const std::pair<SimTime, std::int64_t> point{p.t, n.centiwatts()};
    const auto pos = std::upper_bound(series.begin(), series.end(), p.t,
                                      [](SimTime t, const auto& x) { return t < x.first; });
    series.insert(pos, point);
  }

  void apply_fault(NodeView& n, const wire::Message& m, const wire::FaultPayload& p) {
    auto open = std::find_if(faults_.begin(), faults_.end(), [&](const FaultRecord& f) {
      return f.open() && f.node_id == p.node && f.lamp_index == p.lamp && f.kind == p.kind;
    });
    FaultRecord changed{p.node, p.lamp, p.kind, p.onset, p.cleared};
    if (!p.cleared) {
      if (open == faults_.end()) faults_.push_back(changed);
    } else if (open != faults_.end()) {
      open->cleared = p.cleared;
      changed = *open;
    } else {
      faults_.push_back(changed);
    }
    const SimTime t = p.cleared ? *p.cleared : p.onset;
    log_.append({LogKind::Fault, n.node_id, t, 0, m});
    refresh_fault_flags(n);
    state_.snapshot_time = std::max(state_.snapshot_time, t);
    events_.publish("fault", to_json(changed).dump());
  }

  void publish_snapshot(const std::string& changed_node) {
    auto next = std::make_shared<FleetSnapshot>();
    next->version = state_.version;
    next->snapshot_time = state_.snapshot_time;
    next->nodes = state_.nodes;
    next->frames_received = state_.frames;
    next->gaps_detected = state_.gaps;
    std::shared_ptr<const FleetSnapshot> frozen = std::move(next);
    {
      std::lock_guard lock(snap_mu_);
      snapshot_ = frozen;
    }
    if (!replaying_) {
      const json delta = {{"version", frozen->version},
                          {"snapshot_time", frozen->snapshot_time},
                          {"frames_received", frozen->frames_received},
                          {"gaps_detected", frozen->gaps_detected},
                          {"total_watts", static_cast<double>(frozen->total_centiwatts()) / 100.0},
                          {"node", to_json(frozen->nodes.at(changed_node))}};
      events_.publish("delta", delta.dump());
    }
  }

  struct PendingIssue {
    std::uint64_t seq;
    std::int64_t wall_ms;
    std::string issuer;
  };

  ControlRoomOptions opts_;
  mutable std::mutex mu_;  // serializes every mutation
  std::condition_variable ack_cv_;
  State state_;
  wire::SequenceTracker tracker_;
  IngestStats stats_;
  LogStore log_;
  std::vector<FaultRecord> faults_;
  std::map<std::uint64_t, CommandAudit> audits_;
  std::map<std::string, std::vector<std::pair<SimTime, std::int64_t>>> power_;  // node -> (t, centiwatts)
  std::uint64_t command_seq_ = 0;
  std::optional<PendingIssue> pending_issue_;
  bool replaying_ = false;
  int fd_ = -1;
  std::vector<std::string> pending_persist_;

  mutable std::mutex snap_mu_;  // guards only the pointer swap
  std::shared_ptr<const FleetSnapshot> snapshot_;

  mutable std::mutex sink_mu_;
  std::map<std::string, std::pair<std::uint64_t, CommandSink>> sinks_;
  std::uint64_t next_sink_id_ = 0;

  EventHub events_;
};

}  // namespace streetlight::control
