#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <functional>
#include <iostream>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "streetlight/control_room.hpp"
#include "streetlight/node_sim.hpp"

namespace streetlight::server {

using control::ControlRoom;
using control::json;

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Addresses
// ---------------------------------------------------------------------------

struct Endpoint {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

// Accepts "host:port", ":port" or "port".
inline Endpoint parse_endpoint(std::string_view text, std::string_view default_host = "127.0.0.1") {
  Endpoint e;
  const auto colon = text.rfind(':');
  const auto port_text = colon == std::string_view::npos ? text : text.substr(colon + 1);
  e.host = colon == std::string_view::npos || colon == 0 ? std::string(default_host) : std::string(text.substr(0, colon));
  const auto port = wire::detail::parse_uint(port_text);
  if (!port || *port > 65535) throw std::invalid_argument("bad listen address '" + std::string(text) + "'");
  e.port = static_cast<int>(*port);
  return e;
}

namespace detail {

inline bool send_all(int fd, std::string_view bytes) {
  while (!bytes.empty()) {
    const auto n = ::send(fd, bytes.data(), bytes.size(), MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    bytes.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

inline addrinfo* resolve(const Endpoint& e, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto port = std::to_string(e.port);
  if (const int rc = ::getaddrinfo(e.host.c_str(), port.c_str(), &hints, &res); rc != 0)
    throw NetError("cannot resolve " + e.to_string() + ": " + ::gai_strerror(rc));
  return res;
}

inline int connect_to(const Endpoint& e) {
  addrinfo* res = resolve(e, false);
  int fd = -1;
  for (auto* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw NetError("cannot connect to " + e.to_string() + ": " + std::strerror(errno));
  return fd;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Node socket: newline-framed wire protocol over TCP
// ---------------------------------------------------------------------------

class NodeListener {
 public:
  static constexpr std::size_t kMaxLine = 64 * 1024;

  NodeListener(ControlRoom& room, const Endpoint& at) : room_(room) {
    addrinfo* res = detail::resolve(at, true);
    std::string last_error = "no usable address";
    for (auto* ai = res; ai && listen_fd_ < 0; ai = ai->ai_next) {
      const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
      if (fd < 0) continue;
      const int one = 1;
      ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
        listen_fd_ = fd;
      } else {
        last_error = std::strerror(errno);
        ::close(fd);
      }
    }
    ::freeaddrinfo(res);
    if (listen_fd_ < 0) throw NetError("cannot listen on " + at.to_string() + ": " + last_error);
    sockaddr_storage addr{};
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.ss_family == AF_INET6 ? reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port
                                             : reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
    host_ = at.host;
  }

  ~NodeListener() {
    stop();
    if (listen_fd_ >= 0) ::close(listen_fd_);
  }

  Endpoint endpoint() const { return {host_, port_}; }

  void start() {
    accept_thread_ = std::thread([this] { accept_loop(); });
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    if (accept_thread_.joinable()) accept_thread_.join();
    std::list<std::shared_ptr<Conn>> conns;
    {
      std::lock_guard lock(mu_);
      conns.swap(conns_);
    }
    for (auto& c : conns) {
      std::lock_guard lock(c->write_mu);
      if (c->fd >= 0) ::shutdown(c->fd, SHUT_RDWR);
    }
    for (auto& c : conns)
      if (c->thread.joinable()) c->thread.join();
  }

 private:
  struct Conn {
    int fd = -1;
    std::mutex write_mu;
    std::thread thread;
    std::atomic<bool> finished{false};
  };

  void accept_loop() {
    while (!stopping_) {
      pollfd p{listen_fd_, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      const int fd = ::accept4(listen_fd_, nullptr, nullptr, SOCK_CLOEXEC);
      if (fd < 0) continue;
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      auto conn = std::make_shared<Conn>();
      conn->fd = fd;
      std::lock_guard lock(mu_);
      reap_locked();
      conns_.push_back(conn);
      conn->thread = std::thread([this, conn] { serve(conn); });
    }
  }

  void reap_locked() {
    for (auto it = conns_.begin(); it != conns_.end();) {
      if ((*it)->finished) {
        (*it)->thread.join();
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void serve(const std::shared_ptr<Conn>& conn) {
    std::map<std::string, std::uint64_t> attached;
    auto handle = [&](std::string_view line) {
      const auto r = room_.ingest_line(line);
      if (!r.message || r.status == ControlRoom::IngestStatus::Malformed) return;
      const auto& node = r.message->node();
      if (attached.count(node)) return;
      std::weak_ptr<Conn> weak = conn;
      attached[node] = room_.attach_node(node, [weak](const std::string& frame) {
        const auto c = weak.lock();
        if (!c) return false;
        std::lock_guard lock(c->write_mu);
        return detail::send_all(c->fd, frame);
      });
    };

    std::string buf;
    bool overlong = false;
    char chunk[8192];
    for (;;) {
      const auto n = ::recv(conn->fd, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) break;
      buf.append(chunk, static_cast<std::size_t>(n));
      std::size_t start = 0;
      for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n', start)) {
        if (!overlong) handle(std::string_view(buf).substr(start, nl - start));
        overlong = false;
        start = nl + 1;
      }
      buf.erase(0, start);
      if (buf.size() > kMaxLine) {
        // Count it once, then skip to the next newline.
        if (!overlong) room_.note_malformed();
        overlong = true;
        buf.clear();
      }
    }
    // A trailing partial line at EOF is a truncated frame.
    if (!buf.empty() && !overlong) room_.note_malformed();
    for (const auto& [node, token] : attached) room_.detach_node(node, token);
    {
      std::lock_guard lock(conn->write_mu);
      ::close(conn->fd);
      conn->fd = -1;
    }
    conn->finished = true;
  }

  ControlRoom& room_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::string host_;
  std::atomic<bool> stopping_{false};
  std::thread accept_thread_;
  std::mutex mu_;
  std::list<std::shared_ptr<Conn>> conns_;
};

// ---------------------------------------------------------------------------
// In-process simulated nodes
// ---------------------------------------------------------------------------

// Steps a scenario and feeds its frames straight into the control room,
// taking commands through the same sink interface a socket node uses.
// speed = simulated seconds per wall second; 0 runs unthrottled.
class LiveSimulation {
 public:
  LiveSimulation(ControlRoom& room, sim::Scenario scenario, double speed)
      : room_(room), sim_(std::move(scenario)), emitter_(sim_.scenario().rated_watts, sim_.scenario().epoch_date),
        speed_(speed) {
    if (!(speed >= 0)) throw std::invalid_argument("sim speed must be >= 0");
  }

  ~LiveSimulation() { stop(); }

  void start() {
    for (int i = 0; i < sim_.scenario().node_count; ++i) {
      const auto id = sim::Scenario::node_id(i);
      tokens_.emplace_back(id, room_.attach_node(id, [this](const std::string& frame) { return deliver(frame); }));
    }
    thread_ = std::thread([this] { run(); });
  }

  void stop() {
    stopping_ = true;
    if (thread_.joinable()) thread_.join();
    detach();
  }

  bool finished() const { return finished_; }
  SimTime now() const { return now_; }

 private:
  bool deliver(const std::string& frame) {
    try {
      const auto m = wire::decode_message(frame);
      std::lock_guard lock(mu_);
      if (sim_.done()) return false;
      return sim_.deliver(m.seq, std::get<wire::Command>(m.body));
    } catch (const std::exception&) {
      return false;
    }
  }

  void detach() {
    for (const auto& [id, token] : tokens_) room_.detach_node(id, token);
    tokens_.clear();
  }

  void run() {
    const auto start = std::chrono::steady_clock::now();
    const auto& sc = sim_.scenario();
    while (!stopping_) {
      std::string frames;
      SimTime t = 0;
      {
        std::lock_guard lock(mu_);
        if (sim_.done()) break;
        t = sim_.now();
        for (const auto& tick : sim_.step()) frames += emitter_.encode(tick);
      }
      now_ = t;
      for (const auto& line : wire::split_stream(frames)) room_.ingest_line(line.text);
      if (speed_ > 0) {
        const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                     std::chrono::duration<double>(static_cast<double>(t + sc.controller.tick_s) / speed_));
        while (!stopping_ && std::chrono::steady_clock::now() < due)
          std::this_thread::sleep_for(std::min<std::chrono::steady_clock::duration>(
              due - std::chrono::steady_clock::now(), std::chrono::milliseconds(50)));
      }
    }
    detach();
    finished_ = true;
  }

  ControlRoom& room_;
  std::mutex mu_;
  sim::Simulation sim_;
  sim::WireEmitter emitter_;
  double speed_;
  std::vector<std::pair<std::string, std::uint64_t>> tokens_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
  std::atomic<bool> finished_{false};
  std::atomic<SimTime> now_{0};
};

// ---------------------------------------------------------------------------
// HTTP API
// ---------------------------------------------------------------------------

struct HttpOptions {
  std::optional<std::string> static_dir;  // admin panel assets
  std::function<json()> sim_status;       // extra fields for /api/stats
};

namespace detail {

inline void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

inline std::optional<SimTime> int_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  const auto v = wire::detail::parse_int(req.get_param_value(key));
  if (!v) throw std::invalid_argument(std::string("query parameter '") + key + "' must be an integer");
  return *v;
}

inline bool flag_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return false;
  const auto v = req.get_param_value(key);
  return v.empty() || v == "1" || v == "true" || v == "yes";
}

inline wire::Command parse_command_body(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("body must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (k != "node" && k != "lamp" && k != "action" && k != "state" && k != "brightness" && k != "expiry_s" &&
        k != "issuer")
      throw std::invalid_argument("unknown field '" + k + "'");
  wire::Command c;
  if (!j.contains("node") || !j["node"].is_string()) throw std::invalid_argument("'node' must be a string");
  c.node = j["node"].get<std::string>();
  if (!wire::valid_node_id(c.node)) throw std::invalid_argument("'node' is not a valid node id");
  if (j.contains("lamp") && !j["lamp"].is_null() && !(j["lamp"].is_string() && j["lamp"] == "ALL")) {
    if (!j["lamp"].is_number_integer() || j["lamp"].get<int>() < 0)
      throw std::invalid_argument("'lamp' must be a lamp index or \"ALL\"");
    c.lamp = j["lamp"].get<int>();
  }
  const auto action = j.value("action", std::string());
  auto need_int = [&](const char* key, std::int64_t lo, std::int64_t hi) {
    if (!j.contains(key) || !j[key].is_number_integer()) throw std::invalid_argument(std::string("'") + key + "' is required");
    const auto v = j[key].get<std::int64_t>();
    if (v < lo || v > hi) throw std::invalid_argument(std::string("'") + key + "' out of range");
    return v;
  };
  if (action == "set") {
    c.action = wire::CommandAction::SetOverride;
    c.state_bit = j.contains("state") ? static_cast<int>(need_int("state", 0, 1)) : 1;
    c.brightness = static_cast<int>(need_int("brightness", 0, 100));
    c.expiry_s = need_int("expiry_s", 1, 7 * 86400);
  } else if (action == "clear") {
    c.action = wire::CommandAction::ClearOverride;
  } else if (action == "snapshot") {
    c.action = wire::CommandAction::RequestSnapshot;
  } else {
    throw std::invalid_argument("'action' must be set, clear or snapshot");
  }
  return c;
}

}  // namespace detail

class HttpServer {
 public:
  static constexpr std::size_t kDefaultLogLimit = 1000;
  static constexpr std::size_t kMaxLogLimit = 100000;

  HttpServer(ControlRoom& room, const Endpoint& at, HttpOptions opts = {}) : room_(room), opts_(std::move(opts)) {
    routes();
    if (at.port == 0) {
      port_ = svr_.bind_to_any_port(at.host);
      if (port_ < 0) throw NetError("cannot listen on " + at.to_string());
    } else {
      if (!svr_.bind_to_port(at.host, at.port)) throw NetError("cannot listen on " + at.to_string());
      port_ = at.port;
    }
    host_ = at.host;
  }

  ~HttpServer() { stop(); }

  Endpoint endpoint() const { return {host_, port_}; }

  void start() {
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }

  void stop() {
    if (stopping_.exchange(true)) return;
    room_.events().close_all();
    svr_.stop();
    if (thread_.joinable()) thread_.join();
  }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Maps library exceptions onto status codes.
  static httplib::Server::Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const control::UnknownNode& e) {
        detail::send_error(res, 404, e.what());
      } catch (const json::exception& e) {
        detail::send_error(res, 400, std::string("bad JSON: ") + e.what());
      } catch (const std::invalid_argument& e) {
        detail::send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        detail::send_error(res, 500, e.what());
      }
    };
  }

  void routes() {
    svr_.set_default_headers({{"Access-Control-Allow-Origin", "*"}, {"Cache-Control", "no-store"}});
    svr_.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.status = 204;
    });

    svr_.Get("/api/health", guarded([](const auto&, auto& res) { detail::send_json(res, 200, {{"ok", true}}); }));

    svr_.Get("/api/snapshot", guarded([this](const auto&, auto& res) {
               res.set_content(room_.snapshot_json().dump(), "application/json");
             }));

    svr_.Get("/api/stats", guarded([this](const auto&, auto& res) {
               const auto s = room_.stats();
               json j = {{"accepted", s.accepted},     {"duplicates", s.duplicates}, {"malformed", s.malformed},
                         {"rejected", s.rejected},     {"commands", s.commands},     {"log_entries", s.log_entries},
                         {"gaps", room_.snapshot()->gaps_detected}};
               j["simulation"] = opts_.sim_status ? opts_.sim_status() : json(nullptr);
               detail::send_json(res, 200, j);
             }));

    svr_.Get("/api/log", guarded([this](const auto& req, auto& res) { get_log(req, res); }));

    svr_.Get("/api/faults", guarded([this](const auto& req, auto& res) {
               json list = json::array();
               for (const auto& f : room_.faults(detail::flag_param(req, "open"))) list.push_back(control::to_json(f));
               detail::send_json(res, 200, {{"faults", list}});
             }));

    svr_.Get("/api/energy", guarded([this](const auto& req, auto& res) {
               const SimTime from = detail::int_param(req, "from").value_or(0);
               const SimTime to = detail::int_param(req, "to").value_or(room_.snapshot()->snapshot_time);
               const Decimal tariff = Decimal::parse(req.has_param("tariff") ? req.get_param_value("tariff") : "7.70");
               const auto node = req.has_param("node") ? std::optional<std::string>(req.get_param_value("node"))
                                                       : std::nullopt;
               try {
                 detail::send_json(res, 200, control::to_json(room_.energy(from, to, tariff, node)));
               } catch (const control::InvalidRange& e) {
                 detail::send_error(res, 400, e.what());
               }
             }));

    svr_.Get("/api/commands", guarded([this](const auto&, auto& res) {
               json list = json::array();
               for (const auto& a : room_.audits()) list.push_back(control::to_json(a));
               detail::send_json(res, 200, {{"commands", list}});
             }));

    svr_.Post("/api/command", guarded([this](const auto& req, auto& res) {
                const auto body = json::parse(req.body);
                const auto cmd = detail::parse_command_body(body);
                const auto issuer = body.contains("issuer") && body["issuer"].is_string()
                                        ? body["issuer"].template get<std::string>()
                                        : std::string("api");
                const auto audit = room_.issue_command(cmd, issuer);
                const int status = audit.result == control::DispatchResult::Acked      ? 200
                                   : audit.result == control::DispatchResult::Rejected ? 409
                                                                                       : 504;
                detail::send_json(res, status, control::to_json(audit));
              }));

    svr_.Get("/api/stream", [this](const httplib::Request&, httplib::Response& res) { stream(res); });

    if (opts_.static_dir) svr_.set_mount_point("/", *opts_.static_dir);
  }

  void get_log(const httplib::Request& req, httplib::Response& res) {
    control::LogQuery q;
    if (req.has_param("node")) q.node = req.get_param_value("node");
    if (const auto v = detail::int_param(req, "from")) q.from = *v;
    if (const auto v = detail::int_param(req, "to")) q.to = *v;
    if (const auto v = detail::int_param(req, "offset")) {
      if (*v < 0) throw std::invalid_argument("offset must be >= 0");
      q.offset = static_cast<std::size_t>(*v);
    }
    q.limit = kDefaultLogLimit;
    if (const auto v = detail::int_param(req, "limit")) {
      if (*v < 0 || static_cast<std::size_t>(*v) > kMaxLogLimit)
        throw std::invalid_argument("limit must be 0.." + std::to_string(kMaxLogLimit));
      q.limit = static_cast<std::size_t>(*v);
    }
    if (req.has_param("kinds")) {
      for (const auto k : wire::detail::split(req.get_param_value("kinds"), ',')) {
        const auto kind = control::parse_log_kind(k);
        if (!kind) throw std::invalid_argument("unknown log kind '" + std::string(k) + "'");
        q.kinds.insert(*kind);
      }
    }
    const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("json");
    if (format == "csv") q.kinds = {control::LogKind::Row};
    else if (format != "json") throw std::invalid_argument("format must be json or csv");

    control::LogPage page;
    try {
      page = room_.query_log(q);
    } catch (const control::InvalidRange& e) {
      detail::send_error(res, 400, e.what());
      return;
    }
    if (format == "csv") {
      std::string out;
      for (const auto& e : page.entries) {
        const auto& tel = std::get<wire::TelemetryPayload>(std::get<wire::Message>(e.body).body);
        if (out.empty()) out = wire::csv_header(tel.row.lamps.size()) + "\n";
        out += wire::encode_csv_row(tel.row) + "\n";
      }
      res.set_header("X-Total-Count", std::to_string(page.total));
      res.set_content(out, "text/csv");
      return;
    }
    json entries = json::array();
    for (const auto& e : page.entries) entries.push_back(control::to_json(e));
    detail::send_json(res, 200, {{"total", page.total}, {"offset", q.offset}, {"limit", q.limit}, {"entries", entries}});
  }

  // Server-sent events: one full snapshot, then deltas, fault alerts and
  // audit updates as they happen.
  void stream(httplib::Response& res) {
    auto sub = room_.events().subscribe();
    auto first = std::make_shared<std::string>("event: snapshot\ndata: " + room_.snapshot_json().dump() + "\n\n");
    res.set_header("X-Accel-Buffering", "no");
    res.set_chunked_content_provider("text/event-stream", [this, sub, first](std::size_t, httplib::DataSink& sink) {
      if (!first->empty()) {
        const bool ok = sink.write(first->data(), first->size());
        first->clear();
        return ok;
      }
      if (stopping_ || sub->closed()) {
        sink.done();
        return true;
      }
      std::string chunk;
      if (const auto e = sub->next(std::chrono::milliseconds(500)))
        chunk = "id: " + std::to_string(e->id) + "\nevent: " + e->name + "\ndata: " + e->data + "\n\n";
      else
        chunk = ": keepalive\n\n";
      return sink.write(chunk.data(), chunk.size());
    });
  }

  ControlRoom& room_;
  HttpOptions opts_;
  httplib::Server svr_;
  int port_ = 0;
  std::string host_;
  std::thread thread_;
  std::atomic<bool> stopping_{false};
};

// ---------------------------------------------------------------------------
// Replay client
// ---------------------------------------------------------------------------

inline std::optional<SimTime> frame_time(const wire::Message& m) {
  if (const auto* t = std::get_if<wire::TelemetryPayload>(&m.body)) return t->t;
  if (const auto* f = std::get_if<wire::FaultPayload>(&m.body)) return f->cleared ? *f->cleared : f->onset;
  return std::nullopt;
}

// Sends every frame to a control room's node socket, paced by frame time
// (speed = simulated seconds per wall second, 0 = as fast as possible).
// Returns once the control room has consumed the stream and closed.
inline std::size_t replay_frames(const std::vector<wire::Message>& frames, const Endpoint& to, double speed) {
  if (!(speed >= 0)) throw std::invalid_argument("speed must be >= 0");
  const int fd = detail::connect_to(to);
  const auto start = std::chrono::steady_clock::now();
  std::optional<SimTime> t0;
  std::size_t sent = 0;
  for (const auto& m : frames) {
    if (speed > 0) {
      if (const auto t = frame_time(m)) {
        if (!t0) t0 = *t;
        const auto due = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                     std::chrono::duration<double>(static_cast<double>(*t - *t0) / speed));
        std::this_thread::sleep_until(due);
      }
    }
    if (!detail::send_all(fd, wire::encode_message(m))) {
      ::close(fd);
      throw NetError("connection to " + to.to_string() + " lost after " + std::to_string(sent) + " frames");
    }
    ++sent;
  }
  ::shutdown(fd, SHUT_WR);
  char buf[4096];
  while (true) {
    const auto n = ::recv(fd, buf, sizeof buf, 0);
    if (n > 0 || (n < 0 && errno == EINTR)) continue;
    break;
  }
  ::close(fd);
  return sent;
}

}  // namespace streetlight::server
