// streetlight: fleet simulator, control room, stream replay and cost report.

#include <signal.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "streetlight/report.hpp"
#include "streetlight/scenario_file.hpp"
#include "streetlight/server.hpp"

namespace {

namespace fs = std::filesystem;
using namespace streetlight;

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

constexpr const char* kDefaultListen = "127.0.0.1:8080";
constexpr const char* kDefaultNodeListen = "127.0.0.1:7070";

// Thrown for bad flags or config; maps to exit 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

server::Endpoint endpoint_flag(const std::string& flag, const std::string& value) {
  try {
    return server::parse_endpoint(value);
  } catch (const std::invalid_argument& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes via a temporary sibling so a failed run never leaves a partial file.
void write_file(const std::string& path, const std::string& data) {
  const auto tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << data;
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + path);
  }
  fs::rename(tmp, path);
}

sim::Scenario load_scenario_or_usage(const std::string& path, std::optional<std::uint64_t> seed,
                                     std::optional<SimTime> duration) {
  try {
    auto s = sim::load_scenario(path);
    if (seed) s.env.rng_seed = *seed;
    if (duration) s.duration_s = *duration;
    sim::validate(s);
    return s;
  } catch (const sim::ConfigError& e) {
    throw UsageError(e.what());
  }
}

// ----- simulate --------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string out = "-";
  std::optional<std::uint64_t> seed;
  std::optional<SimTime> duration;
};

int cmd_simulate(const SimulateArgs& a) {
  const auto scenario = load_scenario_or_usage(a.scenario, a.seed, a.duration);
  const auto result = sim::simulate(scenario);
  if (a.out == "-") {
    std::cout << result.stream << std::flush;
    std::cerr << result.summary.to_string() << "\n";
  } else {
    write_file(a.out, result.stream);
    std::cout << result.summary.to_string() << "\n";
  }
  return kOk;
}

// ----- serve -----------------------------------------------------------------

struct ServeArgs {
  std::string listen;
  std::string node_listen;
  std::string data_dir;
  std::string simulate;
  double sim_speed = 1.0;
  std::optional<std::uint64_t> seed;
  std::int64_t ack_timeout_ms = 5000;
  std::string static_dir;
};

int cmd_serve(const ServeArgs& a) {
  const auto http_at = endpoint_flag("--listen", a.listen);
  const auto node_at = endpoint_flag("--node-listen", a.node_listen);
  if (a.ack_timeout_ms < 1) throw UsageError("--ack-timeout-ms must be >= 1");
  if (!(a.sim_speed >= 0)) throw UsageError("--sim-speed must be >= 0");
  if (!a.static_dir.empty() && !fs::is_directory(a.static_dir))
    throw UsageError("--static-dir: not a directory: " + a.static_dir);
  std::optional<sim::Scenario> scenario;
  if (!a.simulate.empty()) scenario = load_scenario_or_usage(a.simulate, a.seed, std::nullopt);

  // Signals are taken synchronously by this thread; workers inherit the mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  control::ControlRoomOptions opts;
  if (!a.data_dir.empty()) opts.data_dir = a.data_dir;
  opts.ack_timeout = std::chrono::milliseconds(a.ack_timeout_ms);
  control::ControlRoom room(opts);

  std::unique_ptr<server::LiveSimulation> live;
  server::HttpOptions http_opts;
  if (!a.static_dir.empty()) http_opts.static_dir = a.static_dir;
  http_opts.sim_status = [&live]() -> server::json {
    if (!live) return nullptr;
    return {{"finished", live->finished()}, {"t", live->now()}};
  };

  server::NodeListener nodes(room, node_at);
  server::HttpServer http(room, http_at, http_opts);
  nodes.start();
  http.start();
  std::cout << "http " << http.endpoint().to_string() << "\n"
            << "node " << nodes.endpoint().to_string() << "\n"
            << "data " << (a.data_dir.empty() ? std::string("(memory)") : a.data_dir) << "\n"
            << std::flush;
  if (scenario) {
    live = std::make_unique<server::LiveSimulation>(room, *scenario, a.sim_speed);
    live->start();
  }

  int sig = 0;
  sigwait(&signals, &sig);
  std::cerr << "shutting down\n";
  if (live) live->stop();
  nodes.stop();
  http.stop();
  return kOk;
}

// ----- replay ----------------------------------------------------------------

struct ReplayArgs {
  std::string file;
  std::string to;
  double speed = 0;
};

int cmd_replay(const ReplayArgs& a) {
  const auto at = endpoint_flag("--to", a.to);
  if (!(a.speed >= 0)) throw UsageError("--speed must be >= 0");
  const auto data = read_file(a.file);
  std::vector<wire::Message> frames;
  try {
    frames = wire::decode_stream(data);
  } catch (const wire::FrameError& e) {
    std::cerr << "streetlight replay: " << a.file << ": " << e.what() << "\n";
    return kRuntime;
  }
  const auto sent = server::replay_frames(frames, at, a.speed);
  std::cout << "replayed " << sent << " frames to " << at.to_string() << "\n";
  return kOk;
}

// ----- report ----------------------------------------------------------------

struct ReportArgs {
  std::string city = "all";
  std::string scenario = "all";
  std::string format = "table";
  std::string tariff = "7.70";
  std::string hours = "12";
  std::string full_hours = "6";
  std::string dim_hours = "6";
  int dim_pct = 50;
};

int cmd_report(const ReportArgs& a) {
  report::ReportRequest r;
  try {
    if (a.city != "all") r.cities = {energy::parse_city(a.city)};
    r.scenario = report::parse_scenario(a.scenario);
    r.format = report::parse_format(a.format);
    r.tariff.rate_tk_per_kwh = Decimal::parse(a.tariff);
    r.calendar.hours_per_day = Decimal::parse(a.hours);
    r.full_hours = Decimal::parse(a.full_hours);
    r.dim_hours = Decimal::parse(a.dim_hours);
    r.dim_pct = a.dim_pct;
    if (r.calendar.hours_per_day > Decimal(24) || r.full_hours + r.dim_hours > Decimal(24))
      throw std::invalid_argument("operating hours must not exceed 24 per day");
    std::cout << report::render(r);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streetlight fleet simulator, control room and cost report"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "streetlight 1.0.0");

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its wire stream");
  simulate->add_option("scenario", sim_args.scenario, "Scenario file (YAML)")->required();
  simulate->add_option("-o,--out", sim_args.out, "Output stream file, - for stdout")->capture_default_str();
  simulate->add_option("--seed", sim_args.seed, "Override the scenario seed");
  simulate->add_option("--duration", sim_args.duration, "Override duration in seconds");

  ServeArgs serve_args;
  serve_args.listen = env_or("STREETLIGHT_LISTEN", kDefaultListen);
  serve_args.node_listen = env_or("STREETLIGHT_NODE_LISTEN", kDefaultNodeListen);
  serve_args.data_dir = env_or("STREETLIGHT_DATA_DIR", "");
  auto* serve = app.add_subcommand("serve", "Run the control room");
  serve->add_option("--listen", serve_args.listen, "HTTP address host:port (env STREETLIGHT_LISTEN)")
      ->capture_default_str();
  serve->add_option("--node-listen", serve_args.node_listen, "Node socket host:port (env STREETLIGHT_NODE_LISTEN)")
      ->capture_default_str();
  serve->add_option("--data-dir", serve_args.data_dir, "Log directory (env STREETLIGHT_DATA_DIR); memory only if unset");
  serve->add_option("--simulate", serve_args.simulate, "Run this scenario as live in-process nodes");
  serve->add_option("--sim-speed", serve_args.sim_speed, "Simulated seconds per wall second, 0 = unthrottled")
      ->capture_default_str();
  serve->add_option("--seed", serve_args.seed, "Override the simulated scenario seed");
  serve->add_option("--ack-timeout-ms", serve_args.ack_timeout_ms, "Command acknowledgement timeout")
      ->capture_default_str();
  serve->add_option("--static-dir", serve_args.static_dir, "Serve admin panel assets from this directory");

  ReplayArgs replay_args;
  replay_args.to = env_or("STREETLIGHT_NODE_LISTEN", kDefaultNodeListen);
  auto* replay = app.add_subcommand("replay", "Send a recorded stream to a running control room");
  replay->add_option("file", replay_args.file, "Stream file")->required();
  replay->add_option("--to", replay_args.to, "Node socket host:port (env STREETLIGHT_NODE_LISTEN)")
      ->capture_default_str();
  replay->add_option("--speed", replay_args.speed, "Simulated seconds per wall second, 0 = as fast as possible")
      ->capture_default_str();

  ReportArgs report_args;
  auto* rep = app.add_subcommand("report", "Print fleet energy and cost tables");
  rep->add_option("--city", report_args.city, "CCC, DNCC, DSCC, NCC or all")->capture_default_str();
  rep->add_option("--scenario", report_args.scenario, "sodium, led100, led50, all or blended")->capture_default_str();
  rep->add_option("--format", report_args.format, "table, csv or chart-data")->capture_default_str();
  rep->add_option("--tariff", report_args.tariff, "TK per kWh")->capture_default_str();
  rep->add_option("--hours", report_args.hours, "Operating hours per day")->capture_default_str();
  rep->add_option("--full-hours", report_args.full_hours, "Blended: hours at full brightness")->capture_default_str();
  rep->add_option("--dim-hours", report_args.dim_hours, "Blended: hours dimmed")->capture_default_str();
  rep->add_option("--dim-pct", report_args.dim_pct, "Blended: dimmed brightness %")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim_args);
    if (*serve) return cmd_serve(serve_args);
    if (*replay) return cmd_replay(replay_args);
    if (*rep) return cmd_report(report_args);
  } catch (const UsageError& e) {
    std::cerr << "streetlight: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "streetlight: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
