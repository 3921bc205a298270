// Copyright 2026 The CortexLoop Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cortexloop/decoder.hpp"
#include "cortexloop/errors.hpp"
#include "cortexloop/robot_udp.hpp"
#include "cortexloop/scenario.hpp"
#include "cortexloop/session.hpp"
#include "cortexloop/ui_server.hpp"

namespace cortexloop::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  g_stop = false;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
}

// Options shared by the subcommands; unset optionals mean "keep the lower
// layer's value".
struct Options {
  std::string scenario;
  std::string modes = "horizontal1D";
  std::string out;
  bool max_speed = false;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::string robot;
  std::string recording;
  std::optional<double> ridge;
  std::string model;
  std::string listen;
  std::string log;
  double duration_s = 0.0;
};

std::vector<TestMode> parse_modes(const std::string& text) {
  std::vector<TestMode> modes;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      modes.push_back(test_mode_from_string(item));
    } catch (const std::exception&) {
      throw ConfigError("unknown mode '" + item +
                        "' (expected horizontal1D, vertical1D or full2D)");
    }
  }
  if (modes.empty()) throw ConfigError("--mode needs at least one mode");
  return modes;
}

Scenario scenario_from(const Options& o) {
  Scenario s = o.scenario.empty() ? Scenario{} : load_scenario(o.scenario);
  if (o.seed) s.seeds.master = *o.seed;
  if (o.trials) s.protocol.test_trials = *o.trials;
  s.validate();
  return s;
}

json run_json(const SessionResult& r, const fs::path& dir) {
  json j = summary_json(r);
  j["latency"] = {{"samples", r.latency.samples},
                  {"p50_ms", r.latency.p50_ms},
                  {"p99_ms", r.latency.p99_ms},
                  {"max_ms", r.latency.max_ms}};
  if (!dir.empty()) j["recording"] = dir.string();
  return j;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cmd_simulate(const Options& o, std::ostream& out) {
  SessionConfig cfg;
  cfg.scenario = scenario_from(o);
  cfg.test_modes = parse_modes(o.modes);
  cfg.clock = o.max_speed ? ClockMode::kMaxSpeed : ClockMode::kRealtime;
  cfg.recording_dir = o.out;
  if (!o.robot.empty()) cfg.robot = parse_endpoint(o.robot);
  if (cfg.scenario.source == SourceKind::kSurrogate)
    throw ConfigError("simulate needs a synthetic source; use serve for surrogate sessions");
  const auto r = run_session(cfg);
  out << run_json(r, cfg.recording_dir).dump(2) << '\n';
  return kExitOk;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
  const auto rec = load_recording(o.recording);
  const double ridge = o.ridge.value_or(
      rec.config.at("scenario").at("protocol").value("ridge_lambda", 0.0));
  if (!(ridge >= 0.0)) throw ConfigError("--ridge must be nonnegative");
  const auto ts = assemble_training_set(rec, rec.signal_config);
  if (ts.rows() == 0) throw EmptyTrainingError("recording has no completed training trials");
  const auto model = fit(ts, rec.signal_config, ridge);
  save_model(model, o.out);
  out << json{{"model", o.out}, {"fit_report", model.fit_report}}.dump(2) << '\n';
  return kExitOk;
}

int cmd_replay(const Options& o, std::ostream& out) {
  std::optional<DecoderModel> model;
  if (!o.model.empty()) model = load_model(o.model);
  const auto r = replay_session(o.recording, model, o.out);
  json j = run_json(r, o.out);
  if (!o.out.empty()) {
    const fs::path a = o.recording, b = o.out;
    j["events_match"] = slurp(a / "events.jsonl") == slurp(b / "events.jsonl");
    j["decoded_match"] = slurp(a / "decoded.csv") == slurp(b / "decoded.csv");
  }
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  out << generate_report(o.recording, o.out).dump(2) << '\n';
  return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.max_speed)
    throw ConfigError("--max-speed cannot be combined with serve (live sessions run in real time)");
  SessionConfig cfg;
  cfg.scenario = scenario_from(o);
  cfg.test_modes = parse_modes(o.modes);
  cfg.clock = ClockMode::kRealtime;
  cfg.recording_dir = o.out;
  if (!o.robot.empty()) cfg.robot = parse_endpoint(o.robot);
  UiServer ui(parse_endpoint(o.listen));
  cfg.ui = &ui;
  cfg.wait_for_start = cfg.scenario.source == SourceKind::kSurrogate;
  install_signal_handlers();
  cfg.stop_flag = &g_stop;
  err << "serving UI on " << parse_endpoint(o.listen).host << ':' << ui.port() << '\n';
  const auto r = run_session(cfg);
  out << run_json(r, cfg.recording_dir).dump(2) << '\n';
  return kExitOk;
}

int cmd_robot_actuator(const Options& o, std::ostream& out, std::ostream& err) {
  std::optional<VirtualActuator> actuator;
  if (o.log.empty())
    actuator.emplace();
  else
    actuator.emplace(o.log);
  UdpActuatorServer server(parse_endpoint(o.listen), *actuator);
  install_signal_handlers();
  err << "virtual robot listening on udp port " << server.port() << '\n';
  std::thread io([&] { server.run(); });
  const auto start = std::chrono::steady_clock::now();
  while (!g_stop) {
    if (o.duration_s > 0.0 &&
        std::chrono::steady_clock::now() - start >= std::chrono::duration<double>(o.duration_s))
      break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  server.stop();
  io.join();
  out << json{{"accepted", actuator->accepted()},
              {"stale", actuator->stale()},
              {"framing_errors", actuator->framing_errors()},
              {"protocol_errors", actuator->protocol_errors()},
              {"unknown_commands", actuator->unknown_commands()},
              {"transitions", actuator->transitions()},
              {"state", robot_state_json(actuator->state())}}
             .dump(2)
      << '\n';
  return kExitOk;
}

}  // namespace

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

std::string env_name(const std::string& flag) {
  std::string name = "CORTEXLOOP_";
  for (char c : flag) {
    if (c == '-' && name.size() == 11) continue;  // leading dashes
    name += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return name;
}

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err, const EnvLookup& env) {
  Options o;
  CLI::App app{"Closed-loop EEG decoding, cursor task and robot neurofeedback", "cortexloop"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  auto* simulate = app.add_subcommand("simulate", "Run a full session with a synthetic subject");
  simulate->add_option("--scenario", o.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  simulate->add_option("--mode", o.modes, "Test modes, comma separated")->capture_default_str();
  simulate->add_option("--out", o.out, "Recording directory")->required();
  simulate->add_flag("--max-speed", o.max_speed, "Run the logical clock as fast as possible");
  simulate->add_option("--seed", o.seed, "Master seed (overrides the scenario's)");
  simulate->add_option("--trials", o.trials, "Test trials per mode")->check(CLI::NonNegativeNumber);
  simulate->add_option("--robot", o.robot, "Also send commands to a UDP robot at HOST:PORT");

  auto* calibrate = app.add_subcommand("calibrate", "Refit the decoder on a recording's training data");
  calibrate->add_option("--recording", o.recording, "Recording directory")
      ->required()->check(CLI::ExistingDirectory);
  calibrate->add_option("--ridge", o.ridge, "Ridge penalty (default: the scenario's)");
  calibrate->add_option("--out", o.out, "Model JSON to write")->required();

  auto* replay = app.add_subcommand("replay", "Re-run a recording with its signals as the source");
  replay->add_option("--recording", o.recording, "Recording directory")
      ->required()->check(CLI::ExistingDirectory);
  replay->add_option("--model", o.model, "Decoder model JSON (default: refit or recorded)")
      ->check(CLI::ExistingFile);
  replay->add_option("--out", o.out, "Write the replayed recording here and compare");

  auto* report = app.add_subcommand("report", "Success table, traces and activation timelines");
  report->add_option("--recording", o.recording, "Recording directory")
      ->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", o.out, "Directory for report.json and the CSV bundle");

  auto* serve = app.add_subcommand("serve", "Live session with the WebSocket UI");
  serve->add_option("--scenario", o.scenario, "Scenario JSON file")->check(CLI::ExistingFile);
  serve->add_option("--mode", o.modes, "Test modes, comma separated")->capture_default_str();
  serve->add_option("--listen", o.listen, "UI address HOST:PORT")->default_val("127.0.0.1:8765");
  serve->add_option("--robot", o.robot, "UDP robot HOST:PORT");
  serve->add_option("--out", o.out, "Recording directory");
  serve->add_option("--seed", o.seed, "Master seed (overrides the scenario's)");
  serve->add_option("--trials", o.trials, "Test trials per mode")->check(CLI::NonNegativeNumber);
  serve->add_flag("--max-speed", o.max_speed, "Rejected: live sessions run in real time");

  auto* actuator = app.add_subcommand("robot-actuator", "Standalone virtual robot on UDP");
  actuator->add_option("--listen", o.listen, "UDP address HOST:PORT")->default_val("127.0.0.1:9750");
  actuator->add_option("--log", o.log, "JSON Lines log of state changes");
  actuator->add_option("--duration", o.duration_s, "Exit after this many seconds (0: run until signalled)")
      ->check(CLI::NonNegativeNumber);

  // Env vars outrank flags: append them as trailing flags and let every
  // option keep its last value.
  std::vector<std::string> argv = args;
  for (auto* sub : app.get_subcommands({})) {
    const bool active = !args.empty() && args.front() == sub->get_name();
    for (auto* opt : sub->get_options()) {
      if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
      const std::string flag = "--" + opt->get_lnames().front();
      opt->envname(env_name(flag));
      opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
      if (!active) continue;
      if (auto v = env(env_name(flag))) argv.push_back(flag + "=" + *v);
    }
  }

  try {
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // Help and version requests arrive as "errors" with exit code 0.
    // Top-level help lists every subcommand's flags.
    if (dynamic_cast<const CLI::CallForHelp*>(&e) && app.get_subcommands().empty()) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    }
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  // simulate/replay/report always answer with JSON on stdout.
  const bool json_out = simulate->parsed() || replay->parsed() || report->parsed();
  auto fail = [&](int code, const char* kind, const std::string& what) {
    err << "error: " << what << '\n';
    if (json_out)
      out << json{{"status", "error"}, {"error_kind", kind}, {"message", what}}.dump(2) << '\n';
    return code;
  };
  try {
    if (simulate->parsed()) return cmd_simulate(o, out);
    if (calibrate->parsed()) return cmd_calibrate(o, out);
    if (replay->parsed()) return cmd_replay(o, out);
    if (report->parsed()) return cmd_report(o, out);
    if (serve->parsed()) return cmd_serve(o, out, err);
    if (actuator->parsed()) return cmd_robot_actuator(o, out, err);
  } catch (const ValidationError& e) {
    return fail(kExitValidation, "validation", e.what());
  } catch (const RuntimeFault& e) {
    return fail(kExitRuntime, "runtime", e.what());
  } catch (const std::exception& e) {
    return fail(kExitRuntime, "runtime", e.what());
  }
  return kExitValidation;
}

}  // namespace cortexloop::cli
