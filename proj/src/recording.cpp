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

// Loading, replaying and reporting on session directories.

#include <fstream>
#include <map>
#include <sstream>

#include "cortexloop/errors.hpp"
#include "cortexloop/robot.hpp"
#include "cortexloop/session.hpp"
#include "cortexloop/signal_io.hpp"

namespace cortexloop {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

// Reads a headed CSV of doubles; `expect` is the header line.
std::vector<std::vector<double>> read_csv(const fs::path& path, const std::string& expect) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  long line_no = 1;
  if (!std::getline(in, line) || line != expect)
    throw ParseError(path.string() + ": expected header '" + expect + "'", 1);
  const auto width = split_csv_line(expect).size();
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width)
      throw ParseError(path.string() + ": wrong column count", line_no);
    std::vector<double> row;
    row.reserve(width);
    for (const auto& c : cells) {
      const auto v = parse_double(c);
      if (!v) throw ParseError(path.string() + ": bad number '" + std::string(c) + "'", line_no);
      row.push_back(*v);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

bool starts_with(const std::string& s, std::string_view prefix) {
  return s.rfind(prefix, 0) == 0;
}

}  // namespace

std::vector<TrainingTrial> SessionRecording::training_trials() const {
  std::vector<TrainingTrial> out;
  std::optional<TrainingTrial> open;
  for (const auto& e : events) {
    const auto phase = e.payload.value("phase", std::string{});
    if (!starts_with(phase, "training_")) continue;
    if (e.type == EventType::kTrialStart) {
      open = TrainingTrial{e.payload.at("trial").get<int>(),
                           e.payload.at("sample").get<SampleIndex>(), 0};
    } else if (e.type == EventType::kTrialEnd && open) {
      open->end = e.payload.at("sample").get<SampleIndex>();
      if (e.payload.value("outcome", std::string{}) == "completed") out.push_back(*open);
      open.reset();
    }
  }
  return out;
}

SessionRecording load_recording(const fs::path& dir, bool load_frames) {
  SessionRecording rec;
  rec.dir = dir;
  {
    std::ifstream in(dir / "format_version");
    int version = 0;
    if (!(in >> version)) throw ConfigError(dir.string() + " is not a session recording");
    if (version != kRecordingFormatVersion)
      throw ConfigError("unsupported recording format_version " + std::to_string(version));
  }
  rec.config = read_json_file(dir / "config.json");
  rec.signal_config = rec.config.at("scenario").at("signal_config").get<SignalConfig>();
  rec.filter_applied = rec.config.at("filter_applied").get<bool>();
  if (load_frames) {
    SignalConfig file_cfg;
    rec.frames = read_signal_file(dir / "signals.csv", &file_cfg);
    if (!(file_cfg == rec.signal_config))
      throw ConfigError("signals.csv configuration differs from config.json");
  }
  rec.events = read_event_log(dir / "events.jsonl");
  for (const auto& r : read_csv(dir / "reference.csv", "t,x,y,u,v"))
    rec.reference.push_back({static_cast<SampleIndex>(r[0]), r[3], r[4]});
  for (const auto& r : read_csv(dir / "cursor.csv", "t_s,trial,x,y,u,v,active"))
    rec.ticks.push_back({r[0], static_cast<int>(r[1]), r[2], r[3], r[4], r[5], r[6] != 0.0});
  if (fs::exists(dir / "model.json")) rec.model = load_model(dir / "model.json");
  if (fs::exists(dir / "status.json"))
    rec.complete = read_json_file(dir / "status.json").value("complete", false);
  return rec;
}

TrainingSet assemble_training_set(const SessionRecording& recording, const SignalConfig& cfg) {
  if (!(cfg == recording.signal_config))
    throw ConfigError("signal configuration differs from the recording's");
  const auto trials = recording.training_trials();
  return assemble_training_set(recording.frames, cfg, recording.filter_applied, trials,
                               recording.reference);
}

SessionResult replay_session(const fs::path& recording_dir,
                             const std::optional<DecoderModel>& model,
                             const fs::path& out_dir) {
  const auto rec = load_recording(recording_dir, false);
  SessionConfig cfg;
  cfg.scenario = rec.config.at("scenario").get<Scenario>();
  cfg.test_modes.clear();
  for (const auto& m : rec.config.at("test_modes"))
    cfg.test_modes.push_back(test_mode_from_string(m.get<std::string>()));
  cfg.clock = ClockMode::kMaxSpeed;
  cfg.run_training = rec.config.at("run_training").get<bool>();
  if (model)
    cfg.model = model;
  else if (rec.config.value("model_supplied", false))
    cfg.model = rec.model;
  cfg.replay_signals = recording_dir / "signals.csv";
  cfg.recording_dir = out_dir;
  if (fs::exists(recording_dir / "controls.jsonl")) {
    std::ifstream in(recording_dir / "controls.jsonl");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto j = json::parse(line);
      cfg.scripted_controls.push_back(
          {j.at("sample").get<SampleIndex>(),
           control_action_from_string(j.at("action").get<std::string>())});
    }
  }
  return run_session(cfg);
}

json generate_report(const fs::path& recording_dir, const fs::path& out_dir) {
  const auto rec = load_recording(recording_dir, false);
  const double tick_s = 1.0 / rec.config.at("scenario").at("protocol").value("update_hz", 16.0);

  // Rebuild trial results from the event log, grouped by mode then run.
  std::map<std::string, std::map<int, std::vector<TrialResult>>> runs;
  std::vector<std::string> mode_order;
  struct Window {
    std::string mode;
    int trial;
    double begin_s, end_s;
  };
  std::vector<Window> windows;
  std::string mode;
  int run = 0;
  TrialResult pending;
  double trial_begin_s = 0.0;
  for (const auto& e : rec.events) {
    const auto& p = e.payload;
    switch (e.type) {
      case EventType::kPhaseStart:
        mode = p.value("mode", std::string{});
        if (!mode.empty()) mode_order.push_back(mode);
        break;
      case EventType::kTrialStart:
        if (p.contains("run")) run = p.at("run").get<int>();
        trial_begin_s = e.t_s;
        pending = {};
        break;
      case EventType::kTargetShown:
        pending.direction = direction_from_string(p.at("direction").get<std::string>());
        break;
      case EventType::kHit:
        pending.outcome = Outcome::kHit;
        pending.time_to_target = p.at("time_to_target").get<double>();
        break;
      case EventType::kTimeout:
        pending.outcome = Outcome::kTimeout;
        break;
      case EventType::kTrialEnd: {
        if (mode.empty()) break;
        const auto outcome = p.value("outcome", std::string{});
        windows.push_back({mode, p.at("trial").get<int>(), trial_begin_s, e.t_s});
        if (outcome != "hit" && outcome != "timeout") break;
        pending.wrong_direction_time = p.value("wrong_direction_time", 0.0);
        runs[mode][run].push_back(pending);
        break;
      }
      case EventType::kFault:
        break;
    }
  }

  json table = json::array();
  std::ostringstream table_csv;
  table_csv << "mode,direction,n_runs,n_trials,n_hits,success_rate,success_sd,cell\n";
  auto add_row = [&](const std::string& m, const std::string& dir, int n_runs,
                     const DirectionStats& s) {
    const auto cell = format_rate(s.success_rate, s.success_sd);
    json row = s;
    row["mode"] = m;
    row["direction"] = dir;
    row["n_runs"] = n_runs;
    row["cell"] = cell;
    table.push_back(row);
    table_csv << m << ',' << dir << ',' << n_runs << ',' << s.n_trials << ',' << s.n_hits
              << ',' << format_double(s.success_rate) << ',' << format_double(s.success_sd)
              << ',' << '"' << cell << '"' << '\n';
  };
  for (const auto& m : mode_order) {
    const auto it = runs.find(m);
    if (it == runs.end()) continue;
    std::vector<std::vector<TrialResult>> grouped;
    for (const auto& [_, trials] : it->second) grouped.push_back(trials);
    const RunSummary s = summarize(grouped);
    for (const auto& [d, stats] : s.per_direction) add_row(m, to_string(d), s.n_runs, stats);
    add_row(m, "overall", s.n_runs, s.overall);
  }

  // Per-trial traces and activation timelines from the tick log.
  std::ostringstream traces_csv, activation_csv;
  traces_csv << "mode,trial,t_s,x,y,u,v,active\n";
  activation_csv << "mode,trial,start_s,end_s\n";
  json activation = json::array();
  std::size_t k = 0;
  for (const auto& w : windows) {
    std::vector<bool> active;
    std::optional<double> t0;
    for (; k < rec.ticks.size() && rec.ticks[k].t_s <= w.end_s + 1e-9; ++k) {
      const auto& t = rec.ticks[k];
      if (t.t_s <= w.begin_s || t.trial != w.trial) continue;
      if (!t0) t0 = t.t_s;
      active.push_back(t.active);
      traces_csv << w.mode << ',' << w.trial << ',' << format_double(t.t_s) << ','
                 << format_double(t.x) << ',' << format_double(t.y) << ','
                 << format_double(t.u) << ',' << format_double(t.v) << ','
                 << (t.active ? 1 : 0) << '\n';
    }
    if (!t0) continue;
    const auto segments = activation_timeline(active, *t0, tick_s);
    json segs = json::array();
    for (const auto& s : segments) {
      segs.push_back({s.start_s, s.end_s});
      activation_csv << w.mode << ',' << w.trial << ',' << format_double(s.start_s) << ','
                     << format_double(s.end_s) << '\n';
    }
    activation.push_back({{"mode", w.mode},
                          {"trial", w.trial},
                          {"segments", segs},
                          {"gaps", activation_gaps(segments)},
                          {"duty_cycle", duty_cycle(active)}});
  }

  // No scored trial means there is nothing to tabulate; flag it like a cut-short session.
  json report = {{"partial", !rec.complete || table.empty()},
                 {"table", table},
                 {"activation", activation},
                 {"fit_report", rec.model ? json(rec.model->fit_report) : json(nullptr)}};
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream(out_dir / "report.json") << report.dump(2) << '\n';
    std::ofstream(out_dir / "table.csv") << table_csv.str();
    std::ofstream(out_dir / "traces.csv") << traces_csv.str();
    std::ofstream(out_dir / "activation.csv") << activation_csv.str();
  }
  return report;
}

}  // namespace cortexloop
