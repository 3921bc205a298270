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

#ifndef CORTEXLOOP_SESSION_HPP_
#define CORTEXLOOP_SESSION_HPP_

#include <atomic>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cortexloop/decoder.hpp"
#include "cortexloop/events.hpp"
#include "cortexloop/robot_udp.hpp"
#include "cortexloop/scenario.hpp"
#include "cortexloop/subject.hpp"
#include "cortexloop/task.hpp"

namespace cortexloop {

inline constexpr int kRecordingFormatVersion = 1;

enum class ClockMode { kRealtime, kMaxSpeed };
enum class ControlAction { kStart, kAbort, kNextMode };

std::string to_string(ControlAction a);
ControlAction control_action_from_string(std::string_view s);

/// Session-side view of a UI connection. Implementations must make publish()
/// and poll_control() safe to call from the session loop thread while their
/// own I/O runs elsewhere.
class UiChannel {
 public:
  virtual ~UiChannel() = default;
  virtual void publish(const nlohmann::json& message) = 0;
  virtual std::optional<ControlAction> poll_control() = 0;
  /// Installs the sink for inbound intent messages; the session passes a
  /// function that forwards to its surrogate source.
  virtual void set_intent_sink(std::function<void(Velocity)> sink) = 0;
};

/// A control applied when the loop reaches `sample` (used for replay).
struct ScriptedControl {
  SampleIndex sample = 0;
  ControlAction action = ControlAction::kNextMode;
};

struct SessionConfig {
  Scenario scenario;
  std::vector<TestMode> test_modes = {TestMode::kHorizontal1D};
  ClockMode clock = ClockMode::kMaxSpeed;
  std::optional<Endpoint> robot;
  /// Empty path: nothing is written to disk.
  std::filesystem::path recording_dir;

  /// Fitted decoder to use at calibration instead of fitting.
  std::optional<DecoderModel> model;
  /// When false the training phases are skipped (requires `model`).
  bool run_training = true;

  /// Replace the scenario's subject with frames from this signal file.
  std::optional<std::filesystem::path> replay_signals;

  UiChannel* ui = nullptr;
  /// Hold in the lobby until the UI sends "start".
  bool wait_for_start = false;
  std::vector<ScriptedControl> scripted_controls;
  /// Polled once per tick; when it reads true the session aborts.
  const std::atomic<bool>* stop_flag = nullptr;

  /// Throws ConfigError for contradictory settings.
  void validate() const;
};

struct LatencyStats {
  long samples = 0;
  double p50_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

struct SessionResult {
  bool complete = false;
  std::string status;  // "complete", "aborted", ...
  std::vector<std::vector<TrialResult>> runs;
  std::optional<RunSummary> summary;
  std::optional<DecoderModel> model;
  LatencyStats latency;
  long frames = 0;
  long ticks = 0;
  long state_messages = 0;
  long control_faults = 0;
};

nlohmann::json summary_json(const SessionResult& r);

/// Runs the protocol end to end. Throws AbortedSessionError when the source
/// runs dry, SingularFitError when calibration fails; the recording directory
/// is left marked partial in both cases.
SessionResult run_session(const SessionConfig& cfg);

/// One per-tick record from the test phase.
struct TickRecord {
  double t_s = 0.0;
  int trial = -1;
  double x = 0.0, y = 0.0;
  double u = 0.0, v = 0.0;
  bool active = false;
};

/// A session directory loaded back into memory.
struct SessionRecording {
  std::filesystem::path dir;
  nlohmann::json config;
  SignalConfig signal_config;
  bool filter_applied = false;
  std::vector<SampleFrame> frames;
  std::vector<Event> events;
  std::vector<ReferenceSample> reference;
  std::vector<TickRecord> ticks;
  std::optional<DecoderModel> model;
  bool complete = false;

  std::vector<TrainingTrial> training_trials() const;
};

/// Throws ConfigError/ParseError for missing or malformed content.
SessionRecording load_recording(const std::filesystem::path& dir,
                                bool load_frames = true);

/// Training rows from the phase-1 trials of a recording.
TrainingSet assemble_training_set(const SessionRecording& recording,
                                  const SignalConfig& cfg);

/// Re-runs a recording with its signals as the source. Uses `model` at
/// calibration when given, otherwise refits. Writes a fresh recording to
/// `out_dir` when non-empty.
SessionResult replay_session(const std::filesystem::path& recording_dir,
                             const std::optional<DecoderModel>& model,
                             const std::filesystem::path& out_dir);

/// Per-direction success table, per-trial position traces, activation
/// timelines and the fit report. Writes report.json, table.csv, traces.csv
/// and activation.csv into out_dir and returns the JSON document.
nlohmann::json generate_report(const std::filesystem::path& recording_dir,
                               const std::filesystem::path& out_dir);

}  // namespace cortexloop

#endif  // CORTEXLOOP_SESSION_HPP_
