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

#ifndef CORTEXLOOP_TASK_HPP_
#define CORTEXLOOP_TASK_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cortexloop/decoder.hpp"

namespace cortexloop {

enum class Axis { kHorizontal, kVertical };
enum class TestMode { kHorizontal1D, kVertical1D, kFull2D };
/// Cardinal targets: RT, LT, TT, BT.
enum class Direction { kRight, kLeft, kTop, kBottom };

std::string to_string(Axis a);
std::string to_string(TestMode m);
std::string to_string(Direction d);
TestMode test_mode_from_string(std::string_view s);
Direction direction_from_string(std::string_view s);

Axis axis_of(Direction d);
/// +1 for right/top, -1 for left/bottom.
int sign_of(Direction d);

struct ProtocolPhase {
  enum class Kind { kIdle, kTraining, kCalibration, kTest };
  Kind kind = Kind::kIdle;
  Axis axis = Axis::kHorizontal;           // kTraining only
  TestMode mode = TestMode::kHorizontal1D;  // kTest only

  static ProtocolPhase idle() { return {}; }
  static ProtocolPhase training(Axis a) { return {Kind::kTraining, a, {}}; }
  static ProtocolPhase calibration() { return {Kind::kCalibration, {}, {}}; }
  static ProtocolPhase test(TestMode m) { return {Kind::kTest, {}, m}; }

  /// "training_horizontal", "calibration", "test", ...
  std::string name() const;
  bool operator==(const ProtocolPhase&) const = default;
};

/// Legal order: idle -> training(h) -> training(v) -> calibration -> test*.
/// idle -> calibration is allowed when a fitted decoder is supplied.
class ProtocolFsm {
 public:
  const ProtocolPhase& current() const { return current_; }
  static bool legal(const ProtocolPhase& from, const ProtocolPhase& to);
  /// Throws ProtocolTransitionError on an illegal move.
  void advance(const ProtocolPhase& next);

 private:
  ProtocolPhase current_;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

/// Normalized screen coordinates, [-1, 1] per component, center (0, 0).
struct CursorState {
  Vec2 position;
  Velocity velocity;
};

struct Target {
  Direction direction = Direction::kRight;
  Vec2 center;
  double radius = 0.15;
  double shown_at = 0.0;
};

struct TargetGeometry {
  double distance = 0.85;
  double radius = 0.15;
};

enum class Outcome { kHit, kTimeout };

struct TrialResult {
  Direction direction = Direction::kRight;
  Outcome outcome = Outcome::kTimeout;
  std::optional<double> time_to_target;  // present iff hit
  double wrong_direction_time = 0.0;
};

struct DirectionStats {
  int n_trials = 0;
  int n_hits = 0;
  double success_rate = 0.0;
  /// Sample standard deviation of per-run success rates (0 for one run).
  double success_sd = 0.0;
  /// Standard deviation of the per-trial hit indicator.
  double success_sd_trials = 0.0;
  std::optional<double> mean_time_to_target;
};

struct RunSummary {
  int n_runs = 0;
  DirectionStats overall;
  std::map<Direction, DirectionStats> per_direction;
};

void to_json(nlohmann::json& j, const DirectionStats& s);
void to_json(nlohmann::json& j, const RunSummary& s);
void to_json(nlohmann::json& j, const TrialResult& r);

/// Experimenter-driven reference cursor for a training trial.
struct ReferenceSeries {
  double rate_hz = 0.0;
  std::vector<Vec2> position;
  std::vector<Velocity> velocity;
};

struct ReferenceParams {
  double speed_rms = 0.15;     // stationary RMS of the velocity process
  double bandwidth_hz = 0.5;   // low-pass corner of the velocity process
  double bound = 0.9;          // reflection boundary
};

/// Smooth random 1D trajectory on `axis`: Gaussian noise through two
/// first-order low-passes at bandwidth_hz, integrated and reflected at
/// +/-bound. Deterministic in `seed`.
ReferenceSeries training_reference(Axis axis, double duration_s,
                                   std::uint64_t seed, double rate_hz,
                                   const ReferenceParams& params = {});

struct StepResult {
  CursorState state;
  bool fault = false;  // decoded velocity was non-finite; cursor frozen
};

/// Euler step with clamping to [-1, 1]; 1D modes pin the off-axis coordinate
/// to 0.
StepResult step_cursor(const CursorState& state, Velocity decoded, double dt,
                       double gain, TestMode mode);

std::vector<Direction> directions_for(TestMode mode);
Vec2 target_center(Direction d, double distance);

Target spawn_target(TestMode mode, std::mt19937_64& rng,
                    const TargetGeometry& geometry, double now_s);

/// nullopt while the trial is still running.
std::optional<TrialResult> check_trial(const CursorState& state,
                                       const Target& target, double elapsed_s,
                                       double timeout_s,
                                       double wrong_direction_time = 0.0);

/// Success statistics over one or more runs. Throws EmptySummaryError when no
/// trial is supplied.
RunSummary summarize(const std::vector<std::vector<TrialResult>>& runs);

/// Read-only view of the loop handed to observers and intent models.
struct SessionState {
  ProtocolPhase phase;
  double t_s = 0.0;
  CursorState cursor;
  std::optional<Target> target;
  int trial = -1;
  double trial_elapsed_s = 0.0;
  /// Experimenter cursor velocity during training trials.
  std::optional<Velocity> reference_velocity;
};

/// "100% (0%)", "83.3% (11.8%)".
std::string format_rate(double rate, double sd);

}  // namespace cortexloop

#endif  // CORTEXLOOP_TASK_HPP_
