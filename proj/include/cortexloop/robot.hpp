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

#ifndef CORTEXLOOP_ROBOT_HPP_
#define CORTEXLOOP_ROBOT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cortexloop/decoder.hpp"
#include "cortexloop/task.hpp"

namespace cortexloop {

enum class Gesture : std::uint8_t {
  kIdle = 0,
  kRightHand = 1,
  kLeftHand = 2,
  kBothHands = 3,
  kHeadShake = 4,
};

std::string to_string(Gesture g);
Gesture gesture_from_string(std::string_view s);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

inline constexpr Rgb kGreen{0, 255, 0};
inline constexpr Rgb kBlue{0, 0, 255};
inline constexpr Rgb kCyan{0, 255, 255};  // green + blue
inline constexpr Rgb kRed{255, 0, 0};

struct GestureCommand {
  Gesture gesture = Gesture::kIdle;
  Rgb eye;
  std::uint16_t seq = 0;
  bool operator==(const GestureCommand&) const = default;
};

/// Frozen direction -> (gesture, eye color) table.
struct CanonicalEntry {
  Gesture gesture;
  Rgb eye;
};
CanonicalEntry canonical(Direction d);

/// Position-sign mapping used when replaying recorded cursor positions.
/// |component| <= dead_zone yields IDLE with `held_eye`.
GestureCommand map_offline(const Vec2& position, TestMode mode, double dead_zone,
                           Rgb held_eye = {});

/// True iff the decoded velocity along the target's axis has the target's
/// sign and exceeds dead_zone in magnitude.
bool activation_gate(Velocity decoded, const Target& target, double dead_zone);

/// Canonical entry while active, otherwise IDLE holding `held_eye`.
GestureCommand map_online(const Target& target, bool active, Rgb held_eye = {});

inline constexpr std::uint8_t kMagic = 0xA5;
inline constexpr std::uint8_t kVersion = 0x01;
inline constexpr std::size_t kDatagramSize = 8;
using Datagram = std::array<std::uint8_t, kDatagramSize>;

/// [magic, version, gesture, r, g, b, seq_hi, seq_lo].
Datagram encode_command(const GestureCommand& cmd);
/// Throws DatagramError (framing, protocol or unknown-command).
GestureCommand decode_command(std::span<const std::uint8_t> bytes);

/// Stamps outgoing commands with a wrapping 16-bit sequence number.
class CommandSequencer {
 public:
  explicit CommandSequencer(std::uint16_t first = 0) : next_(first) {}
  GestureCommand stamp(GestureCommand cmd) {
    cmd.seq = next_++;
    return cmd;
  }

 private:
  std::uint16_t next_;
};

struct RobotState {
  Gesture gesture = Gesture::kIdle;
  Rgb eye;
  std::optional<std::uint16_t> last_seq;
  double last_update_s = 0.0;
  bool moving = false;
};

inline constexpr std::uint16_t kSeqWindow = 32;

/// True when `seq` is not newer than `last` inside the wrap window.
bool is_stale(std::uint16_t seq, std::uint16_t last);

/// Pure transition; stale commands leave the state untouched.
RobotState apply_command(const RobotState& state, const GestureCommand& cmd,
                         double now_s);

/// Software stand-in for the robot: folds decoded datagrams into a
/// RobotState, counts rejects, and logs every visible change as JSON Lines.
class VirtualActuator {
 public:
  VirtualActuator() = default;
  explicit VirtualActuator(const std::filesystem::path& log_path);

  void on_datagram(std::span<const std::uint8_t> bytes, double now_s);
  void on_command(const GestureCommand& cmd, double now_s);

  const RobotState& state() const { return state_; }
  long accepted() const { return accepted_; }
  long stale() const { return stale_; }
  long framing_errors() const { return framing_errors_; }
  long protocol_errors() const { return protocol_errors_; }
  long unknown_commands() const { return unknown_commands_; }
  long transitions() const { return transitions_; }

 private:
  RobotState state_;
  std::optional<std::ofstream> log_;
  long accepted_ = 0, stale_ = 0, framing_errors_ = 0, protocol_errors_ = 0,
       unknown_commands_ = 0, transitions_ = 0;
};

nlohmann::json robot_state_json(const RobotState& s);

/// One contiguous run of active ticks inside a trial, [start_s, end_s).
struct ActivationSegment {
  double start_s = 0.0;
  double end_s = 0.0;
};

/// Collapses per-tick gate decisions into segments; `tick_s` is the tick
/// period and `t0_s` the time of the first tick.
std::vector<ActivationSegment> activation_timeline(const std::vector<bool>& active,
                                                   double t0_s, double tick_s);
/// Inactive stretches bounded on both sides by active segments.
int activation_gaps(const std::vector<ActivationSegment>& segments);
/// Fraction of ticks that were active.
double duty_cycle(const std::vector<bool>& active);

}  // namespace cortexloop

#endif  // CORTEXLOOP_ROBOT_HPP_
