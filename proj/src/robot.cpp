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

#include "cortexloop/robot.hpp"

#include <cmath>

#include "cortexloop/errors.hpp"

namespace cortexloop {

std::string to_string(Gesture g) {
  switch (g) {
    case Gesture::kIdle: return "IDLE";
    case Gesture::kRightHand: return "RIGHT_HAND";
    case Gesture::kLeftHand: return "LEFT_HAND";
    case Gesture::kBothHands: return "BOTH_HANDS";
    case Gesture::kHeadShake: return "HEAD_SHAKE";
  }
  return "?";
}

Gesture gesture_from_string(std::string_view s) {
  for (auto g : {Gesture::kIdle, Gesture::kRightHand, Gesture::kLeftHand,
                 Gesture::kBothHands, Gesture::kHeadShake})
    if (to_string(g) == s) return g;
  throw ConfigError("unknown gesture '" + std::string(s) + "'");
}

CanonicalEntry canonical(Direction d) {
  switch (d) {
    case Direction::kRight: return {Gesture::kRightHand, kGreen};
    case Direction::kLeft: return {Gesture::kLeftHand, kBlue};
    case Direction::kTop: return {Gesture::kBothHands, kCyan};
    case Direction::kBottom: return {Gesture::kHeadShake, kRed};
  }
  return {Gesture::kIdle, {}};
}

GestureCommand map_offline(const Vec2& position, TestMode mode, double dead_zone,
                           Rgb held_eye) {
  double c = 0.0;
  Direction pos{}, neg{};
  switch (mode) {
    case TestMode::kHorizontal1D:
      c = position.x;
      pos = Direction::kRight;
      neg = Direction::kLeft;
      break;
    case TestMode::kVertical1D:
      c = position.y;
      pos = Direction::kTop;
      neg = Direction::kBottom;
      break;
    case TestMode::kFull2D:
      throw ConfigError("offline mapping is defined for 1D modes only");
  }
  if (std::abs(c) <= dead_zone) return {Gesture::kIdle, held_eye, 0};
  const auto e = canonical(c > 0.0 ? pos : neg);
  return {e.gesture, e.eye, 0};
}

bool activation_gate(Velocity decoded, const Target& target, double dead_zone) {
  const double along =
      axis_of(target.direction) == Axis::kHorizontal ? decoded.u : decoded.v;
  return sign_of(target.direction) * along > dead_zone;
}

GestureCommand map_online(const Target& target, bool active, Rgb held_eye) {
  if (!active) return {Gesture::kIdle, held_eye, 0};
  const auto e = canonical(target.direction);
  return {e.gesture, e.eye, 0};
}

Datagram encode_command(const GestureCommand& cmd) {
  return {kMagic,
          kVersion,
          static_cast<std::uint8_t>(cmd.gesture),
          cmd.eye.r,
          cmd.eye.g,
          cmd.eye.b,
          static_cast<std::uint8_t>(cmd.seq >> 8),
          static_cast<std::uint8_t>(cmd.seq & 0xFF)};
}

GestureCommand decode_command(std::span<const std::uint8_t> bytes) {
  using K = DatagramError::Kind;
  if (bytes.size() != kDatagramSize)
    throw DatagramError(K::kFraming, "datagram has " +
                                         std::to_string(bytes.size()) +
                                         " bytes, expected 8");
  if (bytes[0] != kMagic) throw DatagramError(K::kProtocol, "bad magic byte");
  if (bytes[1] != kVersion)
    throw DatagramError(K::kProtocol,
                        "unsupported version " + std::to_string(bytes[1]));
  if (bytes[2] > static_cast<std::uint8_t>(Gesture::kHeadShake))
    throw DatagramError(K::kUnknownCommand,
                        "unknown gesture id " + std::to_string(bytes[2]));
  GestureCommand cmd;
  cmd.gesture = static_cast<Gesture>(bytes[2]);
  cmd.eye = {bytes[3], bytes[4], bytes[5]};
  cmd.seq = static_cast<std::uint16_t>((bytes[6] << 8) | bytes[7]);
  return cmd;
}

bool is_stale(std::uint16_t seq, std::uint16_t last) {
  const auto behind = static_cast<std::uint16_t>(last - seq);
  return behind < kSeqWindow;
}

RobotState apply_command(const RobotState& state, const GestureCommand& cmd,
                         double now_s) {
  if (state.last_seq && is_stale(cmd.seq, *state.last_seq)) return state;
  RobotState next;
  next.gesture = cmd.gesture;
  next.eye = cmd.eye;
  next.last_seq = cmd.seq;
  next.last_update_s = now_s;
  next.moving = cmd.gesture != Gesture::kIdle;
  return next;
}

VirtualActuator::VirtualActuator(const std::filesystem::path& log_path)
    : log_(std::in_place, log_path) {
  if (!*log_) throw RuntimeFault("cannot open actuator log " + log_path.string());
}

nlohmann::json robot_state_json(const RobotState& s) {
  return {{"gesture", to_string(s.gesture)},
          {"eye_rgb", {s.eye.r, s.eye.g, s.eye.b}},
          {"moving", s.moving}};
}

void VirtualActuator::on_datagram(std::span<const std::uint8_t> bytes,
                                  double now_s) {
  try {
    on_command(decode_command(bytes), now_s);
  } catch (const DatagramError& e) {
    switch (e.kind()) {
      case DatagramError::Kind::kFraming: ++framing_errors_; break;
      case DatagramError::Kind::kProtocol: ++protocol_errors_; break;
      case DatagramError::Kind::kUnknownCommand: ++unknown_commands_; break;
    }
  }
}

void VirtualActuator::on_command(const GestureCommand& cmd, double now_s) {
  const RobotState next = apply_command(state_, cmd, now_s);
  if (next.last_seq == state_.last_seq && state_.last_seq) {
    ++stale_;
    return;
  }
  ++accepted_;
  const bool visible = next.gesture != state_.gesture || !(next.eye == state_.eye);
  state_ = next;
  if (!visible) return;
  ++transitions_;
  if (log_) {
    *log_ << nlohmann::json{{"t_s", now_s},
                            {"gesture", to_string(next.gesture)},
                            {"eye_rgb", {next.eye.r, next.eye.g, next.eye.b}},
                            {"seq", cmd.seq}}
                 .dump()
          << '\n';
    log_->flush();
  }
}

std::vector<ActivationSegment> activation_timeline(const std::vector<bool>& active,
                                                   double t0_s, double tick_s) {
  std::vector<ActivationSegment> out;
  for (std::size_t i = 0; i < active.size(); ++i) {
    if (!active[i]) continue;
    const double t = t0_s + static_cast<double>(i) * tick_s;
    if (i > 0 && active[i - 1])
      out.back().end_s = t + tick_s;
    else
      out.push_back({t, t + tick_s});
  }
  return out;
}

int activation_gaps(const std::vector<ActivationSegment>& segments) {
  return segments.empty() ? 0 : static_cast<int>(segments.size()) - 1;
}

double duty_cycle(const std::vector<bool>& active) {
  if (active.empty()) return 0.0;
  long n = 0;
  for (bool a : active) n += a;
  return static_cast<double>(n) / static_cast<double>(active.size());
}

}  // namespace cortexloop
