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

#include <chrono>
#include <random>
#include <thread>

#include <boost/asio.hpp>
#include <gtest/gtest.h>

#include "cortexloop/errors.hpp"
#include "cortexloop/robot.hpp"
#include "cortexloop/robot_udp.hpp"
#include "support.hpp"

namespace cortexloop {
namespace {

Datagram bytes(std::initializer_list<int> v) {
  Datagram d{};
  std::size_t i = 0;
  for (int b : v) d[i++] = static_cast<std::uint8_t>(b);
  return d;
}

DatagramError::Kind decode_error(std::span<const std::uint8_t> data) {
  try {
    decode_command(data);
  } catch (const DatagramError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "datagram accepted";
  return DatagramError::Kind::kFraming;
}

Target target(Direction d) { return {d, target_center(d, 0.85), 0.15, 0.0}; }

TEST(Codec, DocumentedLayouts) {
  EXPECT_EQ(encode_command({Gesture::kRightHand, kGreen, 1}),
            bytes({0xA5, 0x01, 0x01, 0x00, 0xFF, 0x00, 0x00, 0x01}));
  EXPECT_EQ(encode_command({Gesture::kHeadShake, kRed, 65535}),
            bytes({0xA5, 0x01, 0x04, 0xFF, 0x00, 0x00, 0xFF, 0xFF}));
  const auto idle = decode_command(bytes({0xA5, 0x01, 0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(idle, (GestureCommand{Gesture::kIdle, {0, 0, 0}, 0}));
}

TEST(Codec, RandomRoundTrip) {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 100000; ++i) {
    const GestureCommand cmd{static_cast<Gesture>(rng() % 5),
                             {static_cast<std::uint8_t>(rng()), static_cast<std::uint8_t>(rng()),
                              static_cast<std::uint8_t>(rng())},
                             static_cast<std::uint16_t>(rng())};
    ASSERT_EQ(decode_command(encode_command(cmd)), cmd);
  }
}

TEST(Codec, RejectsCorruptions) {
  using K = DatagramError::Kind;
  std::mt19937_64 rng(7);
  for (int i = 0; i < 20000; ++i) {
    auto d = encode_command({static_cast<Gesture>(rng() % 5), kCyan, static_cast<std::uint16_t>(rng())});
    switch (i % 4) {
      case 0: {
        auto m = static_cast<std::uint8_t>(rng());
        if (m == kMagic) ++m;
        d[0] = m;
        ASSERT_EQ(decode_error(d), K::kProtocol);
        break;
      }
      case 1: {
        auto v = static_cast<std::uint8_t>(rng());
        if (v == kVersion) ++v;
        d[1] = v;
        ASSERT_EQ(decode_error(d), K::kProtocol);
        break;
      }
      case 2: {
        std::vector<std::uint8_t> resized(d.begin(), d.end());
        std::size_t len = rng() % 17;
        if (len == 8) len = 9;
        resized.resize(len, 0xA5);
        ASSERT_EQ(decode_error(resized), K::kFraming);
        break;
      }
      case 3:
        d[2] = static_cast<std::uint8_t>(5 + rng() % 251);
        ASSERT_EQ(decode_error(d), K::kUnknownCommand);
        break;
    }
  }
  const std::vector<std::uint8_t> seven(7, 0);
  EXPECT_EQ(decode_error(seven), K::kFraming);
  EXPECT_EQ(decode_error(bytes({0xA5, 0x02, 0, 0, 0, 0, 0, 0})), K::kProtocol);
}

TEST(Mapping, CanonicalTable) {
  EXPECT_EQ(canonical(Direction::kRight).gesture, Gesture::kRightHand);
  EXPECT_EQ(canonical(Direction::kRight).eye, (Rgb{0, 255, 0}));
  EXPECT_EQ(canonical(Direction::kLeft).gesture, Gesture::kLeftHand);
  EXPECT_EQ(canonical(Direction::kLeft).eye, (Rgb{0, 0, 255}));
  EXPECT_EQ(canonical(Direction::kTop).gesture, Gesture::kBothHands);
  EXPECT_EQ(canonical(Direction::kTop).eye, (Rgb{0, 255, 255}));
  EXPECT_EQ(canonical(Direction::kBottom).gesture, Gesture::kHeadShake);
  EXPECT_EQ(canonical(Direction::kBottom).eye, (Rgb{255, 0, 0}));
}

TEST(Mapping, OnlineExhaustive) {
  const Rgb held{10, 20, 30};
  for (Direction d : {Direction::kRight, Direction::kLeft, Direction::kTop, Direction::kBottom}) {
    const auto on = map_online(target(d), true, held);
    EXPECT_EQ(on.gesture, canonical(d).gesture);
    EXPECT_EQ(on.eye, canonical(d).eye);
    const auto off = map_online(target(d), false, held);
    EXPECT_EQ(off.gesture, Gesture::kIdle);
    EXPECT_EQ(off.eye, held);
  }
}

TEST(Mapping, Offline) {
  EXPECT_EQ(map_offline({0.4, 0}, TestMode::kHorizontal1D, 0.02).gesture, Gesture::kRightHand);
  EXPECT_EQ(map_offline({0.4, 0}, TestMode::kHorizontal1D, 0.02).eye, kGreen);
  EXPECT_EQ(map_offline({-0.4, 0}, TestMode::kHorizontal1D, 0.02).eye, kBlue);
  EXPECT_EQ(map_offline({0, -0.6}, TestMode::kVertical1D, 0.02).gesture, Gesture::kHeadShake);
  EXPECT_EQ(map_offline({0, -0.6}, TestMode::kVertical1D, 0.02).eye, kRed);
  EXPECT_EQ(map_offline({0, 0.6}, TestMode::kVertical1D, 0.02).eye, kCyan);
  const auto idle = map_offline({0.001, 0}, TestMode::kHorizontal1D, 0.01, kBlue);
  EXPECT_EQ(idle.gesture, Gesture::kIdle);
  EXPECT_EQ(idle.eye, kBlue);
  EXPECT_THROW(map_offline({0.5, 0.5}, TestMode::kFull2D, 0.02), ConfigError);
}

TEST(Gate, DirectionAndDeadZone) {
  EXPECT_TRUE(activation_gate({0.3, 0.9}, target(Direction::kRight), 0.02));
  EXPECT_FALSE(activation_gate({-0.3, 0.0}, target(Direction::kRight), 0.02));
  EXPECT_FALSE(activation_gate({0.5, 0.005}, target(Direction::kTop), 0.02));
  EXPECT_TRUE(activation_gate({0.0, -0.5}, target(Direction::kBottom), 0.02));
}

TEST(Gate, OnlineNeverLeavesCanonicalTable) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  Rgb held;
  for (int i = 0; i < 10000; ++i) {
    const auto d = static_cast<Direction>(rng() % 4);
    const auto cmd = map_online(target(d), activation_gate({g(rng), g(rng)}, target(d), 0.02), held);
    if (cmd.gesture == Gesture::kIdle) {
      ASSERT_EQ(cmd.eye, held);
    } else {
      ASSERT_EQ(cmd.gesture, canonical(d).gesture);
      ASSERT_EQ(cmd.eye, canonical(d).eye);
    }
    held = cmd.eye;
  }
}

TEST(Actuator, AppliesInOrderAndIgnoresStale) {
  RobotState s;
  s = apply_command(s, {Gesture::kRightHand, kGreen, 1}, 0.1);
  EXPECT_TRUE(s.moving);
  EXPECT_EQ(s.eye, kGreen);
  const auto before = s;
  s = apply_command(s, {Gesture::kLeftHand, kBlue, 0}, 0.2);
  EXPECT_EQ(s.gesture, before.gesture);
  EXPECT_EQ(s.last_update_s, before.last_update_s);
}

TEST(Actuator, SequenceWrapWindow) {
  EXPECT_TRUE(is_stale(65535, 0));   // one behind across the wrap
  EXPECT_FALSE(is_stale(0, 65535));  // one ahead across the wrap
  EXPECT_TRUE(is_stale(5, 5));
  EXPECT_TRUE(is_stale(100 - 31, 100));
  EXPECT_FALSE(is_stale(100 - 32, 100));
}

TEST(Actuator, AlternatingStreamTogglesMotion) {
  VirtualActuator act;
  CommandSequencer seq;
  std::vector<bool> moving;
  for (int i = 0; i < 10; ++i) {
    act.on_command(seq.stamp(map_online(target(Direction::kRight), i % 2 == 0, act.state().eye)), i);
    moving.push_back(act.state().moving);
  }
  for (int i = 0; i < 10; ++i) EXPECT_EQ(moving[i], i % 2 == 0);
  EXPECT_EQ(act.state().eye, kGreen);  // held through IDLE
  EXPECT_EQ(act.transitions(), 10);
}

TEST(Actuator, PureFoldOverStream) {
  std::mt19937_64 rng(1);
  std::vector<Datagram> stream;
  for (int i = 0; i < 2000; ++i) {
    auto d = encode_command({static_cast<Gesture>(rng() % 5), kRed, static_cast<std::uint16_t>(i + (rng() % 40) - 20)});
    if (rng() % 10 == 0) d[0] = 0;
    stream.push_back(d);
  }
  VirtualActuator a, b;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    a.on_datagram(stream[i], static_cast<double>(i));
    b.on_datagram(stream[i], static_cast<double>(i));
    ASSERT_EQ(a.state().gesture, b.state().gesture);
    ASSERT_EQ(a.state().last_seq, b.state().last_seq);
  }
  EXPECT_GT(a.protocol_errors(), 0);
  EXPECT_GT(a.stale(), 0);
  EXPECT_EQ(a.accepted() + a.stale() + a.protocol_errors(), 2000);
}

TEST(Actuator, LogsVisibleChanges) {
  testing::TempDir dir("actuator");
  {
    VirtualActuator act(dir / "robot.jsonl");
    act.on_command({Gesture::kRightHand, kGreen, 0}, 1.0);
    act.on_command({Gesture::kRightHand, kGreen, 1}, 1.0625);  // no visible change
    act.on_command({Gesture::kIdle, kGreen, 2}, 1.125);
  }
  EXPECT_EQ(testing::slurp(dir / "robot.jsonl"),
            "{\"eye_rgb\":[0,255,0],\"gesture\":\"RIGHT_HAND\",\"seq\":0,\"t_s\":1.0}\n"
            "{\"eye_rgb\":[0,255,0],\"gesture\":\"IDLE\",\"seq\":2,\"t_s\":1.125}\n");
}

TEST(Activation, TwoWrongDirectionIntervalsGiveTwoGaps) {
  std::vector<bool> active;
  for (int i = 0; i < 40; ++i) {
    const bool wrong = (i >= 10 && i < 14) || (i >= 25 && i < 30);
    active.push_back(activation_gate({wrong ? -0.3 : 0.3, 0.0}, target(Direction::kRight), 0.02));
  }
  const auto segs = activation_timeline(active, 2.0, 0.0625);
  ASSERT_EQ(segs.size(), 3u);
  EXPECT_EQ(activation_gaps(segs), 2);
  EXPECT_DOUBLE_EQ(segs[0].start_s, 2.0);
  EXPECT_DOUBLE_EQ(segs[0].end_s, 2.0 + 10 * 0.0625);
  EXPECT_DOUBLE_EQ(segs[1].start_s, 2.0 + 14 * 0.0625);
  EXPECT_DOUBLE_EQ(duty_cycle(active), 31.0 / 40.0);
}

TEST(Activation, DutyCycleEqualsCorrectDirectionFraction) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g(0.1, 0.3);
  std::vector<bool> active;
  long correct = 0;
  for (int i = 0; i < 5000; ++i) {
    const double u = g(rng);
    active.push_back(activation_gate({u, 0}, target(Direction::kRight), 0.0));
    correct += u > 0.0;
  }
  EXPECT_DOUBLE_EQ(duty_cycle(active), correct / 5000.0);
  EXPECT_EQ(activation_gaps({}), 0);
}

TEST(Endpoint, Parse) {
  const auto e = parse_endpoint("10.0.0.2:9000");
  EXPECT_EQ(e.host, "10.0.0.2");
  EXPECT_EQ(e.port, 9000);
  EXPECT_THROW(parse_endpoint("nope"), ConfigError);
  EXPECT_THROW(parse_endpoint("host:99999"), ConfigError);
}

TEST(Udp, LoopbackDeliversCommandsAndCountsGarbage) {
  VirtualActuator act;
  UdpActuatorServer server({"127.0.0.1", 0}, act);
  std::thread io([&] { server.run(); });
  UdpCommandSender sender({"127.0.0.1", server.port()});
  CommandSequencer seq;
  sender.send(seq.stamp({Gesture::kLeftHand, kBlue, 0}));
  sender.send(seq.stamp({Gesture::kBothHands, kCyan, 0}));
  {
    boost::asio::io_context ioc;
    boost::asio::ip::udp::socket sock(ioc, boost::asio::ip::udp::v4());
    const std::array<std::uint8_t, 3> junk{1, 2, 3};
    sock.send_to(boost::asio::buffer(junk),
                 {boost::asio::ip::make_address("127.0.0.1"), server.port()});
  }
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
  while ((act.accepted() < 2 || act.framing_errors() < 1) &&
         std::chrono::steady_clock::now() < deadline)
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  server.stop();
  io.join();
  EXPECT_EQ(act.accepted(), 2);
  EXPECT_EQ(act.framing_errors(), 1);
  EXPECT_EQ(act.state().gesture, Gesture::kBothHands);
  EXPECT_EQ(sender.sent(), 2);
}

}  // namespace
}  // namespace cortexloop
