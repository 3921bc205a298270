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

#ifndef CORTEXLOOP_ROBOT_UDP_HPP_
#define CORTEXLOOP_ROBOT_UDP_HPP_

#include <array>
#include <chrono>
#include <cstdint>
#include <string>

#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/udp.hpp>

#include "cortexloop/robot.hpp"

namespace cortexloop {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 9750;
  std::string str() const { return host + ":" + std::to_string(port); }
};

/// Parses "HOST:PORT"; throws ConfigError.
Endpoint parse_endpoint(const std::string& text);

/// Fire-and-forget datagram sender for gesture commands.
class UdpCommandSender {
 public:
  explicit UdpCommandSender(const Endpoint& robot);
  void send(const GestureCommand& cmd);
  long sent() const { return sent_; }

 private:
  boost::asio::io_context io_;
  boost::asio::ip::udp::socket socket_;
  boost::asio::ip::udp::endpoint remote_;
  long sent_ = 0;
};

/// Single-threaded listener feeding a VirtualActuator. run() blocks until
/// stop() is called from any thread.
class UdpActuatorServer {
 public:
  UdpActuatorServer(const Endpoint& listen, VirtualActuator& actuator);

  std::uint16_t port() const;
  void run();
  void stop();

 private:
  void receive();

  VirtualActuator& actuator_;
  boost::asio::io_context io_;
  boost::asio::ip::udp::socket socket_;
  boost::asio::ip::udp::endpoint sender_;
  std::array<std::uint8_t, 64> buffer_{};
  std::chrono::steady_clock::time_point start_;
};

}  // namespace cortexloop

#endif  // CORTEXLOOP_ROBOT_UDP_HPP_
