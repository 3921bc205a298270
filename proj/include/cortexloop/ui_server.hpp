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

#ifndef CORTEXLOOP_UI_SERVER_HPP_
#define CORTEXLOOP_UI_SERVER_HPP_

#include <memory>
#include <string_view>
#include <variant>

#include "cortexloop/robot_udp.hpp"
#include "cortexloop/session.hpp"

namespace cortexloop {

/// A decoded inbound UI message.
using UiInbound = std::variant<Velocity, ControlAction>;

/// Parses {"type":"intent","u":..,"v":..} or {"type":"control","action":..}.
/// Throws ParseError for anything else, including non-finite intent.
UiInbound parse_ui_message(std::string_view text);

/// WebSocket endpoint for browser consoles. Runs its own I/O thread; every
/// connected client receives each published message. Intent messages go
/// straight to the installed sink, controls queue up FIFO for the loop.
/// Malformed input gets {"type":"error","message":...} back and is dropped.
class UiServer : public UiChannel {
 public:
  explicit UiServer(const Endpoint& listen);
  ~UiServer() override;
  UiServer(const UiServer&) = delete;
  UiServer& operator=(const UiServer&) = delete;

  /// Bound port (useful with port 0).
  unsigned short port() const;
  std::size_t clients() const;
  long rejected() const;

  void publish(const nlohmann::json& message) override;
  std::optional<ControlAction> poll_control() override;
  void set_intent_sink(std::function<void(Velocity)> sink) override;

  struct Impl;

 private:
  std::shared_ptr<Impl> impl_;
};

}  // namespace cortexloop

#endif  // CORTEXLOOP_UI_SERVER_HPP_
