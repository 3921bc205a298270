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

#ifndef CORTEXLOOP_TESTS_WS_CLIENT_HPP_
#define CORTEXLOOP_TESTS_WS_CLIENT_HPP_

#include <chrono>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

namespace cortexloop::testing {

/// Blocking WebSocket client that collects every inbound text message on a
/// reader thread, stamped with the steady-clock arrival time.
class WsClient {
 public:
  using Clock = std::chrono::steady_clock;
  struct Message {
    Clock::time_point at;
    nlohmann::json body;
  };

  explicit WsClient(unsigned short port) : ws_(ioc_) {
    namespace net = boost::asio;
    net::ip::tcp::resolver resolver(ioc_);
    net::connect(ws_.next_layer(), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/");
    reader_ = std::thread([this] { read_loop(); });
  }
  ~WsClient() {
    boost::system::error_code ec;
    ws_.next_layer().shutdown(boost::asio::ip::tcp::socket::shutdown_both, ec);
    ws_.next_layer().close(ec);
    if (reader_.joinable()) reader_.join();
  }
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  void send(const std::string& text) {
    std::lock_guard lock(write_mu_);
    ws_.text(true);
    ws_.write(boost::asio::buffer(text));
  }

  std::vector<Message> messages() const {
    std::lock_guard lock(mu_);
    return messages_;
  }

  /// Polls until a message of `type` arrives or `timeout` elapses.
  bool wait_for(const std::string& type, std::chrono::milliseconds timeout) const {
    const auto deadline = Clock::now() + timeout;
    while (Clock::now() < deadline) {
      {
        std::lock_guard lock(mu_);
        for (const auto& m : messages_)
          if (m.body.value("type", "") == type) return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    return false;
  }

 private:
  void read_loop() {
    boost::beast::flat_buffer buf;
    boost::system::error_code ec;
    while (true) {
      ws_.read(buf, ec);
      if (ec) return;
      auto body = nlohmann::json::parse(boost::beast::buffers_to_string(buf.data()), nullptr,
                                        false);
      buf.consume(buf.size());
      std::lock_guard lock(mu_);
      messages_.push_back({Clock::now(), std::move(body)});
    }
  }

  boost::asio::io_context ioc_;
  boost::beast::websocket::stream<boost::asio::ip::tcp::socket> ws_;
  std::thread reader_;
  mutable std::mutex mu_;
  std::mutex write_mu_;
  std::vector<Message> messages_;
};

}  // namespace cortexloop::testing

#endif  // CORTEXLOOP_TESTS_WS_CLIENT_HPP_
