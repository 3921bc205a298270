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

#include "cortexloop/robot_udp.hpp"

#include <boost/asio/buffer.hpp>
#include <boost/asio/ip/address.hpp>
#include <boost/asio/post.hpp>

#include "cortexloop/errors.hpp"

namespace cortexloop {

namespace asio = boost::asio;
using asio::ip::udp;

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
    throw ConfigError("endpoint must look like HOST:PORT, got '" + text + "'");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    const int port = std::stoi(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port < 0 || port > 65535)
      throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw ConfigError("invalid port in endpoint '" + text + "'");
  }
  return ep;
}

namespace {

udp::endpoint resolve(asio::io_context& io, const Endpoint& ep) {
  boost::system::error_code ec;
  const auto addr = asio::ip::make_address(ep.host, ec);
  if (!ec) return {addr, ep.port};
  udp::resolver resolver(io);
  const auto results = resolver.resolve(udp::v4(), ep.host, std::to_string(ep.port), ec);
  if (ec || results.empty())
    throw ConfigError("cannot resolve robot host '" + ep.host + "'");
  return *results.begin();
}

}  // namespace

UdpCommandSender::UdpCommandSender(const Endpoint& robot)
    : socket_(io_), remote_(resolve(io_, robot)) {
  socket_.open(remote_.protocol());
}

void UdpCommandSender::send(const GestureCommand& cmd) {
  const Datagram bytes = encode_command(cmd);
  boost::system::error_code ec;
  socket_.send_to(asio::buffer(bytes), remote_, 0, ec);
  // Loss is tolerated; the next tick resends the current command.
  if (!ec) ++sent_;
}

UdpActuatorServer::UdpActuatorServer(const Endpoint& listen,
                                     VirtualActuator& actuator)
    : actuator_(actuator), socket_(io_) {
  const auto ep = resolve(io_, listen);
  boost::system::error_code ec;
  socket_.open(ep.protocol(), ec);
  if (!ec) socket_.bind(ep, ec);
  if (ec) throw RuntimeFault("cannot bind actuator to " + listen.str() + ": " +
                             ec.message());
  start_ = std::chrono::steady_clock::now();
  receive();
}

std::uint16_t UdpActuatorServer::port() const {
  return socket_.local_endpoint().port();
}

void UdpActuatorServer::receive() {
  socket_.async_receive_from(
      asio::buffer(buffer_), sender_,
      [this](const boost::system::error_code& ec, std::size_t n) {
        if (ec == asio::error::operation_aborted) return;
        if (!ec) {
          const double now = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
          actuator_.on_datagram({buffer_.data(), n}, now);
        }
        receive();
      });
}

void UdpActuatorServer::run() { io_.run(); }

void UdpActuatorServer::stop() {
  asio::post(io_, [this] {
    boost::system::error_code ec;
    socket_.close(ec);
  });
  io_.stop();
}

}  // namespace cortexloop
