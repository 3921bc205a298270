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

#include "cortexloop/ui_server.hpp"

#include <atomic>
#include <cmath>
#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "cortexloop/errors.hpp"

namespace cortexloop {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using json = nlohmann::json;

UiInbound parse_ui_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    throw ParseError("message is not JSON", 0);
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ParseError("message needs a string \"type\"", 0);
  const auto type = j["type"].get<std::string>();
  if (type == "intent") {
    if (!j.contains("u") || !j.contains("v") || !j["u"].is_number() || !j["v"].is_number())
      throw ParseError("intent needs numeric u and v", 0);
    const Velocity v{j["u"].get<double>(), j["v"].get<double>()};
    if (!std::isfinite(v.u) || !std::isfinite(v.v))
      throw ParseError("intent must be finite", 0);
    return v;
  }
  if (type == "control") {
    if (!j.contains("action") || !j["action"].is_string())
      throw ParseError("control needs a string action", 0);
    try {
      return control_action_from_string(j["action"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), 0);
    }
  }
  throw ParseError("unknown message type '" + type + "'", 0);
}

namespace {

class Client;

}  // namespace

struct UiServer::Impl : std::enable_shared_from_this<UiServer::Impl> {
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  std::thread thread;
  std::set<std::shared_ptr<Client>> clients;  // io thread only
  std::atomic<std::size_t> client_count{0};
  std::atomic<long> rejected{0};

  std::mutex mu;
  std::deque<ControlAction> controls;
  std::function<void(Velocity)> intent_sink;

  void accept();
  void handle(const std::string& text, Client& from);
  void drop(const std::shared_ptr<Client>& c) {
    clients.erase(c);
    client_count = clients.size();
  }
};

namespace {

class Client : public std::enable_shared_from_this<Client> {
 public:
  static constexpr std::size_t kMaxQueue = 256;

  Client(tcp::socket socket, std::weak_ptr<UiServer::Impl> server)
      : ws_(std::move(socket)), server_(std::move(server)) {}

  void start() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) return self->close();
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> msg) {
    if (queue_.size() >= kMaxQueue) return;  // slow client: drop rather than stall
    queue_.push_back(std::move(msg));
    if (queue_.size() == 1) write();
  }

  void shutdown() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const auto text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      if (auto server = self->server_.lock()) server->handle(text, *self);
      self->read();
    });
  }

  void write() {
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->close();
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    if (auto server = server_.lock()) server->drop(shared_from_this());
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::weak_ptr<UiServer::Impl> server_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool closed_ = false;
};

}  // namespace

void UiServer::Impl::accept() {
  acceptor.async_accept([self = shared_from_this()](beast::error_code ec, tcp::socket s) {
    if (ec) return;  // acceptor closed
    auto client = std::make_shared<Client>(std::move(s), self);
    self->clients.insert(client);
    self->client_count = self->clients.size();
    client->start();
    self->accept();
  });
}

void UiServer::Impl::handle(const std::string& text, Client& from) {
  try {
    const auto msg = parse_ui_message(text);
    if (const auto* v = std::get_if<Velocity>(&msg)) {
      std::function<void(Velocity)> sink;
      {
        std::lock_guard lock(mu);
        sink = intent_sink;
      }
      if (sink) sink(*v);
    } else {
      std::lock_guard lock(mu);
      controls.push_back(std::get<ControlAction>(msg));
    }
  } catch (const ParseError& e) {
    ++rejected;
    from.send(std::make_shared<const std::string>(
        json{{"type", "error"}, {"message", e.what()}}.dump()));
  }
}

UiServer::UiServer(const Endpoint& listen) : impl_(std::make_shared<Impl>()) {
  beast::error_code ec;
  const auto address = asio::ip::make_address(listen.host, ec);
  if (ec) throw ConfigError("bad listen address '" + listen.host + "'");
  const tcp::endpoint ep(address, listen.port);
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(asio::socket_base::max_listen_connections, ec);
  if (ec)
    throw RuntimeFault("cannot listen on " + listen.host + ":" +
                       std::to_string(listen.port) + ": " + ec.message());
  impl_->accept();
  impl_->thread = std::thread([impl = impl_] { impl->ioc.run(); });
}

UiServer::~UiServer() {
  // Leave queued writes (the final summary, typically) a moment to drain.
  if (impl_->client_count > 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  beast::error_code ec;
  impl_->acceptor.close(ec);
  for (const auto& c : impl_->clients) c->shutdown();
  // Run the aborted handlers so they release their references.
  impl_->ioc.restart();
  impl_->ioc.poll();
  impl_->clients.clear();
}

unsigned short UiServer::port() const { return impl_->acceptor.local_endpoint().port(); }
std::size_t UiServer::clients() const { return impl_->client_count; }
long UiServer::rejected() const { return impl_->rejected; }

void UiServer::publish(const json& message) {
  auto text = std::make_shared<const std::string>(message.dump());
  asio::post(impl_->ioc, [impl = impl_, text] {
    for (const auto& c : impl->clients) c->send(text);
  });
}

std::optional<ControlAction> UiServer::poll_control() {
  std::lock_guard lock(impl_->mu);
  if (impl_->controls.empty()) return std::nullopt;
  const auto a = impl_->controls.front();
  impl_->controls.pop_front();
  return a;
}

void UiServer::set_intent_sink(std::function<void(Velocity)> sink) {
  std::lock_guard lock(impl_->mu);
  impl_->intent_sink = std::move(sink);
}

}  // namespace cortexloop
