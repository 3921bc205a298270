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

#ifndef CORTEXLOOP_EVENTS_HPP_
#define CORTEXLOOP_EVENTS_HPP_

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cortexloop {

enum class EventType {
  kPhaseStart,
  kTrialStart,
  kTargetShown,
  kHit,
  kTimeout,
  kTrialEnd,
  kFault,
};

std::string to_string(EventType t);
/// Throws ParseError for anything outside the frozen set.
EventType event_type_from_string(std::string_view s);

/// One line of the session event log. `payload` holds every key other than
/// "t_s" and "type".
struct Event {
  double t_s = 0.0;
  EventType type = EventType::kFault;
  nlohmann::json payload = nlohmann::json::object();

  nlohmann::json to_json() const;
  static Event from_json(const nlohmann::json& j);
  bool operator==(const Event&) const = default;
};

class EventLogWriter {
 public:
  explicit EventLogWriter(const std::filesystem::path& path);
  void write(const Event& e);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

/// Throws ParseError (with line number) on malformed lines or unknown types.
std::vector<Event> read_event_log(const std::filesystem::path& path);

}  // namespace cortexloop

#endif  // CORTEXLOOP_EVENTS_HPP_
