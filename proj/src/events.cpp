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

#include "cortexloop/events.hpp"

#include <array>
#include <utility>

#include "cortexloop/errors.hpp"

namespace cortexloop {

namespace {

constexpr std::array<std::pair<EventType, std::string_view>, 7> kNames{{
    {EventType::kPhaseStart, "phase_start"},
    {EventType::kTrialStart, "trial_start"},
    {EventType::kTargetShown, "target_shown"},
    {EventType::kHit, "hit"},
    {EventType::kTimeout, "timeout"},
    {EventType::kTrialEnd, "trial_end"},
    {EventType::kFault, "fault"},
}};

}  // namespace

std::string to_string(EventType t) {
  for (const auto& [type, name] : kNames)
    if (type == t) return std::string(name);
  return "fault";
}

EventType event_type_from_string(std::string_view s) {
  for (const auto& [type, name] : kNames)
    if (name == s) return type;
  throw ParseError("unknown event type '" + std::string(s) + "'");
}

nlohmann::json Event::to_json() const {
  nlohmann::json j = {{"t_s", t_s}, {"type", to_string(type)}};
  for (const auto& [k, v] : payload.items()) j[k] = v;
  return j;
}

Event Event::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("t_s") || !j.contains("type") ||
      !j.at("t_s").is_number() || !j.at("type").is_string())
    throw ParseError("event needs numeric t_s and string type");
  Event e;
  e.t_s = j.at("t_s").get<double>();
  e.type = event_type_from_string(j.at("type").get<std::string>());
  for (const auto& [k, v] : j.items())
    if (k != "t_s" && k != "type") e.payload[k] = v;
  return e;
}

EventLogWriter::EventLogWriter(const std::filesystem::path& path) : out_(path) {
  if (!out_) throw RuntimeFault("cannot open " + path.string());
}

void EventLogWriter::write(const Event& e) { out_ << e.to_json().dump() << '\n'; }

std::vector<Event> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open event log " + path.string());
  std::vector<Event> events;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      events.push_back(Event::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("event log: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(std::string("event log: ") + e.what(), line_no);
    }
  }
  return events;
}

}  // namespace cortexloop
