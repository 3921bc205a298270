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

#include "cortexloop/task.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <cstdio>

#include "cortexloop/errors.hpp"

namespace cortexloop {

std::string to_string(Axis a) {
  return a == Axis::kHorizontal ? "horizontal" : "vertical";
}

std::string to_string(TestMode m) {
  switch (m) {
    case TestMode::kHorizontal1D: return "horizontal1D";
    case TestMode::kVertical1D: return "vertical1D";
    case TestMode::kFull2D: return "full2D";
  }
  return "?";
}

std::string to_string(Direction d) {
  switch (d) {
    case Direction::kRight: return "RT";
    case Direction::kLeft: return "LT";
    case Direction::kTop: return "TT";
    case Direction::kBottom: return "BT";
  }
  return "?";
}

TestMode test_mode_from_string(std::string_view s) {
  if (s == "horizontal1D") return TestMode::kHorizontal1D;
  if (s == "vertical1D") return TestMode::kVertical1D;
  if (s == "full2D") return TestMode::kFull2D;
  throw ConfigError("unknown test mode '" + std::string(s) +
                    "' (expected horizontal1D, vertical1D or full2D)");
}

Direction direction_from_string(std::string_view s) {
  if (s == "RT") return Direction::kRight;
  if (s == "LT") return Direction::kLeft;
  if (s == "TT") return Direction::kTop;
  if (s == "BT") return Direction::kBottom;
  throw ConfigError("unknown target direction '" + std::string(s) + "'");
}

Axis axis_of(Direction d) {
  return d == Direction::kRight || d == Direction::kLeft ? Axis::kHorizontal
                                                         : Axis::kVertical;
}

int sign_of(Direction d) {
  return d == Direction::kRight || d == Direction::kTop ? 1 : -1;
}

std::string ProtocolPhase::name() const {
  switch (kind) {
    case Kind::kIdle: return "idle";
    case Kind::kTraining: return "training_" + to_string(axis);
    case Kind::kCalibration: return "calibration";
    case Kind::kTest: return "test";
  }
  return "?";
}

bool ProtocolFsm::legal(const ProtocolPhase& from, const ProtocolPhase& to) {
  using K = ProtocolPhase::Kind;
  switch (from.kind) {
    case K::kIdle:
      return to == ProtocolPhase::training(Axis::kHorizontal) ||
             to.kind == K::kCalibration;
    case K::kTraining:
      return from.axis == Axis::kHorizontal
                 ? to == ProtocolPhase::training(Axis::kVertical)
                 : to.kind == K::kCalibration;
    case K::kCalibration:
    case K::kTest:
      return to.kind == K::kTest;
  }
  return false;
}

void ProtocolFsm::advance(const ProtocolPhase& next) {
  if (!legal(current_, next))
    throw ProtocolTransitionError("illegal phase transition " +
                                  current_.name() + " -> " + next.name());
  current_ = next;
}

void to_json(nlohmann::json& j, const DirectionStats& s) {
  j = nlohmann::json{{"n_trials", s.n_trials},
                     {"n_hits", s.n_hits},
                     {"success_rate", s.success_rate},
                     {"success_sd", s.success_sd},
                     {"success_sd_trials", s.success_sd_trials},
                     {"mean_time_to_target",
                      s.mean_time_to_target
                          ? nlohmann::json(*s.mean_time_to_target)
                          : nlohmann::json(nullptr)}};
}

void to_json(nlohmann::json& j, const RunSummary& s) {
  nlohmann::json per = nlohmann::json::object();
  for (const auto& [d, stats] : s.per_direction) per[to_string(d)] = stats;
  j = nlohmann::json{
      {"n_runs", s.n_runs}, {"overall", s.overall}, {"per_direction", per}};
}

void to_json(nlohmann::json& j, const TrialResult& r) {
  j = nlohmann::json{
      {"direction", to_string(r.direction)},
      {"outcome", r.outcome == Outcome::kHit ? "hit" : "timeout"},
      {"time_to_target", r.time_to_target ? nlohmann::json(*r.time_to_target)
                                          : nlohmann::json(nullptr)},
      {"wrong_direction_time", r.wrong_direction_time}};
}

ReferenceSeries training_reference(Axis axis, double duration_s,
                                   std::uint64_t seed, double rate_hz,
                                   const ReferenceParams& params) {
  if (!(duration_s > 0.0)) throw ConfigError("duration must be positive");
  if (!(rate_hz > 0.0)) throw ConfigError("rate must be positive");
  if (!(params.speed_rms > 0.0) || !(params.bandwidth_hz > 0.0) ||
      !(params.bound > 0.0) || params.bound > 1.0)
    throw ConfigError("invalid reference parameters");

  const double dt = 1.0 / rate_hz;
  const double a = std::exp(-2.0 * std::numbers::pi * params.bandwidth_hz * dt);
  const double b = 1.0 - a;

  // Stationary gain of the two-pole cascade for unit white input.
  double energy = 0.0;
  {
    double s1 = 1.0 * b, s2 = s1 * b;
    for (int i = 0; i < 1 << 20 && (s1 > 1e-14 || s2 > 1e-14); ++i) {
      energy += s2 * s2;
      s1 = a * s1;
      s2 = a * s2 + b * s1;
    }
  }
  const double scale = params.speed_rms / std::sqrt(energy);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double s1 = 0.0, s2 = 0.0;
  // Burn in ten time constants so the series starts stationary.
  const int burn = static_cast<int>(std::ceil(10.0 / (2.0 * std::numbers::pi *
                                                       params.bandwidth_hz * dt)));
  for (int i = 0; i < burn; ++i) {
    s1 = a * s1 + b * gauss(rng);
    s2 = a * s2 + b * s1;
  }

  const auto n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
  ReferenceSeries out;
  out.rate_hz = rate_hz;
  out.position.reserve(n);
  out.velocity.reserve(n);
  double pos = 0.0;
  double heading = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    s1 = a * s1 + b * gauss(rng);
    s2 = a * s2 + b * s1;
    double vel = heading * scale * s2;
    pos += vel * dt;
    if (pos > params.bound) {
      pos = 2.0 * params.bound - pos;
      heading = -heading;
      vel = -vel;
    } else if (pos < -params.bound) {
      pos = -2.0 * params.bound - pos;
      heading = -heading;
      vel = -vel;
    }
    if (axis == Axis::kHorizontal) {
      out.position.push_back({pos, 0.0});
      out.velocity.push_back({vel, 0.0});
    } else {
      out.position.push_back({0.0, pos});
      out.velocity.push_back({0.0, vel});
    }
  }
  return out;
}

StepResult step_cursor(const CursorState& state, Velocity decoded, double dt,
                       double gain, TestMode mode) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(gain > 0.0)) throw ConfigError("gain must be positive");
  if (!std::isfinite(decoded.u) || !std::isfinite(decoded.v))
    return {state, true};
  if (mode == TestMode::kHorizontal1D) decoded.v = 0.0;
  if (mode == TestMode::kVertical1D) decoded.u = 0.0;
  CursorState next;
  next.velocity = decoded;
  next.position.x = std::clamp(state.position.x + gain * decoded.u * dt, -1.0, 1.0);
  next.position.y = std::clamp(state.position.y + gain * decoded.v * dt, -1.0, 1.0);
  if (mode == TestMode::kHorizontal1D) next.position.y = 0.0;
  if (mode == TestMode::kVertical1D) next.position.x = 0.0;
  return {next, false};
}

std::vector<Direction> directions_for(TestMode mode) {
  switch (mode) {
    case TestMode::kHorizontal1D: return {Direction::kRight, Direction::kLeft};
    case TestMode::kVertical1D: return {Direction::kTop, Direction::kBottom};
    case TestMode::kFull2D:
      return {Direction::kRight, Direction::kLeft, Direction::kTop,
              Direction::kBottom};
  }
  return {};
}

Vec2 target_center(Direction d, double distance) {
  switch (d) {
    case Direction::kRight: return {distance, 0.0};
    case Direction::kLeft: return {-distance, 0.0};
    case Direction::kTop: return {0.0, distance};
    case Direction::kBottom: return {0.0, -distance};
  }
  return {};
}

Target spawn_target(TestMode mode, std::mt19937_64& rng,
                    const TargetGeometry& geometry, double now_s) {
  if (!(geometry.radius > 0.0 && geometry.radius < 0.5))
    throw ConfigError("target radius must lie in (0, 0.5)");
  if (!(geometry.distance > 0.0 && geometry.distance <= 1.0))
    throw ConfigError("target distance must lie in (0, 1]");
  const auto dirs = directions_for(mode);
  // 2^64 is divisible by 2 and 4, so the modulo is unbiased here.
  const Direction d = dirs[rng() % dirs.size()];
  return Target{d, target_center(d, geometry.distance), geometry.radius, now_s};
}

std::optional<TrialResult> check_trial(const CursorState& state,
                                       const Target& target, double elapsed_s,
                                       double timeout_s,
                                       double wrong_direction_time) {
  if (elapsed_s < 0.0) throw ConfigError("elapsed time must be nonnegative");
  const double dx = state.position.x - target.center.x;
  const double dy = state.position.y - target.center.y;
  if (std::hypot(dx, dy) <= target.radius && elapsed_s <= timeout_s)
    return TrialResult{target.direction, Outcome::kHit, elapsed_s,
                       wrong_direction_time};
  if (elapsed_s >= timeout_s)
    return TrialResult{target.direction, Outcome::kTimeout, std::nullopt,
                       wrong_direction_time};
  return std::nullopt;
}

namespace {

struct Tally {
  int trials = 0;
  int hits = 0;
  double time_sum = 0.0;
  std::vector<double> run_rates;
};

DirectionStats finish(const Tally& t) {
  DirectionStats s;
  s.n_trials = t.trials;
  s.n_hits = t.hits;
  s.success_rate = t.trials ? static_cast<double>(t.hits) / t.trials : 0.0;
  s.success_sd_trials = std::sqrt(s.success_rate * (1.0 - s.success_rate));
  if (t.run_rates.size() >= 2) {
    double mean = 0.0;
    for (double r : t.run_rates) mean += r;
    mean /= static_cast<double>(t.run_rates.size());
    double ss = 0.0;
    for (double r : t.run_rates) ss += (r - mean) * (r - mean);
    s.success_sd = std::sqrt(ss / static_cast<double>(t.run_rates.size() - 1));
  }
  if (t.hits > 0) s.mean_time_to_target = t.time_sum / t.hits;
  return s;
}

}  // namespace

RunSummary summarize(const std::vector<std::vector<TrialResult>>& runs) {
  Tally overall;
  std::map<Direction, Tally> per;
  int n_runs = 0;
  for (const auto& run : runs) {
    if (run.empty()) continue;
    ++n_runs;
    int run_hits = 0;
    std::map<Direction, std::pair<int, int>> run_per;
    for (const auto& r : run) {
      const bool hit = r.outcome == Outcome::kHit;
      auto& t = per[r.direction];
      ++t.trials;
      ++overall.trials;
      ++run_per[r.direction].first;
      if (hit) {
        ++t.hits;
        ++overall.hits;
        ++run_hits;
        ++run_per[r.direction].second;
        t.time_sum += *r.time_to_target;
        overall.time_sum += *r.time_to_target;
      }
    }
    overall.run_rates.push_back(static_cast<double>(run_hits) /
                                static_cast<double>(run.size()));
    for (const auto& [d, c] : run_per)
      per[d].run_rates.push_back(static_cast<double>(c.second) / c.first);
  }
  if (overall.trials == 0) throw EmptySummaryError("no trial results to summarize");
  RunSummary s;
  s.n_runs = n_runs;
  s.overall = finish(overall);
  for (const auto& [d, t] : per) s.per_direction[d] = finish(t);
  return s;
}

std::string format_rate(double rate, double sd) {
  auto pct = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", std::round(v * 1000.0) / 10.0);
    std::string s(buf);
    if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.resize(s.size() - 2);
    return s + "%";
  };
  return pct(rate) + " (" + pct(sd) + ")";
}

}  // namespace cortexloop
