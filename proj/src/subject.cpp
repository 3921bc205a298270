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

#include "cortexloop/subject.hpp"

#include <cmath>
#include <numbers>

#include "cortexloop/errors.hpp"

namespace cortexloop {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Gram matrix entries of the N x 2 loadings.
struct Gram {
  double uu = 0.0, uv = 0.0, vv = 0.0;
  double det() const { return uu * vv - uv * uv; }
};

Gram gram(const MixingMatrix& m) {
  Gram g;
  for (const auto& row : m) {
    g.uu += row[0] * row[0];
    g.uv += row[0] * row[1];
    g.vv += row[1] * row[1];
  }
  return g;
}

}  // namespace

MixingMatrix random_mixing(int n_channels, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MixingMatrix m(n_channels);
  double power = 0.0;
  for (auto& row : m) {
    row = {gauss(rng), gauss(rng)};
    power += row[0] * row[0] + row[1] * row[1];
  }
  const double scale = 1.0 / std::sqrt(power / (2.0 * n_channels));
  for (auto& row : m) {
    row[0] *= scale;
    row[1] *= scale;
  }
  return m;
}

SyntheticSubject::SyntheticSubject(const SignalConfig& cfg,
                                   const SubjectParams& params,
                                   std::uint64_t noise_seed)
    : cfg_(cfg), params_(params), rng_(noise_seed) {
  cfg_.validate();
  if (!(params.noise_sigma >= 0.0) || !std::isfinite(params.noise_sigma))
    throw ConfigError("noise_sigma must be nonnegative");
  if (params.intent_lag < 0) throw ConfigError("intent_lag must be nonnegative");
  if (!(params.background >= 0.0)) throw ConfigError("background must be nonnegative");
  if (!(params.asymmetry > 0.0)) throw ConfigError("asymmetry must be positive");
  if (!(params.background_pole_hz > 0.0 &&
        params.background_pole_hz < cfg.sample_rate_hz / 2.0))
    throw ConfigError("background pole must lie below Nyquist");
  mixing_ = params.mixing ? *params.mixing
                          : random_mixing(cfg.n_channels, params.mixing_seed.value_or(1));
  if (static_cast<int>(mixing_.size()) != cfg.n_channels)
    throw ConfigError("mixing matrix needs " + std::to_string(cfg.n_channels) +
                      " rows");
  for (const auto& row : mixing_)
    if (!std::isfinite(row[0]) || !std::isfinite(row[1]))
      throw ConfigError("mixing matrix must be finite");
  const Gram g = gram(mixing_);
  if (!(g.det() > 1e-12 * (g.uu + g.vv) * (g.uu + g.vv)))
    throw ConfigError("mixing matrix must have rank 2");
  delay_.assign(params.intent_lag, Velocity{});
  background_state_.assign(cfg.n_channels, 0.0);
  background_a_ =
      std::exp(-2.0 * std::numbers::pi * params.background_pole_hz / cfg.sample_rate_hz);
}

double SyntheticSubject::mixing_power() const {
  const Gram g = gram(mixing_);
  return (g.uu + g.vv) / (2.0 * static_cast<double>(mixing_.size()));
}

std::array<std::vector<double>, 2> SyntheticSubject::inverse() const {
  const Gram g = gram(mixing_);
  const double d = g.det();
  std::array<std::vector<double>, 2> inv;
  inv[0].resize(mixing_.size());
  inv[1].resize(mixing_.size());
  for (std::size_t n = 0; n < mixing_.size(); ++n) {
    const auto& r = mixing_[n];
    inv[0][n] = (g.vv * r[0] - g.uv * r[1]) / d;
    inv[1][n] = (-g.uv * r[0] + g.uu * r[1]) / d;
  }
  return inv;
}

Velocity SyntheticSubject::invert(const SampleFrame& frame) const {
  const auto inv = inverse();
  Velocity out;
  for (std::size_t n = 0; n < frame.voltages.size(); ++n) {
    out.u += inv[0][n] * frame.voltages[n];
    out.v += inv[1][n] * frame.voltages[n];
  }
  return out;
}

SampleFrame SyntheticSubject::gen_frame(Velocity intent) {
  delay_.push_back(intent);
  const Velocity encoded = delay_.front();
  delay_.pop_front();

  const double rms = std::sqrt(mixing_power());
  const double white_sd = params_.noise_sigma * rms;
  const double bg_sd = params_.background * rms;
  const double bg_gain = std::sqrt(1.0 - background_a_ * background_a_);
  SampleFrame frame{t_++, std::vector<double>(mixing_.size())};
  for (std::size_t n = 0; n < mixing_.size(); ++n)
    frame.voltages[n] = mixing_[n][0] * encoded.u + mixing_[n][1] * encoded.v +
                        white_sd * gauss_(rng_);
  for (std::size_t n = 0; n < mixing_.size(); ++n) {
    background_state_[n] =
        background_a_ * background_state_[n] + bg_gain * gauss_(rng_);
    frame.voltages[n] += bg_sd * background_state_[n];
  }
  return frame;
}

void IntentPolicy::validate() const {
  if (!(effort > 0.0)) throw ConfigError("policy effort must be positive");
  if (!(reaction_delay_s >= 0.0))
    throw ConfigError("reaction_delay_s must be nonnegative");
  if (!(wrong_direction_prob >= 0.0 && wrong_direction_prob < 1.0))
    throw ConfigError("wrong_direction_prob must lie in [0, 1)");
  if (!(decision_interval_s > 0.0))
    throw ConfigError("decision_interval_s must be positive");
}

Velocity seek_intent(const Vec2& cursor, const Vec2& target, double effort) {
  const double dx = target.x - cursor.x;
  const double dy = target.y - cursor.y;
  const double d = std::hypot(dx, dy);
  if (d == 0.0) return {};
  return {effort * dx / d, effort * dy / d};
}

IntentGenerator::IntentGenerator(const IntentPolicy& policy, double asymmetry,
                                 double sample_rate_hz, std::uint64_t seed)
    : policy_(policy),
      asymmetry_(asymmetry),
      sample_rate_hz_(sample_rate_hz),
      rng_(seed) {
  policy_.validate();
}

IntentPolicy::Mode IntentGenerator::mode_for(const SessionState& world) {
  using K = ProtocolPhase::Kind;
  if (world.phase.kind == K::kTraining && world.reference_velocity)
    return IntentPolicy::Mode::kTrackReference;
  if (world.phase.kind == K::kTest && world.target)
    return IntentPolicy::Mode::kSeekTarget;
  return IntentPolicy::Mode::kIdle;
}

Velocity IntentGenerator::next(const SessionState& world) {
  if (world.trial != trial_) {
    trial_ = world.trial;
    reference_delay_.clear();
    interval_ = -1;
    flipped_ = false;
  }
  switch (mode_for(world)) {
    case IntentPolicy::Mode::kIdle:
      return {};
    case IntentPolicy::Mode::kTrackReference: {
      const auto lag = static_cast<std::size_t>(
          std::llround(policy_.reaction_delay_s * sample_rate_hz_));
      reference_delay_.push_back(*world.reference_velocity);
      if (reference_delay_.size() <= lag) return {};
      const Velocity out = reference_delay_.front();
      reference_delay_.pop_front();
      return out;
    }
    case IntentPolicy::Mode::kSeekTarget: {
      const double active_s = world.trial_elapsed_s - policy_.reaction_delay_s;
      if (active_s < 0.0) return {};
      const auto interval =
          static_cast<long>(std::floor(active_s / policy_.decision_interval_s));
      if (interval != interval_) {
        interval_ = interval;
        double p = policy_.wrong_direction_prob;
        if (axis_of(world.target->direction) == Axis::kVertical) p *= asymmetry_;
        flipped_ = uniform01(rng_) < std::min(p, 0.99);
        ++decisions_;
        if (flipped_) ++flips_;
      }
      Velocity v = seek_intent(world.cursor.position, world.target->center,
                               policy_.effort);
      if (flipped_) v = {-v.u, -v.v};
      return v;
    }
  }
  return {};
}

std::optional<SampleFrame> SyntheticSource::next_frame(Velocity intent) {
  last_ = intent;
  return subject_.gen_frame(intent);
}

ReplaySource::ReplaySource(const std::filesystem::path& path,
                           const SignalConfig& expected)
    : reader_(path) {
  if (!(reader_.config() == expected))
    throw ConfigError("recording " + path.string() +
                      " was made with a different signal configuration");
}

ReplaySource::ReplaySource(const std::filesystem::path& path) : reader_(path) {}

std::optional<SampleFrame> ReplaySource::next_frame(Velocity) {
  auto frame = reader_.next();
  if (frame) check_frame(*frame, reader_.config().n_channels);
  return frame;
}

void SurrogateSource::submit(Velocity intent, double t_s) {
  std::lock_guard lock(mu_);
  inbox_.push_back({intent, t_s});
}

Velocity SurrogateSource::intent_at(double t_s) {
  std::vector<Message> consumed;
  {
    std::lock_guard lock(mu_);
    while (!inbox_.empty() && inbox_.front().t_s <= t_s) {
      consumed.push_back(inbox_.front());
      inbox_.pop_front();
    }
  }
  if (!consumed.empty()) latest_ = consumed.back();
  if (on_message_)
    for (const auto& m : consumed) on_message_(m.t_s, m.intent);
  if (latest_ && t_s - latest_->t_s <= kStaleAfterS) {
    stale_ = false;
    return latest_->intent;
  }
  if (!stale_) {
    stale_ = true;
    ++stale_episodes_;
    if (on_stale_) on_stale_(t_s);
  }
  return {};
}

std::optional<SampleFrame> SurrogateSource::next_frame(Velocity) {
  const double t_s =
      static_cast<double>(subject_.next_t()) / subject_.config().sample_rate_hz;
  last_ = intent_at(t_s);
  return subject_.gen_frame(last_);
}

}  // namespace cortexloop
