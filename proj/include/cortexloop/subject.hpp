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

#ifndef CORTEXLOOP_SUBJECT_HPP_
#define CORTEXLOOP_SUBJECT_HPP_

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <vector>

#include "cortexloop/decoder.hpp"
#include "cortexloop/signal.hpp"
#include "cortexloop/signal_io.hpp"
#include "cortexloop/task.hpp"

namespace cortexloop {

using MixingMatrix = std::vector<std::array<double, 2>>;  // N rows of (u, v)

struct SubjectParams {
  /// Explicit loadings; when absent a Gaussian matrix is drawn from
  /// mixing_seed and scaled to unit mean-square entry.
  std::optional<MixingMatrix> mixing;
  std::optional<std::uint64_t> mixing_seed;
  double noise_sigma = 0.05;   // white noise SD, in units of RMS loading
  int intent_lag = 0;          // samples
  double background = 0.0;     // SD of the 8 Hz colored background
  double background_pole_hz = 8.0;
  double asymmetry = 1.5;      // vertical multiplier on wrong-direction odds
};

MixingMatrix random_mixing(int n_channels, std::uint64_t seed);

/// Generative stand-in for the subject: channel voltages are a linear,
/// optionally delayed, encoding of intended velocity plus noise.
class SyntheticSubject {
 public:
  SyntheticSubject(const SignalConfig& cfg, const SubjectParams& params,
                   std::uint64_t noise_seed);

  /// Emits the next frame (t advances by one per call).
  SampleFrame gen_frame(Velocity intent);

  const MixingMatrix& mixing() const { return mixing_; }
  const SignalConfig& config() const { return cfg_; }
  const SubjectParams& params() const { return params_; }
  /// Mean-square loading per entry.
  double mixing_power() const;
  /// Least-squares inverse of the mixing, rows (u, v).
  std::array<std::vector<double>, 2> inverse() const;
  /// Applies inverse() to one frame: the intent that produced it, when
  /// noise-free.
  Velocity invert(const SampleFrame& frame) const;
  SampleIndex next_t() const { return t_; }

 private:
  SignalConfig cfg_;
  SubjectParams params_;
  MixingMatrix mixing_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> gauss_{0.0, 1.0};
  std::deque<Velocity> delay_;
  std::vector<double> background_state_;
  double background_a_ = 0.0;
  SampleIndex t_ = 0;
};

struct IntentPolicy {
  enum class Mode { kTrackReference, kSeekTarget, kIdle };
  double effort = 0.4;
  double reaction_delay_s = 0.0;
  double wrong_direction_prob = 0.27;  // calibrated so vertical1D lands near 83% over seeds 1..8
  double decision_interval_s = 0.5;

  void validate() const;
};

/// effort x unit vector from the cursor to the target center; (0, 0) when the
/// cursor sits on the center.
Velocity seek_intent(const Vec2& cursor, const Vec2& target, double effort);

/// Stateful intent model. Call once per sample with the current loop
/// snapshot; the mode follows the phase (training tracks the reference,
/// targets are sought, otherwise idle).
class IntentGenerator {
 public:
  IntentGenerator(const IntentPolicy& policy, double asymmetry,
                  double sample_rate_hz, std::uint64_t seed);

  static IntentPolicy::Mode mode_for(const SessionState& world);
  Velocity next(const SessionState& world);

  /// Number of decision intervals drawn and flipped so far.
  long decisions() const { return decisions_; }
  long flips() const { return flips_; }

 private:
  IntentPolicy policy_;
  double asymmetry_;
  double sample_rate_hz_;
  std::mt19937_64 rng_;
  std::deque<Velocity> reference_delay_;
  int trial_ = -2;
  long interval_ = -1;
  bool flipped_ = false;
  long decisions_ = 0;
  long flips_ = 0;
};

/// Common contract of every frame producer: consecutive t at the configured
/// sample rate. `intent` is what the session's intent model wants encoded;
/// sources that do not encode intent ignore it.
class SignalSource {
 public:
  virtual ~SignalSource() = default;
  virtual std::optional<SampleFrame> next_frame(Velocity intent) = 0;
  virtual const SignalConfig& config() const = 0;
  virtual SignalDomain domain() const = 0;
  /// Intent actually encoded into the last frame, if the source knows it.
  virtual std::optional<Velocity> last_intent() const { return std::nullopt; }
};

class SyntheticSource : public SignalSource {
 public:
  explicit SyntheticSource(SyntheticSubject subject)
      : subject_(std::move(subject)) {}
  std::optional<SampleFrame> next_frame(Velocity intent) override;
  const SignalConfig& config() const override { return subject_.config(); }
  SignalDomain domain() const override { return SignalDomain::kAcquired; }
  std::optional<Velocity> last_intent() const override { return last_; }
  SyntheticSubject& subject() { return subject_; }

 private:
  SyntheticSubject subject_;
  Velocity last_;
};

/// Frames from a signal file, in file order.
class ReplaySource : public SignalSource {
 public:
  /// Throws ConfigError when the file's config differs from `expected`.
  ReplaySource(const std::filesystem::path& path, const SignalConfig& expected);
  explicit ReplaySource(const std::filesystem::path& path);

  std::optional<SampleFrame> next_frame(Velocity intent) override;
  std::optional<SampleFrame> replay_next() { return next_frame({}); }
  const SignalConfig& config() const override { return reader_.config(); }
  SignalDomain domain() const override { return reader_.domain(); }

 private:
  SignalFileReader reader_;
};

/// Human-in-the-loop source: intent comes from timestamped UI messages,
/// held until replaced, and decays to idle once older than the staleness
/// limit. Safe to submit from another thread.
class SurrogateSource : public SignalSource {
 public:
  static constexpr double kStaleAfterS = 0.5;

  explicit SurrogateSource(SyntheticSubject subject)
      : subject_(std::move(subject)) {}

  /// Messages must be submitted in nondecreasing t_s.
  void submit(Velocity intent, double t_s);

  std::optional<SampleFrame> next_frame(Velocity ignored) override;
  const SignalConfig& config() const override { return subject_.config(); }
  SignalDomain domain() const override { return SignalDomain::kAcquired; }
  std::optional<Velocity> last_intent() const override { return last_; }

  /// Intent used for a frame stamped at t_s (consumes due messages).
  Velocity intent_at(double t_s);
  long stale_episodes() const { return stale_episodes_; }
  /// Called once each time the input goes stale.
  void on_stale(std::function<void(double t_s)> cb) { on_stale_ = std::move(cb); }
  /// Called for every message as it is consumed, with its own timestamp.
  void on_message(std::function<void(double t_s, Velocity)> cb) {
    on_message_ = std::move(cb);
  }

 private:
  struct Message {
    Velocity intent;
    double t_s;
  };
  SyntheticSubject subject_;
  std::mutex mu_;
  std::deque<Message> inbox_;
  std::optional<Message> latest_;
  bool stale_ = true;
  long stale_episodes_ = 0;
  std::function<void(double)> on_stale_;
  std::function<void(double, Velocity)> on_message_;
  Velocity last_;
};

}  // namespace cortexloop

#endif  // CORTEXLOOP_SUBJECT_HPP_
