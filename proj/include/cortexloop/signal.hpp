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

#ifndef CORTEXLOOP_SIGNAL_HPP_
#define CORTEXLOOP_SIGNAL_HPP_

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace cortexloop {

using SampleIndex = std::uint64_t;

/// Acquisition and lag-embedding parameters shared by every stage that
/// touches the sample stream.
struct SignalConfig {
  int n_channels = 14;
  double sample_rate_hz = 128.0;
  double highpass_hz = 0.16;
  double lowpass_hz = 30.0;
  int lag_count = 5;   // K: taps k = 0..K
  int lag_stride = 1;  // samples between taps

  /// Throws ConfigError when an invariant is violated.
  void validate() const;

  /// Frames held by a warm lag window: K * stride + 1.
  int window_span() const { return lag_count * lag_stride + 1; }
  /// Decoder feature length: N * (K + 1) + 1.
  int feature_length() const { return n_channels * (lag_count + 1) + 1; }

  bool operator==(const SignalConfig&) const = default;
};

void to_json(nlohmann::json& j, const SignalConfig& cfg);
void from_json(const nlohmann::json& j, SignalConfig& cfg);

struct SampleFrame {
  SampleIndex t = 0;
  std::vector<double> voltages;
};

/// Throws ConfigError on channel mismatch and SignalError on non-finite data.
void check_frame(const SampleFrame& frame, int n_channels);

/// First-order IIR section designed by the bilinear transform with the
/// cutoff prewarped, so the digital -3 dB point lands exactly on the cutoff.
class FirstOrderSection {
 public:
  enum class Kind { kHighPass, kLowPass };

  FirstOrderSection(Kind kind, double cutoff_hz, double sample_rate_hz);

  double step(double x) {
    const double y = b0_ * x + b1_ * x_prev_ - a1_ * y_prev_;
    x_prev_ = x;
    y_prev_ = y;
    return y;
  }
  void reset() { x_prev_ = y_prev_ = 0.0; }

  double b0() const { return b0_; }
  double b1() const { return b1_; }
  double a1() const { return a1_; }

 private:
  double b0_, b1_, a1_;
  double x_prev_ = 0.0;
  double y_prev_ = 0.0;
};

/// Per-channel high-pass cascaded with low-pass, applied causally.
class BandFilter {
 public:
  explicit BandFilter(const SignalConfig& cfg);

  /// Advances every channel by one sample.
  SampleFrame step(const SampleFrame& frame);
  void reset();
  int n_channels() const { return static_cast<int>(highpass_.size()); }

 private:
  std::vector<FirstOrderSection> highpass_;
  std::vector<FirstOrderSection> lowpass_;
};

/// The most recent K * stride + 1 frames, in time order.
class LagWindow {
 public:
  explicit LagWindow(const SignalConfig& cfg);

  /// Appends a frame. Throws SequencingError unless frame.t is exactly one
  /// past the newest stored index (any index is accepted when empty).
  void push(SampleFrame frame);
  void clear() { frames_.clear(); }

  bool warm() const { return static_cast<int>(frames_.size()) == capacity_; }
  std::size_t size() const { return frames_.size(); }
  const SampleFrame& newest() const { return frames_.back(); }
  const std::deque<SampleFrame>& frames() const { return frames_; }

  /// Regression features. Slot 0 is the constant 1; slot 1 + n*(K+1) + k
  /// holds channel n at t - k*stride. Throws NotReadyError while cold.
  std::vector<double> feature_vector() const;
  /// Writes into a caller-owned buffer of length cfg.feature_length().
  void feature_vector(std::span<double> out) const;

  const SignalConfig& config() const { return cfg_; }

 private:
  SignalConfig cfg_;
  int capacity_;
  std::deque<SampleFrame> frames_;
};

/// Index of (channel, lag) in the feature layout.
inline int feature_index(const SignalConfig& cfg, int channel, int lag) {
  return 1 + channel * (cfg.lag_count + 1) + lag;
}

}  // namespace cortexloop

#endif  // CORTEXLOOP_SIGNAL_HPP_
