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

#include "cortexloop/signal.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cortexloop/errors.hpp"

namespace cortexloop {

void SignalConfig::validate() const {
  if (n_channels <= 0) throw ConfigError("n_channels must be positive");
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz))
    throw ConfigError("sample_rate_hz must be positive");
  if (!(highpass_hz > 0.0)) throw ConfigError("highpass_hz must be positive");
  if (!(lowpass_hz > 0.0)) throw ConfigError("lowpass_hz must be positive");
  if (!(highpass_hz < lowpass_hz && lowpass_hz < sample_rate_hz / 2.0))
    throw ConfigError("require highpass_hz < lowpass_hz < sample_rate_hz / 2");
  if (lag_count < 0) throw ConfigError("lag_count must be nonnegative");
  if (lag_stride <= 0) throw ConfigError("lag_stride must be positive");
  if (static_cast<double>(lag_count) * lag_stride >= sample_rate_hz)
    throw ConfigError("lag window must be shorter than one second");
}

void to_json(nlohmann::json& j, const SignalConfig& cfg) {
  j = nlohmann::json{{"n_channels", cfg.n_channels},
                     {"sample_rate_hz", cfg.sample_rate_hz},
                     {"highpass_hz", cfg.highpass_hz},
                     {"lowpass_hz", cfg.lowpass_hz},
                     {"lag_count", cfg.lag_count},
                     {"lag_stride", cfg.lag_stride}};
}

void from_json(const nlohmann::json& j, SignalConfig& cfg) {
  if (!j.is_object()) throw ConfigError("signal config must be a JSON object");
  SignalConfig out;
  try {
    out.n_channels = j.value("n_channels", out.n_channels);
    out.sample_rate_hz = j.value("sample_rate_hz", out.sample_rate_hz);
    out.highpass_hz = j.value("highpass_hz", out.highpass_hz);
    out.lowpass_hz = j.value("lowpass_hz", out.lowpass_hz);
    out.lag_count = j.value("lag_count", out.lag_count);
    out.lag_stride = j.value("lag_stride", out.lag_stride);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("signal config: ") + e.what());
  }
  cfg = out;
}

void check_frame(const SampleFrame& frame, int n_channels) {
  if (static_cast<int>(frame.voltages.size()) != n_channels)
    throw ConfigError("frame at t=" + std::to_string(frame.t) + " has " +
                      std::to_string(frame.voltages.size()) +
                      " channels, expected " + std::to_string(n_channels));
  for (std::size_t n = 0; n < frame.voltages.size(); ++n)
    if (!std::isfinite(frame.voltages[n]))
      throw SignalError(static_cast<int>(n), frame.t);
}

FirstOrderSection::FirstOrderSection(Kind kind, double cutoff_hz,
                                     double sample_rate_hz) {
  // Prewarped analog prototype: s -> (2/T)(1 - z^-1)/(1 + z^-1) with
  // wc = (2/T) tan(pi fc / fs) collapses to k = tan(pi fc / fs).
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double norm = 1.0 / (1.0 + k);
  a1_ = (k - 1.0) * norm;
  if (kind == Kind::kHighPass) {
    b0_ = norm;
    b1_ = -norm;
  } else {
    b0_ = k * norm;
    b1_ = k * norm;
  }
}

BandFilter::BandFilter(const SignalConfig& cfg) {
  cfg.validate();
  highpass_.assign(cfg.n_channels,
                   FirstOrderSection(FirstOrderSection::Kind::kHighPass,
                                     cfg.highpass_hz, cfg.sample_rate_hz));
  lowpass_.assign(cfg.n_channels,
                  FirstOrderSection(FirstOrderSection::Kind::kLowPass,
                                    cfg.lowpass_hz, cfg.sample_rate_hz));
}

SampleFrame BandFilter::step(const SampleFrame& frame) {
  check_frame(frame, n_channels());
  SampleFrame out{frame.t, std::vector<double>(frame.voltages.size())};
  for (std::size_t n = 0; n < frame.voltages.size(); ++n)
    out.voltages[n] = lowpass_[n].step(highpass_[n].step(frame.voltages[n]));
  return out;
}

void BandFilter::reset() {
  for (auto& s : highpass_) s.reset();
  for (auto& s : lowpass_) s.reset();
}

LagWindow::LagWindow(const SignalConfig& cfg)
    : cfg_(cfg), capacity_(cfg.window_span()) {
  cfg_.validate();
}

void LagWindow::push(SampleFrame frame) {
  if (static_cast<int>(frame.voltages.size()) != cfg_.n_channels)
    throw ConfigError("lag window expects " + std::to_string(cfg_.n_channels) +
                      " channels, got " +
                      std::to_string(frame.voltages.size()));
  if (!frames_.empty() && frame.t != frames_.back().t + 1)
    throw SequencingError("expected frame t=" +
                          std::to_string(frames_.back().t + 1) + ", got t=" +
                          std::to_string(frame.t));
  frames_.push_back(std::move(frame));
  if (static_cast<int>(frames_.size()) > capacity_) frames_.pop_front();
}

std::vector<double> LagWindow::feature_vector() const {
  std::vector<double> out(cfg_.feature_length());
  feature_vector(out);
  return out;
}

void LagWindow::feature_vector(std::span<double> out) const {
  if (!warm())
    throw NotReadyError("lag window is cold (" + std::to_string(size()) + "/" +
                        std::to_string(capacity_) + " frames)");
  if (static_cast<int>(out.size()) != cfg_.feature_length())
    throw ConfigError("feature buffer has wrong length");
  out[0] = 1.0;
  const int newest = capacity_ - 1;
  for (int n = 0; n < cfg_.n_channels; ++n)
    for (int k = 0; k <= cfg_.lag_count; ++k)
      out[feature_index(cfg_, n, k)] =
          frames_[newest - k * cfg_.lag_stride].voltages[n];
}

}  // namespace cortexloop
