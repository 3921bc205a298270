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

#ifndef CORTEXLOOP_DECODER_HPP_
#define CORTEXLOOP_DECODER_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "cortexloop/errors.hpp"
#include "cortexloop/signal.hpp"

namespace cortexloop {

struct Velocity {
  double u = 0.0;
  double v = 0.0;
  bool operator==(const Velocity&) const = default;
};

/// Agreement between observed and decoded velocities. Correlations are absent
/// when the observed series has zero variance.
struct FitReport {
  std::optional<double> pearson_r_x;
  std::optional<double> pearson_r_y;
  double rmse_x = 0.0;
  double rmse_y = 0.0;
  long n_rows = 0;
  double ridge_lambda = 0.0;
  bool well_posed = true;  // rows >= 10 x feature length
};

void to_json(nlohmann::json& j, const FitReport& r);
void from_json(const nlohmann::json& j, FitReport& r);

/// Raised by evaluate() for a constant observed series; the RMSE fields of
/// the attached report are still valid.
class UndefinedCorrelationError : public ValidationError {
 public:
  explicit UndefinedCorrelationError(FitReport partial)
      : ValidationError("observed velocity has zero variance; correlation "
                        "undefined"),
        partial_(std::move(partial)) {}
  const FitReport& partial() const { return partial_; }

 private:
  FitReport partial_;
};

/// Regression rows: features in LagWindow layout plus the observed cursor
/// velocity for both axes.
class TrainingSet {
 public:
  explicit TrainingSet(int feature_length) : p_(feature_length) {}

  void add_row(std::span<const double> features, double u, double v,
               int trial_id);

  int feature_length() const { return p_; }
  long rows() const { return static_cast<long>(u_.size()); }
  bool empty() const { return u_.empty(); }
  bool well_posed() const { return rows() >= 10L * p_; }

  std::span<const double> features(long row) const {
    return {features_.data() + row * p_, static_cast<std::size_t>(p_)};
  }
  double u(long row) const { return u_[row]; }
  double v(long row) const { return v_[row]; }
  int trial_id(long row) const { return trial_[row]; }
  const std::vector<double>& observed_u() const { return u_; }
  const std::vector<double>& observed_v() const { return v_; }

 private:
  int p_;
  std::vector<double> features_;
  std::vector<double> u_, v_;
  std::vector<int> trial_;
};

/// Two independent linear maps (one per axis) from lag-embedded features to
/// velocity. Immutable after fit.
struct DecoderModel {
  static constexpr int kFormatVersion = 1;

  SignalConfig cfg;
  std::vector<double> axis_x;  // a0x, then b_nkx in feature layout
  std::vector<double> axis_y;
  FitReport fit_report;

  /// Throws ConfigError on length mismatch.
  Velocity predict(std::span<const double> features) const;
  /// Rejects a stream configured differently from the calibration data.
  void check_config(const SignalConfig& stream_cfg) const;
  void validate() const;
};

void to_json(nlohmann::json& j, const DecoderModel& m);
void from_json(const nlohmann::json& j, DecoderModel& m);

DecoderModel load_model(const std::filesystem::path& path);
void save_model(const DecoderModel& model, const std::filesystem::path& path);

/// Penalized least squares per axis, ridge on slopes only. Solved through a
/// column-pivoted Householder QR of the (ridge-augmented) design matrix.
/// Throws SingularFitError for a rank-deficient unpenalized system.
DecoderModel fit(const TrainingSet& ts, const SignalConfig& cfg,
                 double ridge_lambda = 0.0);

FitReport evaluate(const DecoderModel& model, const TrainingSet& ts);

/// Pearson correlation; nullopt when either series is constant.
std::optional<double> pearson(std::span<const double> a,
                              std::span<const double> b);
double rmse(std::span<const double> a, std::span<const double> b);

// Training-set assembly from a recorded stream.

/// A training trial as the half-open sample range [begin, end).
struct TrainingTrial {
  int id = 0;
  SampleIndex begin = 0;
  SampleIndex end = 0;
};

struct ReferenceSample {
  SampleIndex t = 0;
  double u = 0.0;
  double v = 0.0;
};

/// One row per warm sample inside a training trial. The band filter (when
/// requested) runs continuously over the whole stream; the lag window starts
/// cold at every trial. Throws EmptyTrainingError without trials and
/// ConfigError on channel mismatch.
TrainingSet assemble_training_set(std::span<const SampleFrame> frames,
                                  const SignalConfig& cfg, bool apply_filter,
                                  std::span<const TrainingTrial> trials,
                                  std::span<const ReferenceSample> reference);

}  // namespace cortexloop

#endif  // CORTEXLOOP_DECODER_HPP_
