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

#include "cortexloop/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <Eigen/Dense>

namespace cortexloop {

namespace {

nlohmann::json optional_to_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> optional_from_json(const nlohmann::json& j,
                                         const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      throw DataError(std::string("non-finite value in ") + what);
}

}  // namespace

void to_json(nlohmann::json& j, const FitReport& r) {
  j = nlohmann::json{{"pearson_r_x", optional_to_json(r.pearson_r_x)},
                     {"pearson_r_y", optional_to_json(r.pearson_r_y)},
                     {"rmse_x", r.rmse_x},
                     {"rmse_y", r.rmse_y},
                     {"n_rows", r.n_rows},
                     {"ridge_lambda", r.ridge_lambda},
                     {"well_posed", r.well_posed}};
}

void from_json(const nlohmann::json& j, FitReport& r) {
  r.pearson_r_x = optional_from_json(j, "pearson_r_x");
  r.pearson_r_y = optional_from_json(j, "pearson_r_y");
  r.rmse_x = j.at("rmse_x").get<double>();
  r.rmse_y = j.at("rmse_y").get<double>();
  r.n_rows = j.at("n_rows").get<long>();
  r.ridge_lambda = j.at("ridge_lambda").get<double>();
  r.well_posed = j.value("well_posed", true);
}

void TrainingSet::add_row(std::span<const double> features, double u, double v,
                          int trial_id) {
  if (static_cast<int>(features.size()) != p_)
    throw ConfigError("training row has " + std::to_string(features.size()) +
                      " features, expected " + std::to_string(p_));
  features_.insert(features_.end(), features.begin(), features.end());
  u_.push_back(u);
  v_.push_back(v);
  trial_.push_back(trial_id);
}

Velocity DecoderModel::predict(std::span<const double> features) const {
  if (features.size() != axis_x.size())
    throw ConfigError("feature vector has length " +
                      std::to_string(features.size()) + ", model expects " +
                      std::to_string(axis_x.size()));
  Velocity out;
  for (std::size_t i = 0; i < features.size(); ++i) {
    out.u += axis_x[i] * features[i];
    out.v += axis_y[i] * features[i];
  }
  return out;
}

void DecoderModel::check_config(const SignalConfig& stream_cfg) const {
  if (!(stream_cfg == cfg))
    throw ConfigError(
        "signal configuration differs from the one the decoder was fit on");
}

void DecoderModel::validate() const {
  cfg.validate();
  const auto p = static_cast<std::size_t>(cfg.feature_length());
  if (axis_x.size() != p || axis_y.size() != p)
    throw ConfigError("coefficient vectors must have length " +
                      std::to_string(p));
  check_finite(axis_x, "axis_x");
  check_finite(axis_y, "axis_y");
}

void to_json(nlohmann::json& j, const DecoderModel& m) {
  j = nlohmann::json{{"format_version", DecoderModel::kFormatVersion},
                     {"config", m.cfg},
                     {"axis_x", m.axis_x},
                     {"axis_y", m.axis_y},
                     {"fit_report", m.fit_report}};
}

void from_json(const nlohmann::json& j, DecoderModel& m) {
  try {
    if (!j.contains("format_version") ||
        j.at("format_version").get<int>() != DecoderModel::kFormatVersion)
      throw ConfigError("unsupported model format_version");
    m.cfg = j.at("config").get<SignalConfig>();
    m.axis_x = j.at("axis_x").get<std::vector<double>>();
    m.axis_y = j.at("axis_y").get<std::vector<double>>();
    m.fit_report = j.at("fit_report").get<FitReport>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
  m.validate();
}

DecoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("model " + path.string() + ": " + e.what());
  }
  return j.get<DecoderModel>();
}

void save_model(const DecoderModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFault("cannot write model " + path.string());
  out << nlohmann::json(model).dump(2) << '\n';
}

DecoderModel fit(const TrainingSet& ts, const SignalConfig& cfg,
                 double ridge_lambda) {
  cfg.validate();
  if (!(ridge_lambda >= 0.0) || !std::isfinite(ridge_lambda))
    throw ConfigError("ridge_lambda must be a nonnegative finite number");
  const int p = ts.feature_length();
  if (p != cfg.feature_length())
    throw ConfigError("training features do not match the signal config");
  if (ts.empty()) throw EmptyTrainingError("training set is empty");
  const long n = ts.rows();
  if (ridge_lambda == 0.0 && n < p)
    throw SingularFitError("underdetermined system: " + std::to_string(n) +
                           " rows for " + std::to_string(p) +
                           " coefficients; use a positive ridge");

  const long aug = ridge_lambda > 0.0 ? p - 1 : 0;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + aug, p);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n + aug, 2);
  for (long r = 0; r < n; ++r) {
    const auto f = ts.features(r);
    for (int c = 0; c < p; ++c) a(r, c) = f[c];
    y(r, 0) = ts.u(r);
    y(r, 1) = ts.v(r);
  }
  if (!a.allFinite() || !y.allFinite())
    throw DataError("training set contains non-finite values");
  // Ridge rows sqrt(lambda) * e_c for every slope column; the intercept
  // column stays unpenalized.
  const double root = std::sqrt(ridge_lambda);
  for (long c = 1; c < p && aug > 0; ++c) a(n + c - 1, c) = root;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < p)
    throw SingularFitError("design matrix is rank deficient (rank " +
                           std::to_string(qr.rank()) + " of " +
                           std::to_string(p) + "); use a positive ridge");
  const Eigen::MatrixXd theta = qr.solve(y);

  DecoderModel model;
  model.cfg = cfg;
  model.axis_x.assign(theta.col(0).data(), theta.col(0).data() + p);
  model.axis_y.assign(theta.col(1).data(), theta.col(1).data() + p);
  check_finite(model.axis_x, "fitted axis_x");
  check_finite(model.axis_y, "fitted axis_y");
  try {
    model.fit_report = evaluate(model, ts);
  } catch (const UndefinedCorrelationError& e) {
    model.fit_report = e.partial();
  }
  model.fit_report.ridge_lambda = ridge_lambda;
  model.fit_report.well_posed = ts.well_posed();
  return model;
}

std::optional<double> pearson(std::span<const double> a,
                              std::span<const double> b) {
  const std::size_t n = a.size();
  if (n == 0 || b.size() != n) return std::nullopt;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double rmse(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return a.empty() ? 0.0 : std::sqrt(s / static_cast<double>(a.size()));
}

FitReport evaluate(const DecoderModel& model, const TrainingSet& ts) {
  if (ts.empty()) throw DataError("cannot evaluate on an empty training set");
  std::vector<double> pu(ts.rows()), pv(ts.rows());
  for (long r = 0; r < ts.rows(); ++r) {
    const auto vel = model.predict(ts.features(r));
    pu[r] = vel.u;
    pv[r] = vel.v;
  }
  FitReport rep;
  rep.n_rows = ts.rows();
  rep.ridge_lambda = model.fit_report.ridge_lambda;
  rep.well_posed = ts.well_posed();
  rep.rmse_x = rmse(ts.observed_u(), pu);
  rep.rmse_y = rmse(ts.observed_v(), pv);
  rep.pearson_r_x = pearson(ts.observed_u(), pu);
  rep.pearson_r_y = pearson(ts.observed_v(), pv);
  // Either series constant leaves r undefined.
  if (!rep.pearson_r_x || !rep.pearson_r_y) throw UndefinedCorrelationError(rep);
  return rep;
}

TrainingSet assemble_training_set(std::span<const SampleFrame> frames,
                                  const SignalConfig& cfg, bool apply_filter,
                                  std::span<const TrainingTrial> trials,
                                  std::span<const ReferenceSample> reference) {
  cfg.validate();
  if (trials.empty()) throw EmptyTrainingError("recording has no training trials");
  std::unordered_map<SampleIndex, std::size_t> ref_at;
  ref_at.reserve(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) ref_at[reference[i].t] = i;

  TrainingSet ts(cfg.feature_length());
  BandFilter filter(cfg);
  LagWindow window(cfg);
  std::vector<double> features(cfg.feature_length());
  std::size_t trial_pos = 0;
  bool in_trial = false;
  for (const auto& raw : frames) {
    check_frame(raw, cfg.n_channels);
    SampleFrame frame = apply_filter ? filter.step(raw) : raw;
    while (trial_pos < trials.size() && frame.t >= trials[trial_pos].end) {
      ++trial_pos;
      in_trial = false;
    }
    if (trial_pos >= trials.size()) break;
    const auto& trial = trials[trial_pos];
    if (frame.t < trial.begin) continue;
    if (!in_trial) {
      window.clear();
      in_trial = true;
    }
    window.push(std::move(frame));
    if (!window.warm()) continue;
    const SampleIndex t = window.newest().t;
    const auto it = ref_at.find(t);
    if (it == ref_at.end())
      throw DataError("no reference velocity for training sample t=" +
                      std::to_string(t));
    window.feature_vector(features);
    ts.add_row(features, reference[it->second].u, reference[it->second].v,
               trial.id);
  }
  if (ts.empty()) throw EmptyTrainingError("training trials produced no rows");
  return ts;
}

}  // namespace cortexloop
