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

#include "cortexloop/scenario.hpp"

#include <cmath>
#include <fstream>

#include "cortexloop/errors.hpp"

namespace cortexloop {

int ProtocolParams::resolved_run_length(TestMode mode) const {
  if (run_length) return *run_length;
  return mode == TestMode::kFull2D ? 12 : 6;
}

int ProtocolParams::resolved_test_trials(TestMode mode) const {
  return test_trials ? *test_trials : resolved_run_length(mode);
}

void ProtocolParams::validate(const SignalConfig& cfg) const {
  if (training_trials_per_axis < 0)
    throw ConfigError("training_trials_per_axis must be nonnegative");
  if (!(training_trial_s > 0.0)) throw ConfigError("training_trial_s must be positive");
  if (!(inter_trial_s >= 0.0)) throw ConfigError("inter_trial_s must be nonnegative");
  if (!(ridge_lambda >= 0.0)) throw ConfigError("ridge_lambda must be nonnegative");
  if (test_trials && *test_trials < 0) throw ConfigError("test_trials must be nonnegative");
  if (run_length && *run_length <= 0) throw ConfigError("run_length must be positive");
  if (!(timeout_s > 0.0)) throw ConfigError("timeout_s must be positive");
  if (!(geometry.radius > 0.0 && geometry.radius < 0.5))
    throw ConfigError("target_radius must lie in (0, 0.5)");
  if (!(geometry.distance > 0.0 && geometry.distance <= 1.0))
    throw ConfigError("target_distance must lie in (0, 1]");
  if (!(gain > 0.0)) throw ConfigError("gain must be positive");
  if (!(dead_zone >= 0.0)) throw ConfigError("dead_zone must be nonnegative");
  if (!(update_hz > 0.0 && update_hz <= cfg.sample_rate_hz))
    throw ConfigError("update_hz must lie in (0, sample_rate_hz]");
  const double ratio = cfg.sample_rate_hz / update_hz;
  if (std::abs(ratio - std::round(ratio)) > 1e-9)
    throw ConfigError("sample_rate_hz must be an integer multiple of update_hz");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t Seeds::mixing_seed() const { return mixing.value_or(derive_seed(master, 0)); }
std::uint64_t Seeds::noise_seed() const { return noise.value_or(derive_seed(master, 1)); }
std::uint64_t Seeds::policy_seed() const { return policy.value_or(derive_seed(master, 2)); }
std::uint64_t Seeds::targets_seed() const { return targets.value_or(derive_seed(master, 3)); }
std::uint64_t Seeds::reference_seed() const {
  return reference.value_or(derive_seed(master, 4));
}

void Scenario::validate() const {
  signal_config.validate();
  policy.validate();
  protocol.validate(signal_config);
  if (subject.mixing &&
      static_cast<int>(subject.mixing->size()) != signal_config.n_channels)
    throw ConfigError("subject mixing must have n_channels rows");
  if (!(subject.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be nonnegative");
  if (subject.intent_lag < 0) throw ConfigError("intent_lag must be nonnegative");
  if (!(subject.asymmetry > 0.0)) throw ConfigError("asymmetry must be positive");
  if (!(subject.background >= 0.0)) throw ConfigError("background must be nonnegative");
}

SubjectParams Scenario::resolved_subject() const {
  SubjectParams p = subject;
  if (!p.mixing && !p.mixing_seed) p.mixing_seed = seeds.mixing_seed();
  return p;
}

namespace {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::json& j, const Scenario& s) {
  const SubjectParams subj = s.resolved_subject();
  nlohmann::json subject = {{"noise_sigma", subj.noise_sigma},
                            {"intent_lag", subj.intent_lag},
                            {"asymmetry", subj.asymmetry},
                            {"background", subj.background},
                            {"background_pole_hz", subj.background_pole_hz}};
  if (subj.mixing) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : *subj.mixing) rows.push_back({r[0], r[1]});
    subject["mixing"] = rows;
  } else {
    subject["mixing_seed"] = *subj.mixing_seed;
  }
  const auto& p = s.protocol;
  nlohmann::json protocol = {
      {"training_trials_per_axis", p.training_trials_per_axis},
      {"training_trial_s", p.training_trial_s},
      {"inter_trial_s", p.inter_trial_s},
      {"reference_speed_rms", p.reference.speed_rms},
      {"reference_bandwidth_hz", p.reference.bandwidth_hz},
      {"reference_bound", p.reference.bound},
      {"ridge_lambda", p.ridge_lambda},
      {"test_trials", p.test_trials ? nlohmann::json(*p.test_trials) : nlohmann::json(nullptr)},
      {"run_length", p.run_length ? nlohmann::json(*p.run_length) : nlohmann::json(nullptr)},
      {"timeout_s", p.timeout_s},
      {"target_distance", p.geometry.distance},
      {"target_radius", p.geometry.radius},
      {"gain", p.gain},
      {"update_hz", p.update_hz},
      {"dead_zone", p.dead_zone}};
  j = nlohmann::json{
      {"signal_config", s.signal_config},
      {"subject", subject},
      {"policy",
       {{"effort", s.policy.effort},
        {"reaction_delay_s", s.policy.reaction_delay_s},
        {"wrong_direction_prob", s.policy.wrong_direction_prob},
        {"decision_interval_s", s.policy.decision_interval_s}}},
      {"protocol", protocol},
      {"seeds",
       {{"master", s.seeds.master},
        {"mixing", s.seeds.mixing_seed()},
        {"noise", s.seeds.noise_seed()},
        {"policy", s.seeds.policy_seed()},
        {"targets", s.seeds.targets_seed()},
        {"reference", s.seeds.reference_seed()}}},
      {"source", s.source == SourceKind::kSynthetic ? "synthetic" : "surrogate"},
      {"acquisition_filter", s.acquisition_filter == FilterMode::kAuto ? "auto"
                             : s.acquisition_filter == FilterMode::kOn ? "on"
                                                                       : "off"}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  Scenario out;
  try {
    if (j.contains("signal_config"))
      out.signal_config = j.at("signal_config").get<SignalConfig>();
    if (j.contains("subject")) {
      const auto& js = j.at("subject");
      if (js.contains("mixing") && !js.at("mixing").is_null()) {
        MixingMatrix m;
        for (const auto& row : js.at("mixing")) {
          if (!row.is_array() || row.size() != 2)
            throw ConfigError("mixing rows must be [u, v] pairs");
          m.push_back({row[0].get<double>(), row[1].get<double>()});
        }
        out.subject.mixing = std::move(m);
      }
      read_opt(js, "mixing_seed", out.subject.mixing_seed);
      read_opt(js, "noise_sigma", out.subject.noise_sigma);
      read_opt(js, "intent_lag", out.subject.intent_lag);
      read_opt(js, "asymmetry", out.subject.asymmetry);
      read_opt(js, "background", out.subject.background);
      read_opt(js, "background_pole_hz", out.subject.background_pole_hz);
    }
    if (j.contains("policy")) {
      const auto& jp = j.at("policy");
      read_opt(jp, "effort", out.policy.effort);
      read_opt(jp, "reaction_delay_s", out.policy.reaction_delay_s);
      read_opt(jp, "wrong_direction_prob", out.policy.wrong_direction_prob);
      read_opt(jp, "decision_interval_s", out.policy.decision_interval_s);
    }
    if (j.contains("protocol")) {
      const auto& jp = j.at("protocol");
      auto& p = out.protocol;
      read_opt(jp, "training_trials_per_axis", p.training_trials_per_axis);
      read_opt(jp, "training_trial_s", p.training_trial_s);
      read_opt(jp, "inter_trial_s", p.inter_trial_s);
      read_opt(jp, "reference_speed_rms", p.reference.speed_rms);
      read_opt(jp, "reference_bandwidth_hz", p.reference.bandwidth_hz);
      read_opt(jp, "reference_bound", p.reference.bound);
      read_opt(jp, "ridge_lambda", p.ridge_lambda);
      read_opt(jp, "test_trials", p.test_trials);
      read_opt(jp, "run_length", p.run_length);
      read_opt(jp, "timeout_s", p.timeout_s);
      read_opt(jp, "target_distance", p.geometry.distance);
      read_opt(jp, "target_radius", p.geometry.radius);
      read_opt(jp, "gain", p.gain);
      read_opt(jp, "update_hz", p.update_hz);
      read_opt(jp, "dead_zone", p.dead_zone);
    }
    if (j.contains("seeds")) {
      const auto& jz = j.at("seeds");
      read_opt(jz, "master", out.seeds.master);
      read_opt(jz, "mixing", out.seeds.mixing);
      read_opt(jz, "noise", out.seeds.noise);
      read_opt(jz, "policy", out.seeds.policy);
      read_opt(jz, "targets", out.seeds.targets);
      read_opt(jz, "reference", out.seeds.reference);
    }
    if (j.contains("source")) {
      const auto src = j.at("source").get<std::string>();
      if (src == "synthetic") out.source = SourceKind::kSynthetic;
      else if (src == "surrogate") out.source = SourceKind::kSurrogate;
      else throw ConfigError("source must be 'synthetic' or 'surrogate'");
    }
    if (j.contains("acquisition_filter")) {
      const auto f = j.at("acquisition_filter").get<std::string>();
      if (f == "auto") out.acquisition_filter = FilterMode::kAuto;
      else if (f == "on") out.acquisition_filter = FilterMode::kOn;
      else if (f == "off") out.acquisition_filter = FilterMode::kOff;
      else throw ConfigError("acquisition_filter must be auto, on or off");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  out.validate();
  s = std::move(out);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  try {
    return nlohmann::json::parse(in).get<Scenario>();
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("scenario " + path.string() + ": " + e.what());
  }
}

}  // namespace cortexloop
