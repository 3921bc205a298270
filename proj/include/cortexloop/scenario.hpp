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

#ifndef CORTEXLOOP_SCENARIO_HPP_
#define CORTEXLOOP_SCENARIO_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cortexloop/signal.hpp"
#include "cortexloop/subject.hpp"
#include "cortexloop/task.hpp"

namespace cortexloop {

/// Timing, geometry and counts for the three-phase protocol.
struct ProtocolParams {
  int training_trials_per_axis = 5;
  double training_trial_s = 60.0;
  double inter_trial_s = 2.0;
  ReferenceParams reference;
  double ridge_lambda = 0.0;
  /// Total test trials; defaults to run_length.
  std::optional<int> test_trials;
  /// Trials per run; defaults to 6 in 1D and 12 in 2D.
  std::optional<int> run_length;
  double timeout_s = 15.0;
  TargetGeometry geometry;
  double gain = 1.0;
  double update_hz = 16.0;
  double dead_zone = 0.02;

  int resolved_run_length(TestMode mode) const;
  int resolved_test_trials(TestMode mode) const;
  void validate(const SignalConfig& cfg) const;
};

struct Seeds {
  std::uint64_t master = 1;
  std::optional<std::uint64_t> mixing, noise, policy, targets, reference;

  std::uint64_t mixing_seed() const;
  std::uint64_t noise_seed() const;
  std::uint64_t policy_seed() const;
  std::uint64_t targets_seed() const;
  std::uint64_t reference_seed() const;
};

/// SplitMix64 finalizer; derives independent stream seeds from the master.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

enum class SourceKind { kSynthetic, kSurrogate };
enum class FilterMode { kAuto, kOn, kOff };

/// The unit of reproducible experiments.
struct Scenario {
  SignalConfig signal_config;
  SubjectParams subject;
  IntentPolicy policy;
  ProtocolParams protocol;
  Seeds seeds;
  SourceKind source = SourceKind::kSynthetic;
  FilterMode acquisition_filter = FilterMode::kAuto;

  void validate() const;
  /// Subject params with the mixing seed resolved from `seeds`.
  SubjectParams resolved_subject() const;
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

/// Throws ConfigError/ParseError.
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace cortexloop

#endif  // CORTEXLOOP_SCENARIO_HPP_
