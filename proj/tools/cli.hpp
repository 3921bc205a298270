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

#ifndef CORTEXLOOP_TOOLS_CLI_HPP_
#define CORTEXLOOP_TOOLS_CLI_HPP_

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cortexloop::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the real process environment.
std::optional<std::string> process_env(const std::string& name);

/// Environment variable bound to a long flag: "--max-speed" maps to
/// CORTEXLOOP_MAX_SPEED.
std::string env_name(const std::string& flag);

/// Parses `args` (without the program name), applies the merge order
/// defaults < scenario file < flags < environment, and runs the subcommand.
/// Returns the process exit code.
int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out,
                       std::ostream& err, const EnvLookup& env = process_env);

}  // namespace cortexloop::cli

#endif  // CORTEXLOOP_TOOLS_CLI_HPP_
