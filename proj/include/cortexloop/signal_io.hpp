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

#ifndef CORTEXLOOP_SIGNAL_IO_HPP_
#define CORTEXLOOP_SIGNAL_IO_HPP_

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cortexloop/signal.hpp"

namespace cortexloop {

/// Whether a stream still needs the acquisition band filter ("raw") or was
/// produced already band-limited ("acquired").
enum class SignalDomain { kRaw, kAcquired };

std::string to_string(SignalDomain d);
SignalDomain signal_domain_from_string(std::string_view s);

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
/// Strict parse of a whole field; nullopt on any leftover or malformed text.
std::optional<double> parse_double(std::string_view s);
std::vector<std::string_view> split_csv_line(std::string_view line);

/// Signal CSV: a `#`-prefixed JSON sidecar line with the SignalConfig (plus
/// "domain"), a header `t,ch1,...,chN`, then one row per frame.
class SignalFileWriter {
 public:
  SignalFileWriter(const std::filesystem::path& path, const SignalConfig& cfg,
                   SignalDomain domain);
  void write(const SampleFrame& frame);
  void flush() { out_.flush(); }

 private:
  SignalConfig cfg_;
  std::ofstream out_;
  std::string line_;
};

class SignalFileReader {
 public:
  explicit SignalFileReader(const std::filesystem::path& path);

  const SignalConfig& config() const { return cfg_; }
  SignalDomain domain() const { return domain_; }

  /// Next frame in file order, or nullopt at end of stream. Throws
  /// ParseError naming the line for malformed rows.
  std::optional<SampleFrame> next();
  long line_number() const { return line_no_; }

 private:
  std::ifstream in_;
  SignalConfig cfg_;
  SignalDomain domain_ = SignalDomain::kRaw;
  long line_no_ = 0;
};

/// Convenience: whole-file load.
std::vector<SampleFrame> read_signal_file(const std::filesystem::path& path,
                                          SignalConfig* cfg = nullptr,
                                          SignalDomain* domain = nullptr);

}  // namespace cortexloop

#endif  // CORTEXLOOP_SIGNAL_IO_HPP_
