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

#include "cortexloop/signal_io.hpp"

#include <charconv>
#include <cmath>

#include "cortexloop/errors.hpp"

namespace cortexloop {

std::string to_string(SignalDomain d) {
  return d == SignalDomain::kRaw ? "raw" : "acquired";
}

SignalDomain signal_domain_from_string(std::string_view s) {
  if (s == "raw") return SignalDomain::kRaw;
  if (s == "acquired") return SignalDomain::kAcquired;
  throw ConfigError("unknown signal domain '" + std::string(s) + "'");
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    return std::nullopt;
  return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

SignalFileWriter::SignalFileWriter(const std::filesystem::path& path,
                                   const SignalConfig& cfg, SignalDomain domain)
    : cfg_(cfg), out_(path) {
  if (!out_) throw RuntimeFault("cannot open " + path.string() + " for writing");
  nlohmann::json sidecar = cfg;
  sidecar["domain"] = to_string(domain);
  out_ << "# " << sidecar.dump() << '\n' << 't';
  for (int n = 1; n <= cfg.n_channels; ++n) out_ << ",ch" << n;
  out_ << '\n';
}

void SignalFileWriter::write(const SampleFrame& frame) {
  check_frame(frame, cfg_.n_channels);
  line_ = std::to_string(frame.t);
  for (double v : frame.voltages) {
    line_ += ',';
    line_ += format_double(v);
  }
  line_ += '\n';
  out_ << line_;
}

SignalFileReader::SignalFileReader(const std::filesystem::path& path)
    : in_(path) {
  if (!in_) throw ConfigError("cannot open signal file " + path.string());
  std::string line;
  if (!std::getline(in_, line)) throw ParseError("empty signal file", 1);
  ++line_no_;
  if (line.rfind('#', 0) != 0)
    throw ParseError("missing '#' JSON sidecar header", line_no_);
  try {
    const auto sidecar = nlohmann::json::parse(line.substr(1));
    cfg_ = sidecar.get<SignalConfig>();
    domain_ = signal_domain_from_string(sidecar.value("domain", "raw"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad sidecar JSON: ") + e.what(), line_no_);
  }
  cfg_.validate();
  if (!std::getline(in_, line)) throw ParseError("missing column header", 2);
  ++line_no_;
  std::string expected = "t";
  for (int n = 1; n <= cfg_.n_channels; ++n) expected += ",ch" + std::to_string(n);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected)
    throw ParseError("column header does not match n_channels=" +
                         std::to_string(cfg_.n_channels),
                     line_no_);
}

std::optional<SampleFrame> SignalFileReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != cfg_.n_channels + 1)
      throw ParseError("expected " + std::to_string(cfg_.n_channels + 1) +
                           " fields, found " + std::to_string(fields.size()),
                       line_no_);
    SampleFrame frame;
    auto [ptr, ec] = std::from_chars(
        fields[0].data(), fields[0].data() + fields[0].size(), frame.t);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size())
      throw ParseError("bad sample index '" + std::string(fields[0]) + "'",
                       line_no_);
    frame.voltages.reserve(cfg_.n_channels);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto v = parse_double(fields[i]);
      if (!v || !std::isfinite(*v))
        throw ParseError("bad voltage '" + std::string(fields[i]) + "' in column " +
                             std::to_string(i),
                         line_no_);
      frame.voltages.push_back(*v);
    }
    return frame;
  }
  return std::nullopt;
}

std::vector<SampleFrame> read_signal_file(const std::filesystem::path& path,
                                          SignalConfig* cfg,
                                          SignalDomain* domain) {
  SignalFileReader reader(path);
  if (cfg) *cfg = reader.config();
  if (domain) *domain = reader.domain();
  std::vector<SampleFrame> frames;
  while (auto f = reader.next()) frames.push_back(std::move(*f));
  return frames;
}

}  // namespace cortexloop
