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

#ifndef CORTEXLOOP_ERRORS_HPP_
#define CORTEXLOOP_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace cortexloop {

// Two families: validation errors (bad input or configuration, CLI exit 2)
// and runtime faults (CLI exit 3).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RuntimeFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Channel-count mismatch, out-of-range parameter, incompatible config.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Malformed file content; carries the 1-based line number when known.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, long line = 0)
      : ValidationError(line > 0 ? what + " (line " + std::to_string(line) + ")"
                                 : what),
        line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

/// Non-finite sample; names the channel and sample index.
class SignalError : public RuntimeFault {
 public:
  SignalError(int channel, unsigned long long t)
      : RuntimeFault("non-finite voltage on channel " + std::to_string(channel) +
                     " at t=" + std::to_string(t)),
        channel_(channel),
        t_(t) {}
  int channel() const { return channel_; }
  unsigned long long t() const { return t_; }

 private:
  int channel_;
  unsigned long long t_;
};

class SequencingError : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

class NotReadyError : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

class EmptyTrainingError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularFitError : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

class DataError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptySummaryError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ProtocolTransitionError : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

/// Robot datagram rejections. Counted by the actuator, never fatal.
class DatagramError : public std::runtime_error {
 public:
  enum class Kind { kFraming, kProtocol, kUnknownCommand };
  DatagramError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class AbortedSessionError : public RuntimeFault {
 public:
  using RuntimeFault::RuntimeFault;
};

}  // namespace cortexloop

#endif  // CORTEXLOOP_ERRORS_HPP_
