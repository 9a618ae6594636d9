// Copyright 2026 The SDMF Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SDMF_ERRORS_HPP_
#define SDMF_ERRORS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdmf {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed rating input. `line()` is 1-based; 0 when not line specific.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A budget evaluation hit a 0/1 boundary probability.
class InfiniteBudget : public Error {
 public:
  using Error::Error;
};

// Randomized-response calibration produced probabilities outside [0, 1].
class InfeasibleCalibration : public Error {
 public:
  InfeasibleCalibration(std::string bound, const std::string& what)
      : Error(what), bound_(std::move(bound)) {}
  // Names the violated bound, e.g. "p >= 0" or "q <= 1".
  const std::string& bound() const { return bound_; }

 private:
  std::string bound_;
};

// The rejection sampler could not land inside (-alpha, alpha).
class DegenerateBound : public Error {
 public:
  using Error::Error;
};

// Wire-format violation.
class CodecError : public Error {
 public:
  using Error::Error;
};

// A networked round did not complete before its deadline.
class RoundAborted : public Error {
 public:
  using Error::Error;
};

// Non-fatal conditions (skipped users, clamped budgets, ...) are reported
// through a process-wide sink. The default writes to stderr.
using WarningSink = std::function<void(std::string_view)>;

namespace internal {
inline std::mutex& warning_mutex() {
  static std::mutex mu;
  return mu;
}
inline WarningSink& warning_sink_slot() {
  static WarningSink sink = [](std::string_view msg) {
    std::cerr << "warning: " << msg << '\n';
  };
  return sink;
}
}  // namespace internal

// Installs `sink` and returns the previous one.
inline WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(internal::warning_mutex());
  WarningSink previous = std::move(internal::warning_sink_slot());
  internal::warning_sink_slot() = std::move(sink);
  return previous;
}

inline void warn(std::string_view message) {
  std::lock_guard<std::mutex> lock(internal::warning_mutex());
  if (internal::warning_sink_slot()) internal::warning_sink_slot()(message);
}

}  // namespace sdmf

#endif  // SDMF_ERRORS_HPP_
