// Copyright 2026 The hpid Authors
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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hpid {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (e.g. t >= 1 for
/// the backward kernel, a negative spectrum).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: wrong sizes, non-finite values, asymmetric matrices.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The universal probe is undefined at this time (t too close to 0).
class DegenerateProbeError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// A quadrature grid does not contain the integrand's mass.
class AccuracyError : public Error {
 public:
  using Error::Error;
};

/// Dataset file does not match the declared layout.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

  /// Byte offset for binary files, 1-based row number for CSV files.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// The SDE state became non-finite.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, long step, double state_norm)
      : Error(what + " at step " + std::to_string(step) + " (|x| = " + std::to_string(state_norm) + ")"),
        step_(step),
        state_norm_(state_norm) {}

  long step() const noexcept { return step_; }
  double state_norm() const noexcept { return state_norm_; }

 private:
  long step_;
  double state_norm_;
};

}  // namespace hpid
