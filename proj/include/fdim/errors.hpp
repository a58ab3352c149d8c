/*
 * Copyright 2026 The FDIM Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace fdimq {

// Error categories. Each maps onto one CLI exit code (see exit_code()).
enum class ErrorKind {
  kConfig,          // bad flags, bad config values, unknown keys
  kContract,        // API misuse: shape/length mismatch, missing inputs
  kDependency,      // external tool unavailable
  kMalformedInput,  // truncated files, unparsable manifests
  kAlignment,       // reference/distorted mismatch that cannot be repaired
  kGeometry,        // image too small for the network
  kNumeric,         // non-finite values, degenerate statistics
  kDegenerate,      // zero-variance data for correlation/fits
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define FDIM_DEFINE_ERROR(Name, Kind)                                 \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(Kind, what) {}    \
  };

FDIM_DEFINE_ERROR(ConfigError, ErrorKind::kConfig)
FDIM_DEFINE_ERROR(ContractError, ErrorKind::kContract)
FDIM_DEFINE_ERROR(DependencyError, ErrorKind::kDependency)
FDIM_DEFINE_ERROR(MalformedInputError, ErrorKind::kMalformedInput)
FDIM_DEFINE_ERROR(AlignmentError, ErrorKind::kAlignment)
FDIM_DEFINE_ERROR(GeometryError, ErrorKind::kGeometry)
FDIM_DEFINE_ERROR(NumericError, ErrorKind::kNumeric)
FDIM_DEFINE_ERROR(DegenerateError, ErrorKind::kDegenerate)
FDIM_DEFINE_ERROR(IoError, ErrorKind::kIo)

#undef FDIM_DEFINE_ERROR

// Stable process exit codes used by the command-line tool.
//   0 ok, 1 internal/I-O, 2 configuration, 3 dependency, 4 malformed input,
//   5 non-finite training loss / numeric failure.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kContract:
      return 2;
    case ErrorKind::kDependency:
      return 3;
    case ErrorKind::kMalformedInput:
    case ErrorKind::kAlignment:
    case ErrorKind::kGeometry:
      return 4;
    case ErrorKind::kNumeric:
    case ErrorKind::kDegenerate:
      return 5;
    case ErrorKind::kIo:
      return 1;
  }
  return 1;
}

}  // namespace fdimq
