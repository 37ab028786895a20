// Copyright 2026 The starbell Authors
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

#include <stdexcept>
#include <string>

namespace starbell {

/// Base class for all starbell errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or malformed input (config files, CLI arguments).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Structurally valid input whose values violate a domain invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Physicality or consistency violation detected inside the numerics
/// (non-PSD operator, dimension mismatch, empty statistics slice).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace starbell
