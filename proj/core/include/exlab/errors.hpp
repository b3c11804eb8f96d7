// Copyright 2026 The exlab Authors
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

namespace exlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/layer width disagreement.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Rejected argument or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A row lacks the positives/negatives a loss requires.
class PairingError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf reached a public surface.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed file (checkpoint, CSV, config).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A trace or token no longer matches the state it was produced from.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Missing or unreadable file.
class FileError : public Error {
 public:
  using Error::Error;
};

/// Attempt budget exhausted (puzzle solving).
class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Bad CLI invocation or config file (exit code 2 territory).
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace exlab
