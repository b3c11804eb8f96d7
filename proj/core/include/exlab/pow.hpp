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

#include <atomic>
#include <cstdint>
#include <string>
#include <vector>

#include "exlab/errors.hpp"
#include "exlab/sha256.hpp"

namespace exlab {

/// HashCash-style puzzle: find a suffix such that
/// sha256(challenge || suffix) has >= difficulty_bits leading zero bits.
struct Puzzle {
  std::vector<std::uint8_t> challenge;
  int difficulty_bits = 0;

  std::string to_json() const;
  static Puzzle from_json(const std::string& json);
};

/// difficulty = min(base + increment * detector_flags, cap).
struct DifficultyPolicy {
  int base_bits = 8;
  int increment_bits_per_flag = 2;
  int cap_bits = 16;

  void validate() const;
  int difficulty_for(int detector_flags) const;
};

/// Serialized nonce generation; challenge layout is
/// account bytes || nonce (8 bytes LE) || query counter (8 bytes LE).
class PuzzleIssuer {
 public:
  Puzzle make_puzzle(const std::string& account,
                     const DifficultyPolicy& policy, int detector_flags,
                     std::uint64_t query_counter);

 private:
  std::atomic<std::uint64_t> next_nonce_{0};
};

int leading_zero_bits(const Digest256& digest);

bool verify(const Puzzle& puzzle, std::span<const std::uint8_t> suffix);

struct SolveResult {
  std::vector<std::uint8_t> suffix;
  std::uint64_t attempts = 0;
};

/// Incrementing-counter search (8-byte LE suffix). Throws BudgetError when
/// max_attempts is exhausted.
SolveResult solve(const Puzzle& puzzle, std::uint64_t max_attempts);

/// Thrown by a gated API when a query arrives without a valid solution.
class AccessDeniedError : public Error {
 public:
  AccessDeniedError(std::string message, Puzzle puzzle)
      : Error(std::move(message)), puzzle_(std::move(puzzle)) {}
  const Puzzle& puzzle() const { return puzzle_; }

 private:
  Puzzle puzzle_;
};

}  // namespace exlab
