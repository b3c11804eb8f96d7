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

#include "exlab/pow.hpp"

#include <algorithm>
#include <cstdio>

namespace exlab {

std::string Puzzle::to_json() const {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "\"difficulty_bits\": %d", difficulty_bits);
  return "{\"challenge_hex\": \"" + to_hex(challenge) + "\", " + buf + "}";
}

Puzzle Puzzle::from_json(const std::string& json) {
  auto field = [&json](const std::string& key) -> std::string {
    const auto kpos = json.find("\"" + key + "\"");
    if (kpos == std::string::npos) {
      throw FormatError("Puzzle::from_json: missing field " + key);
    }
    auto pos = json.find(':', kpos);
    if (pos == std::string::npos) {
      throw FormatError("Puzzle::from_json: malformed field " + key);
    }
    ++pos;
    while (pos < json.size() && (json[pos] == ' ' || json[pos] == '"')) ++pos;
    auto end = json.find_first_of(",}\"", pos);
    if (end == std::string::npos) {
      throw FormatError("Puzzle::from_json: malformed field " + key);
    }
    return json.substr(pos, end - pos);
  };
  Puzzle p;
  p.challenge = from_hex(field("challenge_hex"));
  p.difficulty_bits = std::stoi(field("difficulty_bits"));
  return p;
}

void DifficultyPolicy::validate() const {
  if (base_bits < 0 || base_bits > cap_bits || cap_bits > 30 ||
      increment_bits_per_flag < 0) {
    throw ParameterError(
        "DifficultyPolicy: require 0 <= base <= cap <= 30 and increment >= 0");
  }
}

int DifficultyPolicy::difficulty_for(int detector_flags) const {
  validate();
  if (detector_flags < 0) {
    throw ParameterError("DifficultyPolicy: negative flag count");
  }
  const long raw =
      base_bits + static_cast<long>(increment_bits_per_flag) * detector_flags;
  return static_cast<int>(std::min<long>(raw, cap_bits));
}

Puzzle PuzzleIssuer::make_puzzle(const std::string& account,
                                 const DifficultyPolicy& policy,
                                 int detector_flags,
                                 std::uint64_t query_counter) {
  Puzzle p;
  p.difficulty_bits = policy.difficulty_for(detector_flags);
  p.challenge.assign(account.begin(), account.end());
  const std::uint64_t nonce = next_nonce_.fetch_add(1);
  for (int i = 0; i < 8; ++i) {
    p.challenge.push_back(static_cast<std::uint8_t>(nonce >> (8 * i)));
  }
  for (int i = 0; i < 8; ++i) {
    p.challenge.push_back(static_cast<std::uint8_t>(query_counter >> (8 * i)));
  }
  return p;
}

int leading_zero_bits(const Digest256& digest) {
  int bits = 0;
  for (std::uint8_t byte : digest) {
    if (byte == 0) {
      bits += 8;
      continue;
    }
    for (int i = 7; i >= 0; --i) {
      if (byte & (1u << i)) return bits;
      ++bits;
    }
  }
  return bits;
}

bool verify(const Puzzle& puzzle, std::span<const std::uint8_t> suffix) {
  std::vector<std::uint8_t> message = puzzle.challenge;
  message.insert(message.end(), suffix.begin(), suffix.end());
  return leading_zero_bits(sha256(message)) >= puzzle.difficulty_bits;
}

SolveResult solve(const Puzzle& puzzle, std::uint64_t max_attempts) {
  if (max_attempts < 1) throw ParameterError("solve: max_attempts must be >= 1");
  std::vector<std::uint8_t> message = puzzle.challenge;
  const std::size_t base = message.size();
  message.resize(base + 8);
  for (std::uint64_t counter = 0; counter < max_attempts; ++counter) {
    for (int i = 0; i < 8; ++i) {
      message[base + i] = static_cast<std::uint8_t>(counter >> (8 * i));
    }
    if (leading_zero_bits(sha256(message)) >= puzzle.difficulty_bits) {
      return SolveResult{
          std::vector<std::uint8_t>(message.begin() + base, message.end()),
          counter + 1};
    }
  }
  throw BudgetError("solve: attempt budget exhausted at difficulty " +
                    std::to_string(puzzle.difficulty_bits));
}

}  // namespace exlab
