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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace exlab {

using Digest256 = std::array<std::uint8_t, 32>;

/// FIPS 180-4 SHA-256 of the message; bit-exact everywhere.
Digest256 sha256(std::span<const std::uint8_t> message);

std::string to_hex(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> from_hex(const std::string& hex);

/// SHA-256 hex of a string payload (input hashing for query logs).
std::string sha256_hex(std::span<const std::uint8_t> message);

}  // namespace exlab
