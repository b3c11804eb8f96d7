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

#include <filesystem>

#include "exlab/network.hpp"

namespace exlab {

// Checkpoint layout (all integers and reals little-endian, bit-exact across
// platforms):
//   magic   "EXLB"            4 bytes
//   version u32               currently 1
//   layers  u32
//   per layer: in u32, out u32, activation u32
//   per layer: weights (out*in f64), bias (out f64)

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Network& net, const std::filesystem::path& path);

/// Throws FormatError on bad magic/version/truncation, DimensionError when
/// the declared layer widths do not chain.
Network load_checkpoint(const std::filesystem::path& path);

}  // namespace exlab
