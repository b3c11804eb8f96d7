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

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace exlab {

/// Flat key-path configuration: one `key.path = value` per line, `#`
/// comments. Keys are validated against the published schema; typed getter
/// errors name the offending field path. Canonical text (sorted lines)
/// hashes to the run's provenance id.
class Config {
 public:
  static Config parse_file(const std::filesystem::path& path);
  static Config parse_text(const std::string& text);

  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);

  std::string get_str(const std::string& key,
                      const std::string& fallback) const;
  int get_int(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_real(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Required string field; UsageError naming the key when absent.
  std::string require_str(const std::string& key) const;

  const std::map<std::string, std::string>& entries() const {
    return entries_;
  }

  std::string canonical_text() const;
  /// First 16 hex chars of sha256(canonical_text()).
  std::string hash_hex() const;

  /// Throws UsageError on any key outside the schema (catches typos).
  void validate_keys() const;

  /// True when the key names a numeric field a sweep may address.
  static bool is_numeric_key(const std::string& key);

 private:
  std::map<std::string, std::string> entries_;
};

}  // namespace exlab
