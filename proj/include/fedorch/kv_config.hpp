// Copyright 2026 The fedorch Authors.
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

// Line-oriented `key = value` configuration used for ranker weights and
// preferences, scheduler settings, elasticity policy and `permit` rules.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedorch/resource_vector.hpp"

namespace fedorch {

struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct PolicyLine {
  bool permit = true;
  std::string group;
  std::string provider_id;
  int line = 0;
};

class KvConfig {
 public:
  static KvConfig parse(std::string_view text);
  static KvConfig load(const std::string &path);

  const std::vector<KvEntry> &entries() const { return entries_; }
  const std::vector<PolicyLine> &policy_lines() const { return policy_; }

  const KvEntry *find(std::string_view key) const;
  /// Entries whose key starts with `prefix` (e.g. "prefs.").
  std::vector<KvEntry> with_prefix(std::string_view prefix) const;

  /// Adds or replaces a key; used when layering scenario settings over a file.
  void set(std::string key, std::string value);
  void add_policy(PolicyLine line) { policy_.push_back(std::move(line)); }

  /// Rejects keys that no consumer understands.
  void check_known_keys() const;

  static double decimal(const KvEntry &e);
  static std::int64_t integer(const KvEntry &e);
  static bool boolean(const KvEntry &e);
  static std::vector<std::string> list(const KvEntry &e);
  /// "cpus,mem_mb,disk_gb"
  static ResourceVector triple(const KvEntry &e);

 private:
  std::vector<KvEntry> entries_;
  std::vector<PolicyLine> policy_;
};

}  // namespace fedorch
