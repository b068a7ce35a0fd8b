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

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "fedorch/kv_config.hpp"
#include "fedorch/resource_vector.hpp"

namespace fedorch {

inline constexpr std::string_view kAdminGroup = "admin";

struct TokenRecord {
  std::string token_id;
  std::string subject;
  std::set<std::string> groups;
  SimTime issued_at = 0;
  SimTime expires_at = 0;
  bool revoked = false;
};

struct PolicyRule {
  std::string group;
  std::string provider_id;
  bool permit = true;
};

/// Group -> provider rules. Absent and deny rules both deny.
class Policy {
 public:
  /// Parses `permit <group> <provider>` lines (and `deny`).
  static Policy parse(std::string_view text);
  static Policy from(const KvConfig &cfg);

  /// Raises kConfigError on a second rule for the same (group, provider).
  void add(PolicyRule rule);
  /// Adds or replaces the rule for (group, provider).
  void put(PolicyRule rule);
  bool permits(const std::string &group, const std::string &provider_id) const;
  std::vector<PolicyRule> rules() const;

 private:
  std::map<std::pair<std::string, std::string>, bool> rules_;
};

enum class CredentialKind { kSshKey, kUserPass };
std::string_view to_string(CredentialKind k);

struct TranslatedCredential {
  CredentialKind kind;
  std::string subject;
  std::string payload;
  SimTime valid_until = 0;
};

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Opaque bearer tokens with group membership and expiry, default-deny
/// provider authorisation, and translation into site-local credentials.
class IamLite {
 public:
  explicit IamLite(std::uint64_t seed = 0, Policy policy = {});

  Policy &policy() { return policy_; }
  const Policy &policy() const { return policy_; }

  /// Token ids derive from (seed, issue counter), so replays match.
  TokenRecord issue_token(const std::string &subject, std::set<std::string> groups, SimTime ttl_s, SimTime t);
  /// Valid iff known, not revoked and t < expires_at. Raises kUnknownToken,
  /// kRevoked or kExpired.
  TokenRecord validate(const std::string &token_id, SimTime t) const;
  void revoke(const std::string &token_id);

  bool authorize(const TokenRecord &token, const std::string &provider_id) const;
  TranslatedCredential translate(const TokenRecord &token, CredentialKind kind, SimTime t) const;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  Policy policy_;
  std::map<std::string, TokenRecord> tokens_;
};

}  // namespace fedorch
