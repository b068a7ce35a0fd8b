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

#include "fedorch/iam_lite.hpp"

#include <openssl/evp.h>

#include <array>

namespace fedorch {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::kInvariantViolation, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string_view to_string(CredentialKind k) { return k == CredentialKind::kSshKey ? "ssh_key" : "user_pass"; }

Policy Policy::parse(std::string_view text) { return from(KvConfig::parse(text)); }

Policy Policy::from(const KvConfig &cfg) {
  Policy p;
  for (const auto &line : cfg.policy_lines()) {
    try {
      p.add({line.group, line.provider_id, line.permit});
    } catch (const Error &) {
      throw Error(Errc::kConfigError, "line " + std::to_string(line.line) + ": duplicate rule for (" + line.group +
                                          ", " + line.provider_id + ")");
    }
  }
  return p;
}

void Policy::add(PolicyRule rule) {
  auto key = std::make_pair(rule.group, rule.provider_id);
  if (rules_.count(key)) {
    throw Error(Errc::kConfigError, "duplicate rule for (" + rule.group + ", " + rule.provider_id + ")");
  }
  rules_[key] = rule.permit;
}

void Policy::put(PolicyRule rule) { rules_[{rule.group, rule.provider_id}] = rule.permit; }

bool Policy::permits(const std::string &group, const std::string &provider_id) const {
  auto it = rules_.find({group, provider_id});
  return it != rules_.end() && it->second;
}

std::vector<PolicyRule> Policy::rules() const {
  std::vector<PolicyRule> out;
  for (const auto &[k, permit] : rules_) out.push_back({k.first, k.second, permit});
  return out;
}

IamLite::IamLite(std::uint64_t seed, Policy policy) : seed_(seed), policy_(std::move(policy)) {}

TokenRecord IamLite::issue_token(const std::string &subject, std::set<std::string> groups, SimTime ttl_s, SimTime t) {
  if (ttl_s <= 0) throw Error(Errc::kInvalidArgument, "token ttl must be positive");
  ++counter_;
  TokenRecord rec;
  rec.token_id = "tok-" + sha256_hex("token:" + std::to_string(seed_) + ":" + std::to_string(counter_)).substr(0, 24);
  rec.subject = subject;
  rec.groups = std::move(groups);
  rec.issued_at = t;
  rec.expires_at = t + ttl_s;
  tokens_[rec.token_id] = rec;
  return rec;
}

TokenRecord IamLite::validate(const std::string &token_id, SimTime t) const {
  auto it = tokens_.find(token_id);
  if (it == tokens_.end()) throw Error(Errc::kUnknownToken, "unknown token");
  if (it->second.revoked) throw Error(Errc::kRevoked, "token revoked");
  if (t >= it->second.expires_at) throw Error(Errc::kExpired, "token expired");
  return it->second;
}

void IamLite::revoke(const std::string &token_id) {
  auto it = tokens_.find(token_id);
  if (it == tokens_.end()) throw Error(Errc::kUnknownToken, "unknown token");
  it->second.revoked = true;
}

bool IamLite::authorize(const TokenRecord &token, const std::string &provider_id) const {
  for (const auto &g : token.groups) {
    if (policy_.permits(g, provider_id)) return true;
  }
  return false;
}

TranslatedCredential IamLite::translate(const TokenRecord &token, CredentialKind kind, SimTime t) const {
  TokenRecord live = validate(token.token_id, t);
  TranslatedCredential cred;
  cred.kind = kind;
  cred.subject = live.subject;
  cred.payload = sha256_hex(live.token_id + "|" + std::string(to_string(kind)));
  cred.valid_until = live.expires_at;
  return cred;
}

}  // namespace fedorch
