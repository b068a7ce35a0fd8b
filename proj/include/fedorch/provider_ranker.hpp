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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedorch/kv_config.hpp"
#include "fedorch/resource_vector.hpp"

namespace fedorch {

struct ProviderSnapshot {
  std::string provider_id;
  double sla_rank = 0;       // higher is better
  double availability = 1;   // [0, 1]
  double latency_ms = 0;
  ResourceVector free_capacity;
  double data_locality = 1;  // [0, 1]
};

struct RankerConfig {
  double w_sla = 1;
  double w_avail = 1;
  double w_lat = 1;
  double w_data = 1;

  /// Reads w_sla/w_avail/w_lat/w_data; absent keys keep the neutral 1.0.
  static RankerConfig from(const KvConfig &cfg);
  /// Raises kConfigError on negative weights or an all-zero sum.
  void check() const;
};

/// Ordered provider ids for one user or group; no duplicates.
class PreferenceList {
 public:
  PreferenceList() = default;
  explicit PreferenceList(std::vector<std::string> ids);

  const std::vector<std::string> &ids() const { return ids_; }
  bool empty() const { return ids_.empty(); }

 private:
  std::vector<std::string> ids_;
};

/// Preferences keyed by user or group name (`prefs.<scope> = [..]`).
class PreferenceBook {
 public:
  static PreferenceBook from(const KvConfig &cfg);

  void set(const std::string &scope, PreferenceList prefs) { by_scope_[scope] = std::move(prefs); }
  /// User scope wins over group scopes; among groups, the first in sorted
  /// order that has a list.
  std::optional<PreferenceList> lookup(const std::string &user, std::span<const std::string> groups) const;

 private:
  std::map<std::string, PreferenceList> by_scope_;
};

/// Min-max normalisation to [0, 1]; an all-equal input maps to all 1.0.
std::vector<double> normalize(std::span<const double> values);

/// Per-provider terms that depend on the whole candidate set.
struct NormalizedContext {
  double sla_norm = 1;
  double latency_norm = 1;
};

double score(const ProviderSnapshot &snapshot, const NormalizedContext &ctx, const RankerConfig &config);

struct RankedProvider {
  std::string provider_id;
  double score = 0;
  bool preferred = false;
};

/// Preferred providers first in preference order, the rest by descending
/// score, ties by provider id. Raises kEmptyCandidates.
std::vector<RankedProvider> rank_providers_detailed(std::span<const ProviderSnapshot> candidates,
                                                    const RankerConfig &config,
                                                    const std::optional<PreferenceList> &prefs);

std::vector<std::string> rank_providers(std::span<const ProviderSnapshot> candidates, const RankerConfig &config,
                                        const std::optional<PreferenceList> &prefs);

}  // namespace fedorch
