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

#include "fedorch/provider_ranker.hpp"

#include <algorithm>
#include <set>

namespace fedorch {

RankerConfig RankerConfig::from(const KvConfig &cfg) {
  RankerConfig out;
  if (const auto *e = cfg.find("w_sla")) out.w_sla = KvConfig::decimal(*e);
  if (const auto *e = cfg.find("w_avail")) out.w_avail = KvConfig::decimal(*e);
  if (const auto *e = cfg.find("w_lat")) out.w_lat = KvConfig::decimal(*e);
  if (const auto *e = cfg.find("w_data")) out.w_data = KvConfig::decimal(*e);
  out.check();
  return out;
}

void RankerConfig::check() const {
  if (w_sla < 0 || w_avail < 0 || w_lat < 0 || w_data < 0) {
    throw Error(Errc::kConfigError, "ranker weights must be non-negative");
  }
  if (!(w_sla + w_avail + w_lat + w_data > 0)) {
    throw Error(Errc::kConfigError, "ranker weights must not all be zero");
  }
}

PreferenceList::PreferenceList(std::vector<std::string> ids) : ids_(std::move(ids)) {
  std::set<std::string> seen;
  for (const auto &id : ids_) {
    if (!seen.insert(id).second) throw Error(Errc::kConfigError, "duplicate provider '" + id + "' in preferences");
  }
}

PreferenceBook PreferenceBook::from(const KvConfig &cfg) {
  PreferenceBook book;
  for (const auto &e : cfg.with_prefix("prefs.")) {
    book.set(e.key.substr(6), PreferenceList(KvConfig::list(e)));
  }
  return book;
}

std::optional<PreferenceList> PreferenceBook::lookup(const std::string &user,
                                                     std::span<const std::string> groups) const {
  if (auto it = by_scope_.find(user); it != by_scope_.end()) return it->second;
  std::vector<std::string> sorted(groups.begin(), groups.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto &g : sorted) {
    if (auto it = by_scope_.find(g); it != by_scope_.end()) return it->second;
  }
  return std::nullopt;
}

std::vector<double> normalize(std::span<const double> values) {
  if (values.empty()) throw Error(Errc::kEmptyInput, "normalize needs at least one value");
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double min = *lo, max = *hi;
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(max == min ? 1.0 : (v - min) / (max - min));
  return out;
}

double score(const ProviderSnapshot &s, const NormalizedContext &ctx, const RankerConfig &c) {
  return c.w_sla * ctx.sla_norm + c.w_avail * s.availability + c.w_lat * (1.0 - ctx.latency_norm) +
         c.w_data * s.data_locality;
}

std::vector<RankedProvider> rank_providers_detailed(std::span<const ProviderSnapshot> candidates,
                                                    const RankerConfig &config,
                                                    const std::optional<PreferenceList> &prefs) {
  if (candidates.empty()) throw Error(Errc::kEmptyCandidates, "no candidate providers");

  std::vector<double> sla, latency;
  for (const auto &c : candidates) {
    sla.push_back(c.sla_rank);
    latency.push_back(c.latency_ms);
  }
  auto sla_norm = normalize(sla);
  auto lat_norm = normalize(latency);

  std::vector<RankedProvider> scored;
  for (size_t i = 0; i < candidates.size(); ++i) {
    scored.push_back({candidates[i].provider_id, score(candidates[i], {sla_norm[i], lat_norm[i]}, config), false});
  }

  std::vector<RankedProvider> out;
  if (prefs) {
    for (const auto &id : prefs->ids()) {
      auto it = std::find_if(scored.begin(), scored.end(), [&](const RankedProvider &r) { return r.provider_id == id; });
      if (it == scored.end()) continue;
      it->preferred = true;
      out.push_back(*it);
    }
  }
  std::vector<RankedProvider> rest;
  for (const auto &r : scored) {
    if (!r.preferred) rest.push_back(r);
  }
  std::sort(rest.begin(), rest.end(), [](const RankedProvider &a, const RankedProvider &b) {
    if (a.score != b.score) return a.score > b.score;
    return a.provider_id < b.provider_id;
  });
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

std::vector<std::string> rank_providers(std::span<const ProviderSnapshot> candidates, const RankerConfig &config,
                                        const std::optional<PreferenceList> &prefs) {
  std::vector<std::string> ids;
  for (auto &r : rank_providers_detailed(candidates, config, prefs)) ids.push_back(std::move(r.provider_id));
  return ids;
}

}  // namespace fedorch
