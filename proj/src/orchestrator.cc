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

#include "fedorch/orchestrator.hpp"

#include <algorithm>

namespace fedorch {

std::string_view to_string(DeploymentState s) {
  switch (s) {
    case DeploymentState::kCreateInProgress: return "CREATE_IN_PROGRESS";
    case DeploymentState::kCreateComplete: return "CREATE_COMPLETE";
    case DeploymentState::kCreateFailed: return "CREATE_FAILED";
    case DeploymentState::kDeleteInProgress: return "DELETE_IN_PROGRESS";
    case DeploymentState::kDeleted: return "DELETED";
  }
  return "?";
}

bool legal_transition(DeploymentState from, DeploymentState to) {
  using S = DeploymentState;
  switch (from) {
    case S::kCreateInProgress: return to == S::kCreateComplete || to == S::kCreateFailed;
    case S::kCreateComplete:
    case S::kCreateFailed: return to == S::kDeleteInProgress;
    case S::kDeleteInProgress: return to == S::kDeleted;
    case S::kDeleted: return false;
  }
  return false;
}

Orchestrator::Orchestrator(IamLite &iam, SiteGateway &gateway, RankerConfig ranker, PreferenceBook prefs,
                           std::uint64_t seed)
    : iam_(iam), gateway_(gateway), ranker_(ranker), prefs_(std::move(prefs)), seed_(seed) {
  ranker_.check();
}

void Orchestrator::add_sla(SLARecord sla) {
  if (sla.sla_rank < 0) throw Error(Errc::kConfigError, "sla_rank must be non-negative");
  slas_.push_back(std::move(sla));
}

void Orchestrator::add_dataset(DataCatalogEntry entry) {
  if (entry.bytes_total <= 0 || entry.bytes_present < 0 || entry.bytes_present > entry.bytes_total) {
    throw Error(Errc::kConfigError, "dataset '" + entry.dataset_id + "' needs 0 <= bytes_present <= bytes_total");
  }
  catalog_.push_back(std::move(entry));
}

std::string Orchestrator::next_uuid() {
  std::string h = sha256_hex("deployment:" + std::to_string(seed_) + ":" + std::to_string(++counter_));
  return h.substr(0, 8) + "-" + h.substr(8, 4) + "-" + h.substr(12, 4) + "-" + h.substr(16, 4) + "-" + h.substr(20, 12);
}

DeploymentRecord &Orchestrator::lookup(const std::string &uuid) {
  auto it = records_.find(uuid);
  if (it == records_.end()) throw Error(Errc::kNotFound, "deployment '" + uuid + "' not found");
  return it->second;
}

void Orchestrator::transition(DeploymentRecord &rec, DeploymentState to, SimTime t) {
  if (!legal_transition(rec.state, to)) {
    throw Error(Errc::kIllegalTransition, "deployment " + rec.uuid + ": " + std::string(to_string(rec.state)) +
                                              " -> " + std::string(to_string(to)));
  }
  rec.history.push_back({rec.state, to, t});
  rec.state = to;
  rec.updated_at = t;
}

std::string Orchestrator::create_deployment(std::string_view template_text, const std::string &token_id, SimTime t,
                                            const std::optional<PreferenceList> &prefs) {
  TokenRecord token;
  try {
    token = iam_.validate(token_id, t);
  } catch (const Error &e) {
    throw Error(Errc::kAuthError, "token rejected: " + std::string(e.name()));
  }

  DeploymentTemplate tmpl;
  try {
    tmpl = parse_template(template_text);
  } catch (const Error &e) {
    ValidationReport report;
    ViolationKind kind = e.code() == Errc::kCycleError ? ViolationKind::kCycle : ViolationKind::kUnparseable;
    report.violations.push_back({kind, std::string(e.name()), e.what()});
    throw TemplateError(std::move(report));
  }
  if (auto report = validate(tmpl); !report.ok()) throw TemplateError(std::move(report));

  DeploymentRecord rec;
  rec.uuid = next_uuid();
  rec.owner = token.subject;
  rec.owner_groups = token.groups;
  rec.tmpl = std::move(tmpl);
  rec.created_at = rec.updated_at = t;
  std::string uuid = rec.uuid;
  records_.emplace(uuid, std::move(rec));

  try {
    place(uuid, t, prefs);
  } catch (const Error &e) {
    if (e.code() != Errc::kNoEligibleProvider) throw;
    return uuid;
  }
  drive(lookup(uuid), t);
  return uuid;
}

double Orchestrator::data_locality(const std::vector<std::string> &datasets, const std::string &provider_id) const {
  std::int64_t present = 0, total = 0;
  for (const auto &d : datasets) {
    std::int64_t size = 0;
    for (const auto &e : catalog_) {
      if (e.dataset_id != d) continue;
      size = std::max(size, e.bytes_total);
      if (e.provider_id == provider_id) present += e.bytes_present;
    }
    total += size;
  }
  if (total == 0) return 1.0;
  return static_cast<double>(present) / static_cast<double>(total);
}

std::vector<ProviderSnapshot> Orchestrator::candidate_snapshots(const DeploymentRecord &rec, SimTime t) {
  TokenRecord owner;
  owner.subject = rec.owner;
  owner.groups = rec.owner_groups;
  const ResourceVector demand = aggregate_demand(rec.tmpl);
  const auto datasets = required_datasets(rec.tmpl);

  std::vector<ProviderSnapshot> out;
  for (const auto &site : gateway_.monitor(t)) {
    if (!iam_.authorize(owner, site.provider_id)) continue;
    std::optional<double> sla_rank;
    for (const auto &sla : slas_) {
      if (sla.provider_id != site.provider_id || !rec.owner_groups.count(sla.group)) continue;
      if (!iam_.policy().permits(sla.group, sla.provider_id)) continue;
      sla_rank = std::max(sla_rank.value_or(sla.sla_rank), sla.sla_rank);
    }
    if (!sla_rank || !fits(demand, site.free_capacity)) continue;
    ProviderSnapshot snap;
    snap.provider_id = site.provider_id;
    snap.sla_rank = *sla_rank;
    snap.availability = site.availability;
    snap.latency_ms = site.latency_ms;
    snap.free_capacity = site.free_capacity;
    snap.data_locality = data_locality(datasets, site.provider_id);
    out.push_back(std::move(snap));
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) { return a.provider_id < b.provider_id; });
  return out;
}

std::vector<std::string> Orchestrator::place(const std::string &uuid, SimTime t,
                                             const std::optional<PreferenceList> &prefs) {
  DeploymentRecord &rec = lookup(uuid);
  if (rec.state != DeploymentState::kCreateInProgress) {
    throw Error(Errc::kIllegalTransition, "deployment " + uuid + " is not being created");
  }
  auto candidates = candidate_snapshots(rec, t);
  if (candidates.empty()) {
    transition(rec, DeploymentState::kCreateFailed, t);
    throw Error(Errc::kNoEligibleProvider, "no eligible provider for deployment " + uuid);
  }
  std::vector<std::string> groups(rec.owner_groups.begin(), rec.owner_groups.end());
  rec.ranked = rank_providers(candidates, ranker_, prefs ? prefs : prefs_.lookup(rec.owner, groups));
  return rec.ranked;
}

const DeploymentRecord &Orchestrator::advance(const std::string &uuid, const SiteEvent &event, SimTime t) {
  DeploymentRecord &rec = lookup(uuid);
  if (rec.state != DeploymentState::kCreateInProgress) {
    throw Error(Errc::kIllegalTransition, "deployment " + uuid + " is " + std::string(to_string(rec.state)));
  }
  if (rec.attempts.size() >= rec.ranked.size()) {
    throw Error(Errc::kIllegalTransition, "deployment " + uuid + " has no site left to try");
  }
  const std::string site = rec.ranked[rec.attempts.size()];
  if (const auto *ok = std::get_if<SiteAccepted>(&event)) {
    rec.attempts.push_back({site, true, ""});
    rec.chosen_site = site;
    rec.instances = ok->instances;
    for (const auto &[name, node] : rec.tmpl.outputs) {
      auto it = ok->instances.find(node);
      rec.outputs[name] = site + "/" + node + "/" + (it == ok->instances.end() ? rec.uuid : it->second);
    }
    transition(rec, DeploymentState::kCreateComplete, t);
  } else {
    rec.attempts.push_back({site, false, std::get<SiteFailed>(event).reason});
    if (rec.attempts.size() == rec.ranked.size()) transition(rec, DeploymentState::kCreateFailed, t);
  }
  return rec;
}

void Orchestrator::drive(DeploymentRecord &rec, SimTime t) {
  while (rec.state == DeploymentState::kCreateInProgress) {
    const std::string &site = rec.ranked[rec.attempts.size()];
    advance(rec.uuid, gateway_.deploy(site, rec, t), t);
  }
}

DeploymentRecord Orchestrator::tear_down(DeploymentRecord &rec, SimTime t) {
  transition(rec, DeploymentState::kDeleteInProgress, t);
  if (rec.chosen_site) gateway_.undeploy(*rec.chosen_site, rec, t);
  transition(rec, DeploymentState::kDeleted, t);
  return rec;
}

DeploymentRecord Orchestrator::delete_deployment(const std::string &uuid, const std::string &token_id, SimTime t) {
  DeploymentRecord &rec = lookup(uuid);
  TokenRecord token;
  try {
    token = iam_.validate(token_id, t);
  } catch (const Error &e) {
    throw Error(Errc::kAuthError, "token rejected: " + std::string(e.name()));
  }
  if (token.subject != rec.owner && !token.groups.count(std::string(kAdminGroup))) {
    throw Error(Errc::kAuthError, token.subject + " may not delete deployment " + uuid);
  }
  return tear_down(rec, t);
}

DeploymentRecord Orchestrator::retire_deployment(const std::string &uuid, SimTime t) {
  return tear_down(lookup(uuid), t);
}

DeploymentRecord Orchestrator::get_deployment(const std::string &uuid) const {
  auto it = records_.find(uuid);
  if (it == records_.end()) throw Error(Errc::kNotFound, "deployment '" + uuid + "' not found");
  return it->second;
}

std::vector<DeploymentRecord> Orchestrator::list_deployments(const std::optional<std::string> &owner) const {
  std::vector<DeploymentRecord> out;
  for (const auto &[_, rec] : records_) {
    if (!owner || rec.owner == *owner) out.push_back(rec);
  }
  std::sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return a.uuid < b.uuid;
  });
  return out;
}

}  // namespace fedorch
