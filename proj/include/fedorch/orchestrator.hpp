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

// Deployment workflow: authenticate, parse and validate the template, gather
// SLA / monitoring / data-catalog information, rank providers once, then try
// them in order until one accepts.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fedorch/iam_lite.hpp"
#include "fedorch/provider_ranker.hpp"
#include "fedorch/template_model.hpp"

namespace fedorch {

enum class DeploymentState { kCreateInProgress, kCreateComplete, kCreateFailed, kDeleteInProgress, kDeleted };

std::string_view to_string(DeploymentState s);
bool legal_transition(DeploymentState from, DeploymentState to);

struct Attempt {
  std::string provider_id;
  bool ok = false;
  std::string reason;
};

struct StateChange {
  DeploymentState from;
  DeploymentState to;
  SimTime t = 0;
};

struct DeploymentRecord {
  std::string uuid;
  std::string owner;
  std::set<std::string> owner_groups;
  DeploymentTemplate tmpl;
  DeploymentState state = DeploymentState::kCreateInProgress;
  std::optional<std::string> chosen_site;
  std::vector<Attempt> attempts;
  std::map<std::string, std::string> outputs;
  std::vector<std::string> ranked;  // frozen at placement
  std::vector<StateChange> history;
  // node name -> instance id on chosen_site
  std::map<std::string, std::string> instances;
  SimTime created_at = 0;
  SimTime updated_at = 0;
};

struct SLARecord {
  std::string provider_id;
  std::string group;
  double sla_rank = 0;
  ResourceVector guaranteed;
};

struct DataCatalogEntry {
  std::string dataset_id;
  std::string provider_id;
  std::int64_t bytes_present = 0;
  std::int64_t bytes_total = 1;
};

/// Monitoring view of one site.
struct SiteStatus {
  std::string provider_id;
  double availability = 1;
  double latency_ms = 0;
  ResourceVector free_capacity;
};

struct SiteAccepted {
  std::map<std::string, std::string> instances;  // node name -> instance id
};
struct SiteFailed {
  std::string reason;
};
using SiteEvent = std::variant<SiteAccepted, SiteFailed>;

/// What the orchestrator needs from the infrastructure layer.
class SiteGateway {
 public:
  virtual ~SiteGateway() = default;
  virtual std::vector<SiteStatus> monitor(SimTime t) = 0;
  /// Creates every resource of the deployment at `provider_id` or nothing.
  virtual SiteEvent deploy(const std::string &provider_id, const DeploymentRecord &record, SimTime t) = 0;
  virtual void undeploy(const std::string &provider_id, const DeploymentRecord &record, SimTime t) = 0;
};

class Orchestrator {
 public:
  Orchestrator(IamLite &iam, SiteGateway &gateway, RankerConfig ranker = {}, PreferenceBook prefs = {},
               std::uint64_t seed = 0);

  void add_sla(SLARecord sla);
  void add_dataset(DataCatalogEntry entry);
  const std::vector<SLARecord> &slas() const { return slas_; }

  /// Raises kAuthError or TemplateError without creating a record. Otherwise
  /// the record is created, placed and driven through the ranked sites at the
  /// same time t; the returned uuid may name a CREATE_FAILED record.
  /// `prefs` replaces the configured preferences for this request.
  std::string create_deployment(std::string_view template_text, const std::string &token_id, SimTime t,
                                const std::optional<PreferenceList> &prefs = std::nullopt);

  /// Ranked candidate providers. Raises kNoEligibleProvider after moving the
  /// record to CREATE_FAILED.
  std::vector<std::string> place(const std::string &uuid, SimTime t,
                                 const std::optional<PreferenceList> &prefs = std::nullopt);
  /// Snapshots used by place(); exposed for inspection.
  std::vector<ProviderSnapshot> candidate_snapshots(const DeploymentRecord &record, SimTime t);

  const DeploymentRecord &advance(const std::string &uuid, const SiteEvent &event, SimTime t);

  /// Owner or admin only. Raises kNotFound, kAuthError, kIllegalTransition.
  DeploymentRecord delete_deployment(const std::string &uuid, const std::string &token_id, SimTime t);
  /// System-initiated delete (job completion); no token check.
  DeploymentRecord retire_deployment(const std::string &uuid, SimTime t);

  DeploymentRecord get_deployment(const std::string &uuid) const;
  std::vector<DeploymentRecord> list_deployments(const std::optional<std::string> &owner = std::nullopt) const;

 private:
  DeploymentRecord &lookup(const std::string &uuid);
  void transition(DeploymentRecord &rec, DeploymentState to, SimTime t);
  double data_locality(const std::vector<std::string> &datasets, const std::string &provider_id) const;
  std::string next_uuid();
  void drive(DeploymentRecord &rec, SimTime t);
  DeploymentRecord tear_down(DeploymentRecord &rec, SimTime t);

  IamLite &iam_;
  SiteGateway &gateway_;
  RankerConfig ranker_;
  PreferenceBook prefs_;
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  std::vector<SLARecord> slas_;
  std::vector<DataCatalogEntry> catalog_;
  std::map<std::string, DeploymentRecord> records_;
};

}  // namespace fedorch
