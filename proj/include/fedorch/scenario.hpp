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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedorch/elasticity.hpp"
#include "fedorch/kv_config.hpp"
#include "fedorch/orchestrator.hpp"

namespace fedorch {

struct PhysicalNode {
  std::string node_id;
  ResourceVector capacity;
  NodeRole role = NodeRole::kCloud;
};

struct ProviderSpec {
  std::string provider_id;
  std::vector<PhysicalNode> nodes;
  double availability = 1;
  double latency_ms = 0;
};

struct UserSpec {
  std::string user;
  std::string group;
  double weight = 1;
};

struct ScenarioEvent {
  enum class Kind { kSubmitTemplate, kDeleteDeployment, kFailSite, kRevokeToken, kSubmitJob, kSwitchRole };

  Kind kind = Kind::kSubmitTemplate;
  SimTime at = 0;
  int line = 0;

  std::string user;             // submit, delete (optional), revoke
  std::string name;             // submit: reference for later events
  std::string template_path;    // submit, as written
  std::string template_text;    // submit, loaded
  std::string ref;              // delete, job: deployment name
  std::optional<SimTime> duration_s;  // submit (auto-delete), fail_site, job
  SimTime jitter_s = 0;         // fail_site: extra recovery delay drawn from the seed
  std::string provider;         // fail_site, switch_role
  std::string node;             // switch_role
  NodeRole target = NodeRole::kBatch;  // switch_role
  ResourceVector resources;     // job
};

std::string_view to_string(ScenarioEvent::Kind k);

/// A self-contained simulation input. Configuration keys are the same as
/// the key/value config files; inline scenario blocks are folded into
/// `config` at load time.
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  SimTime horizon_s = 0;
  KvConfig config;
  std::vector<ProviderSpec> providers;
  std::vector<SLARecord> slas;
  std::vector<DataCatalogEntry> datasets;
  std::vector<UserSpec> users;
  std::vector<ScenarioEvent> events;

  /// `base` supplies defaults (e.g. from ORCH_CONFIG); file settings win.
  static Scenario load(const std::string &path, const KvConfig &base = {});
  /// Relative template paths resolve against `base_dir`.
  static Scenario parse(std::string_view text, const std::string &base_dir, const KvConfig &base = {});

  /// Raises kScenarioError for unsorted events or unresolved references.
  void check() const;

  const UserSpec *find_user(const std::string &user) const;
  const ProviderSpec *find_provider(const std::string &provider_id) const;
};

}  // namespace fedorch
