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

// Per-site admission: group quotas, a persistent queue ordered by fair-share
// priority, and termination of preemptible instances in favour of normal
// requests or higher bids.

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fedorch/kv_config.hpp"
#include "fedorch/resource_vector.hpp"

namespace fedorch {

enum class InstanceClass { kNormal, kPreemptible };

struct InstanceRequest {
  std::string request_id;
  std::string user;
  std::string group;
  ResourceVector resources;
  InstanceClass klass = InstanceClass::kNormal;
  double bid = 0;  // meaningful for kPreemptible only
  SimTime arrival_time = 0;

  bool preemptible() const { return klass == InstanceClass::kPreemptible; }
};

struct RunningInstance {
  InstanceRequest request;
  SimTime start_time = 0;
  std::string node_id;

  const std::string &id() const { return request.request_id; }
};

/// Decayed per-user cpu-second usage and the priority derived from it.
///
/// U_u(t) = sum_i c_i * 2^((t_i - t) / H), priority = w_u / (1 + U_u(t)).
/// Users never seen before have w = 1 and U = 0.
class UsageLedger {
 public:
  explicit UsageLedger(SimTime half_life_s = 3600);

  SimTime half_life() const { return half_life_; }
  void set_weight(const std::string &user, double weight);
  double weight(const std::string &user) const;

  /// Adds cpu-seconds at time t. Time must not run backwards per user.
  void accrue(const std::string &user, double cpu_seconds, SimTime t);
  double usage(const std::string &user, SimTime t) const;
  double priority(const std::string &user, SimTime t) const;

 private:
  struct Account {
    double weight = 1;
    double usage = 0;
    SimTime last_update = 0;
  };
  SimTime half_life_;
  std::map<std::string, Account> accounts_;
};

struct SchedulerConfig {
  SimTime half_life_s = 3600;
  bool backfill = true;
  std::map<std::string, double> weights;
  std::map<std::string, ResourceVector> quotas;

  /// Reads half_life_s, backfill, weights.<user>, quota.<group>.
  static SchedulerConfig from(const KvConfig &cfg);
};

struct Decision {
  enum class Kind { kStarted, kQueued, kRejectedQuota };
  Kind kind = Kind::kQueued;
  std::optional<RunningInstance> instance;  // kStarted
  std::vector<RunningInstance> victims;     // terminated to make room
  size_t position = 0;                      // kQueued
};

struct SchedulerEvent {
  enum class Kind { kStarted, kPreempted, kReleased };
  Kind kind;
  RunningInstance instance;
  SimTime t = 0;
  std::int64_t cpu_seconds = 0;  // accrued on kPreempted / kReleased
};

/// Smallest set of preemptible instances whose resources, added to `free`,
/// fit the request. Among equally small sets the one with the lowest bids
/// wins, then the youngest start times, then request ids. Normal requests
/// may take any preemptible; preemptible requests only strictly lower bids.
/// Returns an empty set when `free` already fits; raises kInfeasible.
std::vector<RunningInstance> select_victims(const InstanceRequest &request, const ResourceVector &free,
                                            std::span<const RunningInstance> running);

class SiteScheduler {
 public:
  SiteScheduler(std::string site_id, SchedulerConfig config);

  const std::string &site_id() const { return site_id_; }
  const SchedulerConfig &config() const { return config_; }
  UsageLedger &ledger() { return ledger_; }
  const UsageLedger &ledger() const { return ledger_; }

  // Node membership. Only schedulable nodes receive new instances or give
  // up preemptible victims; every owned node counts toward capacity.
  void add_node(const std::string &node_id, const ResourceVector &capacity, bool schedulable = true);
  void remove_node(const std::string &node_id);
  void set_schedulable(const std::string &node_id, bool schedulable);
  bool has_node(const std::string &node_id) const { return nodes_.count(node_id) > 0; }
  bool node_busy(const std::string &node_id) const;
  ResourceVector node_free(const std::string &node_id) const;
  std::vector<std::string> node_ids() const;

  Decision submit(const InstanceRequest &request, SimTime t);
  std::vector<RunningInstance> dispatch(SimTime t);
  /// Returns the capacity, accrues cpus x runtime to the owner, dispatches.
  std::vector<RunningInstance> release(const std::string &request_id, SimTime t);
  /// Drops a queued request; false if it is not queued.
  bool cancel(const std::string &request_id);

  ResourceVector capacity() const;
  ResourceVector free() const;
  ResourceVector schedulable_free() const;
  /// schedulable_free() plus what preemptible instances hold on schedulable
  /// nodes: the room a normal request could obtain.
  ResourceVector reclaimable_free() const;
  ResourceVector running_total() const;
  ResourceVector group_usage(const std::string &group) const;

  const std::map<std::string, RunningInstance> &running() const { return running_; }
  bool is_running(const std::string &request_id) const { return running_.count(request_id) > 0; }
  bool is_queued(const std::string &request_id) const;
  /// Queue in current dispatch order at time t.
  std::vector<InstanceRequest> queue_order(SimTime t) const;
  size_t queue_size() const { return queue_.size(); }
  ResourceVector queued_demand() const;

  /// Started / preempted / released records since the last drain.
  std::vector<SchedulerEvent> drain_events();

  /// Raises kInvariantViolation if conservation or a quota is broken.
  void audit() const;

 private:
  struct Node {
    ResourceVector capacity;
    ResourceVector free;
    bool schedulable = true;
  };

  bool quota_allows(const InstanceRequest &request) const;
  std::optional<std::string> first_fit(const ResourceVector &demand) const;
  std::optional<RunningInstance> try_start(const InstanceRequest &request, SimTime t,
                                           std::vector<RunningInstance> *victims);
  RunningInstance start_on(const InstanceRequest &request, const std::string &node_id, SimTime t);
  void terminate(const std::string &request_id, SimTime t, SchedulerEvent::Kind kind);

  std::string site_id_;
  SchedulerConfig config_;
  UsageLedger ledger_;
  std::map<std::string, Node> nodes_;
  std::map<std::string, RunningInstance> running_;
  std::vector<InstanceRequest> queue_;
  std::set<std::string> seen_ids_;
  std::vector<SchedulerEvent> events_;
};

}  // namespace fedorch
