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

// Queue-driven power management of worker nodes, and the partition director
// that moves physical nodes between the batch and cloud pools through
// draining states.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedorch/kv_config.hpp"
#include "fedorch/resource_vector.hpp"

namespace fedorch {

enum class PowerState { kOff, kBooting, kOn };
enum class NodeRole { kBatch, kCloud, kDrainingToBatch, kDrainingToCloud };
enum class Pool { kBatch, kCloud, kDraining };

std::string_view to_string(PowerState p);
std::string_view to_string(NodeRole r);
std::optional<NodeRole> parse_node_role(std::string_view s);

struct NodeRecord {
  std::string node_id;
  ResourceVector capacity;
  PowerState power = PowerState::kOff;
  SimTime ready_at = 0;  // valid while kBooting
  bool busy = false;
  SimTime idle_since = 0;  // valid while !busy
  NodeRole role = NodeRole::kCloud;

  bool draining() const { return role == NodeRole::kDrainingToBatch || role == NodeRole::kDrainingToCloud; }
  Pool pool() const;
};

struct ElasticPolicy {
  SimTime t_idle_s = 300;
  SimTime boot_delay_s = 30;
  std::int64_t min_nodes = 0;
  std::int64_t max_nodes = 0;

  /// Reads t_idle_s, boot_delay_s, min_nodes, max_nodes over `defaults`.
  static ElasticPolicy from(const KvConfig &cfg, ElasticPolicy defaults);
  static ElasticPolicy from(const KvConfig &cfg);
  void check() const;
};

struct ElasticAction {
  enum class Kind { kPowerOn, kPowerOff };
  Kind kind;
  std::string node_id;

  friend bool operator==(const ElasticAction &, const ElasticAction &) = default;
};

/// Power decisions for one pool of nodes at time t.
///
/// Powers on Off nodes (largest capacity first, then by id) until the
/// capacity of booting and newly started nodes covers `queued_demand`, or
/// until max_nodes are active; tops the pool up to min_nodes. Powers off
/// On+Idle nodes idle for at least t_idle_s, last id first, while at least
/// min_nodes stay active. Pure: the caller applies the actions.
std::vector<ElasticAction> reconcile(std::span<const NodeRecord> nodes, const ResourceVector &queued_demand, SimTime t,
                                     const ElasticPolicy &policy);

struct RoleTransition {
  std::string node_id;
  NodeRole from;
  NodeRole to;
  bool completed = false;
  SimTime t = 0;
};

class PartitionDirector {
 public:
  void add_node(NodeRecord node);

  /// Idle or Off nodes switch at once; busy nodes drain first. Draining
  /// nodes belong to neither pool. Raises kUnknownNode, kAlreadyTransitioning.
  RoleTransition switch_role(const std::string &node_id, NodeRole target, SimTime t);

  void mark_busy(const std::string &node_id, SimTime t);
  /// Completes a pending drain when the node becomes idle.
  std::optional<RoleTransition> mark_idle(const std::string &node_id, SimTime t);

  const NodeRecord &node(const std::string &node_id) const;
  const std::map<std::string, NodeRecord> &nodes() const { return nodes_; }
  bool accepts_work(const std::string &node_id) const;

  ResourceVector pool_capacity(Pool pool) const;
  ResourceVector total_capacity() const;
  /// Raises kInvariantViolation unless the pools partition the nodes.
  void audit() const;

 private:
  NodeRecord &lookup(const std::string &node_id);
  std::map<std::string, NodeRecord> nodes_;
};

}  // namespace fedorch
