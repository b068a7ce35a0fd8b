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

#include "fedorch/elasticity.hpp"

#include <algorithm>

namespace fedorch {

namespace {

ResourceVector shortfall(const ResourceVector &need, const ResourceVector &have) {
  return {std::max<std::int64_t>(0, need.cpus - have.cpus), std::max<std::int64_t>(0, need.mem_mb - have.mem_mb),
          std::max<std::int64_t>(0, need.disk_gb - have.disk_gb)};
}

bool larger(const ResourceVector &a, const ResourceVector &b) {
  if (a.cpus != b.cpus) return a.cpus > b.cpus;
  if (a.mem_mb != b.mem_mb) return a.mem_mb > b.mem_mb;
  return a.disk_gb > b.disk_gb;
}

}  // namespace

std::string_view to_string(PowerState p) {
  switch (p) {
    case PowerState::kOff: return "off";
    case PowerState::kBooting: return "booting";
    case PowerState::kOn: return "on";
  }
  return "?";
}

std::string_view to_string(NodeRole r) {
  switch (r) {
    case NodeRole::kBatch: return "batch";
    case NodeRole::kCloud: return "cloud";
    case NodeRole::kDrainingToBatch: return "draining_to_batch";
    case NodeRole::kDrainingToCloud: return "draining_to_cloud";
  }
  return "?";
}

std::optional<NodeRole> parse_node_role(std::string_view s) {
  if (s == "batch") return NodeRole::kBatch;
  if (s == "cloud") return NodeRole::kCloud;
  return std::nullopt;
}

Pool NodeRecord::pool() const {
  switch (role) {
    case NodeRole::kBatch: return Pool::kBatch;
    case NodeRole::kCloud: return Pool::kCloud;
    default: return Pool::kDraining;
  }
}

ElasticPolicy ElasticPolicy::from(const KvConfig &cfg, ElasticPolicy p) {
  if (const auto *e = cfg.find("t_idle_s")) p.t_idle_s = KvConfig::integer(*e);
  if (const auto *e = cfg.find("boot_delay_s")) p.boot_delay_s = KvConfig::integer(*e);
  if (const auto *e = cfg.find("min_nodes")) p.min_nodes = KvConfig::integer(*e);
  if (const auto *e = cfg.find("max_nodes")) p.max_nodes = KvConfig::integer(*e);
  p.check();
  return p;
}

ElasticPolicy ElasticPolicy::from(const KvConfig &cfg) { return from(cfg, ElasticPolicy{}); }

void ElasticPolicy::check() const {
  if (t_idle_s < 0 || boot_delay_s < 0) throw Error(Errc::kConfigError, "elastic delays must be non-negative");
  if (min_nodes < 0 || min_nodes > max_nodes) throw Error(Errc::kConfigError, "need 0 <= min_nodes <= max_nodes");
}

std::vector<ElasticAction> reconcile(std::span<const NodeRecord> nodes, const ResourceVector &queued_demand, SimTime t,
                                     const ElasticPolicy &policy) {
  std::vector<ElasticAction> actions;
  std::int64_t active = 0;
  ResourceVector booting;
  std::vector<const NodeRecord *> off;
  for (const auto &n : nodes) {
    if (n.power == PowerState::kOff) {
      off.push_back(&n);
      continue;
    }
    ++active;
    if (n.power == PowerState::kBooting) booting += n.capacity;
  }

  std::vector<const NodeRecord *> by_size = off;
  std::stable_sort(by_size.begin(), by_size.end(), [](const NodeRecord *a, const NodeRecord *b) {
    if (a->capacity != b->capacity) return larger(a->capacity, b->capacity);
    return a->node_id < b->node_id;
  });
  std::vector<bool> used(by_size.size(), false);

  ResourceVector remaining = shortfall(queued_demand, booting);
  for (size_t i = 0; i < by_size.size() && !remaining.is_zero() && active < policy.max_nodes; ++i) {
    if (!by_size[i]->capacity.any_positive()) continue;
    actions.push_back({ElasticAction::Kind::kPowerOn, by_size[i]->node_id});
    used[i] = true;
    remaining = shortfall(remaining, by_size[i]->capacity);
    ++active;
  }

  // Keep the floor: remaining off nodes by id.
  std::vector<const NodeRecord *> floor_fill;
  for (size_t i = 0; i < by_size.size(); ++i) {
    if (!used[i]) floor_fill.push_back(by_size[i]);
  }
  std::sort(floor_fill.begin(), floor_fill.end(),
            [](const NodeRecord *a, const NodeRecord *b) { return a->node_id < b->node_id; });
  for (const NodeRecord *n : floor_fill) {
    if (active >= policy.min_nodes || active >= policy.max_nodes) break;
    actions.push_back({ElasticAction::Kind::kPowerOn, n->node_id});
    ++active;
  }

  std::vector<const NodeRecord *> idle;
  for (const auto &n : nodes) {
    if (n.power == PowerState::kOn && !n.busy && t - n.idle_since >= policy.t_idle_s) idle.push_back(&n);
  }
  std::sort(idle.begin(), idle.end(), [](const NodeRecord *a, const NodeRecord *b) { return a->node_id > b->node_id; });
  for (const NodeRecord *n : idle) {
    if (active <= policy.min_nodes) break;
    actions.push_back({ElasticAction::Kind::kPowerOff, n->node_id});
    --active;
  }
  return actions;
}

// ---------------------------------------------------------------------------
// PartitionDirector

void PartitionDirector::add_node(NodeRecord node) {
  if (node.draining()) throw Error(Errc::kInvalidArgument, "node '" + node.node_id + "' cannot start draining");
  if (!nodes_.emplace(node.node_id, node).second) {
    throw Error(Errc::kInvalidArgument, "node '" + node.node_id + "' already registered");
  }
}

NodeRecord &PartitionDirector::lookup(const std::string &node_id) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error(Errc::kUnknownNode, "unknown node '" + node_id + "'");
  return it->second;
}

const NodeRecord &PartitionDirector::node(const std::string &node_id) const {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error(Errc::kUnknownNode, "unknown node '" + node_id + "'");
  return it->second;
}

bool PartitionDirector::accepts_work(const std::string &node_id) const { return !node(node_id).draining(); }

RoleTransition PartitionDirector::switch_role(const std::string &node_id, NodeRole target, SimTime t) {
  NodeRecord &n = lookup(node_id);
  if (n.draining()) throw Error(Errc::kAlreadyTransitioning, "node '" + node_id + "' is already draining");
  if (target != NodeRole::kBatch && target != NodeRole::kCloud) {
    throw Error(Errc::kInvalidArgument, "target role must be batch or cloud");
  }
  if (n.role == target) {
    throw Error(Errc::kInvalidArgument, "node '" + node_id + "' already has role " + std::string(to_string(target)));
  }
  RoleTransition tr{node_id, n.role, target, false, t};
  if (n.busy && n.power != PowerState::kOff) {
    n.role = target == NodeRole::kBatch ? NodeRole::kDrainingToBatch : NodeRole::kDrainingToCloud;
    tr.to = n.role;
    return tr;
  }
  n.role = target;
  tr.completed = true;
  return tr;
}

void PartitionDirector::mark_busy(const std::string &node_id, SimTime) {
  NodeRecord &n = lookup(node_id);
  n.busy = true;
}

std::optional<RoleTransition> PartitionDirector::mark_idle(const std::string &node_id, SimTime t) {
  NodeRecord &n = lookup(node_id);
  n.busy = false;
  n.idle_since = t;
  if (!n.draining()) return std::nullopt;
  NodeRole from = n.role;
  n.role = n.role == NodeRole::kDrainingToBatch ? NodeRole::kBatch : NodeRole::kCloud;
  return RoleTransition{node_id, from, n.role, true, t};
}

ResourceVector PartitionDirector::pool_capacity(Pool pool) const {
  ResourceVector total;
  for (const auto &[_, n] : nodes_) {
    if (n.pool() == pool) total += n.capacity;
  }
  return total;
}

ResourceVector PartitionDirector::total_capacity() const {
  ResourceVector total;
  for (const auto &[_, n] : nodes_) total += n.capacity;
  return total;
}

void PartitionDirector::audit() const {
  if (pool_capacity(Pool::kBatch) + pool_capacity(Pool::kCloud) + pool_capacity(Pool::kDraining) != total_capacity()) {
    throw Error(Errc::kInvariantViolation, "batch + cloud + draining capacity differs from physical capacity");
  }
  for (const auto &[id, n] : nodes_) {
    if (n.busy && n.power != PowerState::kOn) {
      throw Error(Errc::kInvariantViolation, "node '" + id + "' is busy while not powered on");
    }
  }
}

}  // namespace fedorch
