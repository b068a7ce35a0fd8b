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

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fedorch/elasticity.hpp"
#include "oracles.hpp"

namespace fedorch {
namespace {

using testing::Gen;

NodeRecord node(std::string id, ResourceVector cap, PowerState p = PowerState::kOff, bool busy = false,
                SimTime idle_since = 0) {
  NodeRecord n;
  n.node_id = std::move(id);
  n.capacity = cap;
  n.power = p;
  n.busy = busy;
  n.idle_since = idle_since;
  return n;
}

ElasticPolicy policy(std::int64_t min, std::int64_t max, SimTime idle = 300) {
  ElasticPolicy p;
  p.min_nodes = min;
  p.max_nodes = max;
  p.t_idle_s = idle;
  return p;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return b == 0 ? 0 : (a + b - 1) / b; }

TEST(Reconcile, NothingToDo) {
  std::vector<NodeRecord> nodes = {node("a", {1, 1, 1}, PowerState::kOn, false, 100),
                                   node("b", {1, 1, 1}, PowerState::kOn, false, 100)};
  EXPECT_TRUE(reconcile(nodes, {}, 200, policy(0, 4)).empty());
}

TEST(Reconcile, PowersOnCeilingOfDemand) {
  std::vector<NodeRecord> nodes;
  for (int i = 0; i < 8; ++i) nodes.push_back(node("n" + std::to_string(i), {1, 1024, 10}));
  const ResourceVector demand{3, 3072, 30};
  const ResourceVector cap{1, 1024, 10};
  const std::int64_t expect = std::max({ceil_div(demand.cpus, cap.cpus), ceil_div(demand.mem_mb, cap.mem_mb),
                                        ceil_div(demand.disk_gb, cap.disk_gb)});
  auto actions = reconcile(nodes, demand, 0, policy(0, 8));
  ASSERT_EQ(static_cast<std::int64_t>(actions.size()), expect);
  EXPECT_EQ(expect, 3);
  for (size_t i = 0; i < actions.size(); ++i) {
    EXPECT_EQ(actions[i].kind, ElasticAction::Kind::kPowerOn);
    EXPECT_EQ(actions[i].node_id, "n" + std::to_string(i));
  }
}

TEST(Reconcile, PowersOffLastIdleAboveFloor) {
  std::vector<NodeRecord> nodes = {node("a", {1, 1, 1}, PowerState::kOn, false, 0),
                                   node("b", {1, 1, 1}, PowerState::kOn, false, 0)};
  auto actions = reconcile(nodes, {}, 600, policy(1, 4, 300));
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0], (ElasticAction{ElasticAction::Kind::kPowerOff, "b"}));
}

TEST(Reconcile, BootingCapacityCountsAsCoverage) {
  std::vector<NodeRecord> nodes = {node("a", {4, 4, 4}, PowerState::kBooting), node("b", {4, 4, 4})};
  EXPECT_TRUE(reconcile(nodes, {4, 4, 4}, 0, policy(0, 4)).empty());
  EXPECT_EQ(reconcile(nodes, {5, 4, 4}, 0, policy(0, 4)).size(), 1u);
}

TEST(Reconcile, MinNodesFloor) {
  std::vector<NodeRecord> nodes = {node("b", {1, 1, 1}), node("a", {1, 1, 1}), node("c", {1, 1, 1})};
  auto actions = reconcile(nodes, {}, 0, policy(2, 3));
  ASSERT_EQ(actions.size(), 2u);
  EXPECT_EQ(actions[0].node_id, "a");
  EXPECT_EQ(actions[1].node_id, "b");
}

// Random pools: deterministic, respects max_nodes and min_nodes, never
// touches a node twice, never powers off a busy or booting node.
TEST(Reconcile, RandomProperties) {
  Gen g(41);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<NodeRecord> nodes;
    const auto n = g.range(0, 8);
    for (int i = 0; i < n; ++i) {
      auto p = static_cast<PowerState>(g.range(0, 2));
      bool busy = p == PowerState::kOn && g.coin();
      nodes.push_back(node("w" + std::to_string(i), {g.range(1, 4), 1024 * g.range(1, 4), 10}, p, busy,
                           g.range(0, 1000)));
    }
    auto pol = policy(g.range(0, 3), 0, g.range(0, 600));
    pol.max_nodes = pol.min_nodes + g.range(0, 5);
    ResourceVector demand{g.range(0, 10), 1024 * g.range(0, 10), 10 * g.range(0, 3)};
    const SimTime t = g.range(0, 2000);
    auto actions = reconcile(nodes, demand, t, pol);
    EXPECT_EQ(actions, reconcile(nodes, demand, t, pol));

    std::int64_t active = 0;
    for (const auto &x : nodes) active += x.power != PowerState::kOff;
    std::set<std::string> touched;
    std::int64_t ons = 0, offs = 0;
    for (const auto &a : actions) {
      EXPECT_TRUE(touched.insert(a.node_id).second);
      const auto &rec = *std::find_if(nodes.begin(), nodes.end(), [&](const NodeRecord &x) { return x.node_id == a.node_id; });
      if (a.kind == ElasticAction::Kind::kPowerOn) {
        ++ons;
        EXPECT_EQ(rec.power, PowerState::kOff);
      } else {
        ++offs;
        EXPECT_EQ(rec.power, PowerState::kOn);
        EXPECT_FALSE(rec.busy);
        EXPECT_GE(t - rec.idle_since, pol.t_idle_s);
      }
    }
    const auto after = active + ons - offs;
    if (ons > 0) EXPECT_LE(after, std::max(pol.max_nodes, active));
    if (offs > 0) EXPECT_GE(after, pol.min_nodes);
  }
}

TEST(ElasticPolicy, FromConfig) {
  auto p = ElasticPolicy::from(KvConfig::parse("t_idle_s = 60\nmax_nodes = 3\n"));
  EXPECT_EQ(p.t_idle_s, 60);
  EXPECT_EQ(p.boot_delay_s, 30);
  EXPECT_EQ(p.max_nodes, 3);
  EXPECT_THROW(ElasticPolicy::from(KvConfig::parse("min_nodes = 4\nmax_nodes = 3\n")), Error);
}

TEST(PartitionDirector, IdleSwitchesAtOnce) {
  PartitionDirector d;
  d.add_node(node("n0", {8, 8, 8}, PowerState::kOn));
  auto tr = d.switch_role("n0", NodeRole::kBatch, 5);
  EXPECT_TRUE(tr.completed);
  EXPECT_EQ(d.node("n0").role, NodeRole::kBatch);
  EXPECT_EQ(d.pool_capacity(Pool::kBatch), ResourceVector(8, 8, 8));
}

TEST(PartitionDirector, BusyNodeDrains) {
  PartitionDirector d;
  d.add_node(node("n0", {8, 8, 8}, PowerState::kOn));
  d.mark_busy("n0", 0);
  auto tr = d.switch_role("n0", NodeRole::kBatch, 5);
  EXPECT_FALSE(tr.completed);
  EXPECT_EQ(d.node("n0").role, NodeRole::kDrainingToBatch);
  EXPECT_FALSE(d.accepts_work("n0"));
  EXPECT_EQ(d.pool_capacity(Pool::kCloud), ResourceVector());
  EXPECT_EQ(d.pool_capacity(Pool::kBatch), ResourceVector());
  EXPECT_THROW(d.switch_role("n0", NodeRole::kCloud, 6), Error);
  try {
    d.switch_role("n0", NodeRole::kCloud, 6);
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kAlreadyTransitioning);
  }
  auto done = d.mark_idle("n0", 10);
  ASSERT_TRUE(done);
  EXPECT_TRUE(done->completed);
  EXPECT_EQ(d.node("n0").role, NodeRole::kBatch);
  try {
    d.switch_role("ghost", NodeRole::kCloud, 6);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kUnknownNode);
  }
}

TEST(PartitionDirector, RandomSwitchesKeepPoolsExclusive) {
  Gen g(55);
  for (int trial = 0; trial < 200; ++trial) {
    PartitionDirector d;
    const auto n = g.range(1, 6);
    for (int i = 0; i < n; ++i) {
      auto rec = node("n" + std::to_string(i), {g.range(1, 8), 1024, 10}, PowerState::kOn);
      rec.role = g.coin() ? NodeRole::kBatch : NodeRole::kCloud;
      d.add_node(rec);
    }
    for (int step = 0; step < 50; ++step) {
      const std::string id = "n" + std::to_string(g.range(0, n - 1));
      switch (g.range(0, 2)) {
        case 0:
          d.mark_busy(id, step);
          break;
        case 1:
          d.mark_idle(id, step);
          break;
        default:
          try {
            d.switch_role(id, g.coin() ? NodeRole::kBatch : NodeRole::kCloud, step);
          } catch (const Error &e) {
            EXPECT_TRUE(e.code() == Errc::kAlreadyTransitioning || e.code() == Errc::kInvalidArgument);
          }
      }
      EXPECT_EQ(d.pool_capacity(Pool::kBatch) + d.pool_capacity(Pool::kCloud) + d.pool_capacity(Pool::kDraining),
                d.total_capacity());
      for (const auto &[nid, rec] : d.nodes()) {
        if (rec.draining()) EXPECT_TRUE(rec.busy) << nid;
      }
      EXPECT_NO_THROW(d.audit());
    }
  }
}

}  // namespace
}  // namespace fedorch
