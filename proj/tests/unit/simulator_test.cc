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

#include "drivers.hpp"
#include "fedorch/simulator.hpp"
#include "oracles.hpp"

namespace fedorch {
namespace {

using testing::run_sample;

const Json *deployment(const Json &final_state, const std::string &uuid) {
  for (const auto &d : final_state.at("deployments")) {
    if (d.at("uuid") == uuid) return &d;
  }
  return nullptr;
}

TEST(Simulator, UtilizationIsExact) {
  auto r = run_sample("scenarios/utilization.scn");
  // 2 cpus busy for 10 of 20 seconds on a 2-cpu site.
  const auto &site = r.metrics.at("sites").at("site-a");
  EXPECT_EQ(site.at("busy_cpu_s").get<std::int64_t>(), 20);
  EXPECT_EQ(site.at("capacity_cpu_s").get<std::int64_t>(), 40);
  EXPECT_DOUBLE_EQ(site.at("utilization").get<double>(), 0.5);
  EXPECT_EQ(verify_report(r), "");
}

TEST(Simulator, EmptyScenarioIsIdle) {
  auto r = run_sample("scenarios/empty.scn");
  EXPECT_DOUBLE_EQ(r.metrics.at("sites").at("site-a").at("utilization").get<double>(), 0.0);
  EXPECT_EQ(r.metrics.at("instances_started"), 0);
  for (const auto &rec : r.event_log) {
    EXPECT_TRUE(rec.kind == "scenario_start" || rec.kind == "scenario_end" || rec.kind == "site_capacity" ||
                rec.kind == "token_issued" || rec.kind == "audits")
        << rec.kind;
  }
}

TEST(Simulator, SameInputSameBytes) {
  for (const auto &rel : testing::shipped_scenarios()) {
    auto a = run_sample(rel);
    auto b = run_sample(rel);
    EXPECT_EQ(a.serialize(), b.serialize()) << rel;
  }
}

TEST(Simulator, AuditsRunAndReportsVerify) {
  for (const auto &rel : testing::shipped_scenarios()) {
    Simulator sim(testing::load_sample_scenario(rel));
    auto r = sim.run();
    EXPECT_GT(sim.audits_run(), 0u) << rel;
    EXPECT_EQ(verify_report(r), "") << rel;
  }
}

TEST(Simulator, TeardownRestoresCapacity) {
  for (const auto &rel : testing::shipped_scenarios()) {
    Simulator sim(testing::load_sample_scenario(rel), SimOptions{true});
    sim.run();
    for (const auto &p : sim.scenario().providers) {
      EXPECT_EQ(sim.site_free(p.provider_id), sim.site_capacity(p.provider_id)) << rel << " " << p.provider_id;
    }
  }
}

TEST(Simulator, FailoverOutcomes) {
  Simulator sim(testing::load_sample_scenario("scenarios/failover.scn"));
  auto r = sim.run();
  std::vector<std::string> placed;
  for (const auto &rec : r.event_log) {
    if (rec.kind == "deployment_attempt" && rec.fields.at("ok") == true) placed.push_back(rec.fields.at("site"));
  }
  // repo1 goes to site-b while site-a is down, repo2 finds site-a and site-b
  // down, repo3 lands after both recover.
  ASSERT_GE(placed.size(), 3u);
  EXPECT_EQ(placed[0], "site-b");
  EXPECT_EQ(placed[1], "site-c");
  EXPECT_EQ(placed[2], "site-a");

  bool revoked_rejected = false, cycle_rejected = false;
  for (const auto &rec : r.event_log) {
    if (rec.kind != "submit_rejected") continue;
    const std::string err = rec.fields.at("error");
    if (err == "AuthError") {
      revoked_rejected = revoked_rejected || rec.fields.at("message").get<std::string>().find("Revoked") != std::string::npos;
    } else if (err == "TemplateError") {
      cycle_rejected = cycle_rejected || rec.fields.at("violations") == Json::array({"Cycle"});
    }
  }
  EXPECT_TRUE(revoked_rejected);
  EXPECT_TRUE(cycle_rejected);
  EXPECT_EQ(testing::audit_failover(r.final_state), std::vector<std::string>{});
  EXPECT_EQ(testing::audit_state_machine(r.event_log), std::vector<std::string>{});
}

TEST(Simulator, ElasticClusterDrainsQueue) {
  auto r = run_sample("scenarios/elastic-cluster.scn");
  EXPECT_EQ(r.metrics.at("jobs_queued_at_horizon"), 0);
  EXPECT_EQ(r.metrics.at("jobs_started"), 9);
  EXPECT_EQ(r.metrics.at("jobs_completed"), 9);
  std::int64_t ons = 0, idle_offs = 0;
  for (const auto &rec : r.event_log) {
    if (rec.kind != "worker_power") continue;
    if (rec.fields.at("state") == "on" || rec.fields.at("state") == "booting") ++ons;
    if (rec.fields.at("state") == "off" && rec.fields.contains("reason") && rec.fields.at("reason") == "idle")
      ++idle_offs;
  }
  EXPECT_GT(ons, 1);
  EXPECT_GT(idle_offs, 0);
}

TEST(Simulator, DataLocalityPlacesOnDataSite) {
  auto r = run_sample("scenarios/data-locality.scn");
  std::int64_t n = 0;
  for (const auto &rec : r.event_log) {
    if (rec.kind != "deployment_attempt" || rec.fields.at("ok") != true) continue;
    EXPECT_EQ(rec.fields.at("site"), "site-b");
    ++n;
  }
  EXPECT_EQ(n, 4);
}

TEST(Simulator, StepwiseCreateAndRemove) {
  Simulator sim(testing::load_sample_scenario("scenarios/empty.scn"));
  const std::string tpl = testing::read_file(testing::sample("two-cpu-job.tpl"));
  auto uuid = sim.create(tpl, "alice", 5);
  EXPECT_EQ(sim.site_free("site-a").cpus, 14);
  const Json state = sim.final_state();
  const Json *d = deployment(state, uuid);
  ASSERT_NE(d, nullptr);
  EXPECT_EQ(d->at("state"), "CREATE_COMPLETE");
  sim.advance_to(50);
  auto rec = sim.remove(uuid, "alice", 50);
  EXPECT_EQ(rec.state, DeploymentState::kDeleted);
  EXPECT_EQ(sim.site_free("site-a"), sim.site_capacity("site-a"));
  EXPECT_THROW(sim.remove(uuid, "alice", 60), Error);
}

TEST(Simulator, PreemptionScenarioPreempts) {
  auto r = run_sample("scenarios/preemption-partition.scn");
  EXPECT_GT(r.metrics.at("preemptions").get<std::int64_t>(), 0);
  EXPECT_EQ(testing::audit_partition(testing::load_sample_scenario("scenarios/preemption-partition.scn"), r.event_log),
            std::vector<std::string>{});
}

}  // namespace
}  // namespace fedorch
