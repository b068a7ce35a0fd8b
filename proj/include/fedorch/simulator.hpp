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

// Deterministic discrete-event simulation of a federation of sites driven
// by a Scenario. Integer-second virtual clock. Simultaneous events run in
// the order they were scheduled; scenario events are scheduled first, in
// file order, so they precede internal events at the same instant. The only
// randomness is fail_site recovery jitter: one draw from an mt19937_64
// seeded with the scenario seed per jittered fail_site, in processing order.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fedorch/elasticity.hpp"
#include "fedorch/iam_lite.hpp"
#include "fedorch/orchestrator.hpp"
#include "fedorch/report.hpp"
#include "fedorch/scenario.hpp"
#include "fedorch/site_scheduler.hpp"

namespace fedorch {

struct SimOptions {
  /// Retire every completed deployment at the horizon so the final site
  /// state can be compared with the initial one.
  bool teardown_at_horizon = false;
};

class Simulator : private SiteGateway {
 public:
  explicit Simulator(Scenario scenario, SimOptions options = {});
  ~Simulator() override;
  Simulator(const Simulator &) = delete;
  Simulator &operator=(const Simulator &) = delete;

  /// Processes every event up to and including the horizon. Raises
  /// kInvariantViolation as soon as an audit fails.
  RunReport run();

  // Step-wise use, e.g. replaying a command journal. Time never decreases.
  void advance_to(SimTime t);
  /// Errors from the orchestrator propagate unchanged.
  std::string create(std::string_view template_text, const std::string &user, SimTime t,
                     const std::optional<PreferenceList> &prefs = std::nullopt);
  DeploymentRecord remove(const std::string &uuid, const std::string &user, SimTime t);

  const Orchestrator &orchestrator() const { return *orch_; }
  const Scenario &scenario() const { return scenario_; }
  const std::vector<LogRecord> &log() const { return log_; }
  std::uint64_t audits_run() const { return audits_; }
  SimTime now() const { return now_; }

  ResourceVector site_free(const std::string &provider_id) const;
  ResourceVector site_capacity(const std::string &provider_id) const;
  Json final_state() const;
  /// Metrics from module state (not from the log).
  Json metrics() const;

 private:
  struct Site;
  struct Worker;
  struct Job;
  struct Cluster;
  struct Owner;

  std::vector<SiteStatus> monitor(SimTime t) override;
  SiteEvent deploy(const std::string &provider_id, const DeploymentRecord &record, SimTime t) override;
  void undeploy(const std::string &provider_id, const DeploymentRecord &record, SimTime t) override;

  void schedule(SimTime t, std::function<void(SimTime)> action);
  void step(SimTime t, const std::function<void()> &action);
  void emit(SimTime t, std::string kind, Json fields);

  Site &site(const std::string &provider_id);
  const Site &site(const std::string &provider_id) const;
  std::string token_for(const std::string &user) const;

  void handle(const ScenarioEvent &ev, SimTime t);
  void submit(const ScenarioEvent &ev, SimTime t);
  void remove_named(const ScenarioEvent &ev, SimTime t);
  void fail_site(const ScenarioEvent &ev, SimTime t);
  void submit_job(const ScenarioEvent &ev, SimTime t);
  void switch_role(const ScenarioEvent &ev, SimTime t);
  void retire(const std::string &uuid, SimTime t);
  void log_changes(const std::string &uuid, SimTime t);

  // Scheduler plumbing: every call is followed by drain(), which logs the
  // scheduler events and queues follow-up work.
  Decision submit_instance(Site &s, const InstanceRequest &req, SimTime t);
  void release_instance(Site &s, const std::string &id, const std::string &reason, SimTime t);
  void cancel_instance(Site &s, const std::string &id, SimTime t);
  void drain(Site &s);
  void sync_nodes(Site &s, SimTime t);
  void log_capacity(Site &s, SimTime t);
  void run_followups();
  void sample(SimTime t);
  void audit(SimTime t);

  // Elastic clusters.
  Cluster *find_cluster(const std::string &cluster_id);
  void cluster_step(const std::string &cluster_id, SimTime t);
  void power_on(Cluster &c, size_t w, SimTime t);
  void power_off(Cluster &c, size_t w, SimTime t);
  void worker_started(const std::string &cluster_id, size_t w, int incarnation, SimTime t);
  void worker_ready(const std::string &cluster_id, size_t w, int incarnation, SimTime t);
  void worker_lost(const std::string &cluster_id, size_t w, int incarnation, SimTime t);
  void finish_job(const std::string &cluster_id, std::uint64_t job, std::uint64_t generation, SimTime t);
  void teardown_cluster(Cluster &c, SimTime t);

  Scenario scenario_;
  SimOptions options_;
  std::mt19937_64 rng_;
  std::unique_ptr<IamLite> iam_;
  std::unique_ptr<Orchestrator> orch_;
  ElasticPolicy elastic_defaults_;

  std::map<std::string, std::unique_ptr<Site>> sites_;
  std::map<std::string, std::string> tokens_;                       // user -> token id
  std::map<std::string, std::string> names_;                        // scenario name -> uuid
  std::map<std::string, std::unique_ptr<Cluster>> clusters_;        // uuid/node -> runtime
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> compute_;  // uuid -> (node, id)
  std::map<std::string, std::unique_ptr<Owner>> owners_;            // request id -> owner
  std::map<std::string, std::string> end_reason_;                   // request id -> reason
  std::map<std::string, size_t> history_seen_;

  std::map<std::pair<SimTime, std::uint64_t>, std::function<void(SimTime)>> agenda_;
  std::deque<std::function<void()>> followups_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t log_seq_ = 0;
  std::uint64_t next_job_ = 0;
  std::uint64_t audits_ = 0;
  SimTime now_ = 0;
  std::vector<LogRecord> log_;

  std::map<std::string, std::int64_t> user_cpu_s_;
  std::int64_t preemptions_ = 0;
  std::int64_t started_ = 0;
  std::int64_t wait_total_ = 0;
  std::int64_t jobs_started_ = 0;
  std::int64_t jobs_completed_ = 0;
  bool ran_ = false;
};

}  // namespace fedorch
