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

// Reference implementations used by the tests. None of them call into the
// library code they check; they are slow and obvious on purpose.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fedorch/elasticity.hpp"
#include "fedorch/orchestrator.hpp"
#include "fedorch/provider_ranker.hpp"
#include "fedorch/report.hpp"
#include "fedorch/scenario.hpp"
#include "fedorch/site_scheduler.hpp"
#include "fedorch/template_model.hpp"

#ifndef FEDORCH_SAMPLES_DIR
#define FEDORCH_SAMPLES_DIR "samples"
#endif

namespace fedorch::testing {

inline std::string samples_dir() { return FEDORCH_SAMPLES_DIR; }
inline std::string sample(const std::string &rel) { return samples_dir() + "/" + rel; }

inline const std::vector<std::string> &shipped_scenarios() {
  static const std::vector<std::string> names = {
      "scenarios/utilization.scn",   "scenarios/empty.scn",    "scenarios/elastic-cluster.scn",
      "scenarios/data-locality.scn", "scenarios/failover.scn", "scenarios/preemption-partition.scn",
      "scenarios/world.scn",
  };
  return names;
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool coin(double p = 0.5) { return unit() < p; }
  // Coarse grid so that ties actually occur.
  double grid(double max, int steps) { return max * static_cast<double>(range(0, steps)) / steps; }
  std::mt19937_64 &engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Ranking

inline std::vector<std::string> oracle_rank(const std::vector<ProviderSnapshot> &cands, const RankerConfig &cfg,
                                            const std::optional<std::vector<std::string>> &prefs) {
  double smin = cands[0].sla_rank, smax = smin, lmin = cands[0].latency_ms, lmax = lmin;
  for (const auto &c : cands) {
    smin = std::min(smin, c.sla_rank);
    smax = std::max(smax, c.sla_rank);
    lmin = std::min(lmin, c.latency_ms);
    lmax = std::max(lmax, c.latency_ms);
  }
  std::map<std::string, double> score;
  for (const auto &c : cands) {
    double sn = smax == smin ? 1.0 : (c.sla_rank - smin) / (smax - smin);
    double ln = lmax == lmin ? 1.0 : (c.latency_ms - lmin) / (lmax - lmin);
    score[c.provider_id] = cfg.w_sla * sn + cfg.w_avail * c.availability + cfg.w_lat * (1.0 - ln) +
                           cfg.w_data * c.data_locality;
  }

  std::vector<std::string> out;
  std::set<std::string> placed;
  if (prefs) {
    for (const auto &p : *prefs) {
      if (score.count(p) && !placed.count(p)) {
        out.push_back(p);
        placed.insert(p);
      }
    }
  }
  // Selection: repeatedly take the best remaining provider.
  while (placed.size() < score.size()) {
    std::optional<std::string> best;
    for (const auto &[id, s] : score) {
      if (placed.count(id)) continue;
      if (!best || s > score[*best]) best = id;  // map order gives the id tie-break
    }
    out.push_back(*best);
    placed.insert(*best);
  }
  return out;
}

inline std::vector<ProviderSnapshot> random_candidates(Gen &g, int n) {
  std::vector<ProviderSnapshot> out;
  std::vector<int> ids(26);
  for (int i = 0; i < 26; ++i) ids[i] = i;
  std::shuffle(ids.begin(), ids.end(), g.engine());
  for (int i = 0; i < n; ++i) {
    ProviderSnapshot s;
    s.provider_id = std::string("site-") + static_cast<char>('a' + ids[i]);
    s.sla_rank = g.coin(0.3) ? g.grid(4, 4) : g.unit() * 10;
    s.availability = g.coin(0.3) ? g.grid(1, 4) : g.unit();
    s.latency_ms = g.coin(0.3) ? g.grid(100, 4) : g.unit() * 200;
    s.data_locality = g.coin(0.3) ? g.grid(1, 2) : g.unit();
    s.free_capacity = {g.range(1, 64), g.range(1024, 65536), g.range(10, 2000)};
    out.push_back(s);
  }
  return out;
}

inline RankerConfig random_weights(Gen &g) {
  RankerConfig c;
  do {
    c.w_sla = g.coin(0.2) ? 0 : g.grid(3, 6);
    c.w_avail = g.coin(0.2) ? 0 : g.grid(3, 6);
    c.w_lat = g.coin(0.2) ? 0 : g.grid(3, 6);
    c.w_data = g.coin(0.2) ? 0 : g.grid(3, 6);
  } while (c.w_sla + c.w_avail + c.w_lat + c.w_data <= 0);
  return c;
}

// Some preferred ids may be absent from the candidates.
inline std::optional<std::vector<std::string>> random_prefs(Gen &g, const std::vector<ProviderSnapshot> &cands) {
  if (g.coin(0.25)) return std::nullopt;
  std::vector<std::string> pool;
  for (const auto &c : cands) pool.push_back(c.provider_id);
  pool.push_back("site-absent-1");
  pool.push_back("site-absent-2");
  std::shuffle(pool.begin(), pool.end(), g.engine());
  pool.resize(static_cast<size_t>(g.range(0, static_cast<std::int64_t>(std::min<size_t>(pool.size(), 4)))));
  return pool;
}

// ---------------------------------------------------------------------------
// Victim selection

inline bool oracle_eligible(const InstanceRequest &req, const RunningInstance &r) {
  if (r.request.klass != InstanceClass::kPreemptible) return false;
  if (req.klass == InstanceClass::kNormal) return true;
  return r.request.bid < req.bid;
}

inline bool oracle_fits(const ResourceVector &need, const ResourceVector &have) {
  return need.cpus <= have.cpus && need.mem_mb <= have.mem_mb && need.disk_gb <= have.disk_gb;
}

struct VictimOracle {
  std::optional<size_t> min_size;  // nullopt: infeasible
  std::vector<std::string> preferred;  // ids of the tie-broken minimal set
};

// Enumerates every subset of eligible instances.
inline VictimOracle oracle_victims(const InstanceRequest &req, const ResourceVector &free,
                                   const std::vector<RunningInstance> &running) {
  VictimOracle out;
  if (oracle_fits(req.resources, free)) {
    out.min_size = 0;
    return out;
  }
  std::vector<RunningInstance> el;
  for (const auto &r : running) {
    if (oracle_eligible(req, r)) el.push_back(r);
  }
  // Victim preference: lower bid, then later start, then id.
  auto key_less = [](const RunningInstance &a, const RunningInstance &b) {
    if (a.request.bid != b.request.bid) return a.request.bid < b.request.bid;
    if (a.start_time != b.start_time) return a.start_time > b.start_time;
    return a.request.request_id < b.request.request_id;
  };
  std::optional<std::vector<RunningInstance>> best;
  const size_t n = el.size();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<RunningInstance> set;
    ResourceVector have = free;
    for (size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        set.push_back(el[i]);
        have += el[i].request.resources;
      }
    }
    if (!oracle_fits(req.resources, have)) continue;
    std::sort(set.begin(), set.end(), key_less);
    if (!best || set.size() < best->size() ||
        (set.size() == best->size() &&
         std::lexicographical_compare(set.begin(), set.end(), best->begin(), best->end(), key_less))) {
      best = set;
    }
  }
  if (best) {
    out.min_size = best->size();
    for (const auto &r : *best) out.preferred.push_back(r.request.request_id);
  }
  return out;
}

inline RunningInstance random_running(Gen &g, int i) {
  RunningInstance r;
  r.request.request_id = "r" + std::to_string(i);
  r.request.user = "u" + std::to_string(g.range(0, 2));
  r.request.group = "g";
  r.request.resources = {g.range(1, 4), 1024 * g.range(1, 4), 10 * g.range(1, 4)};
  r.request.klass = g.coin(0.7) ? InstanceClass::kPreemptible : InstanceClass::kNormal;
  r.request.bid = r.request.klass == InstanceClass::kPreemptible ? g.grid(2, 8) : 0;
  r.start_time = g.range(0, 20);
  r.node_id = "n0";
  return r;
}

// ---------------------------------------------------------------------------
// Fair-share usage, decayed one second at a time.

inline double oracle_stepwise_usage(const std::vector<std::pair<SimTime, double>> &accruals, SimTime t,
                                    SimTime half_life) {
  const double per_second = std::pow(0.5, 1.0 / static_cast<double>(half_life));
  double u = 0;
  SimTime now = 0;
  size_t next = 0;
  while (now < t || next < accruals.size()) {
    while (next < accruals.size() && accruals[next].first == now) u += accruals[next++].second;
    if (now >= t) break;
    u *= per_second;
    ++now;
  }
  return u;
}

// ---------------------------------------------------------------------------
// Templates

inline bool oracle_valid_order(const DeploymentTemplate &t, const std::vector<std::string> &order) {
  if (order.size() != t.nodes.size()) return false;
  std::map<std::string, size_t> pos;
  for (size_t i = 0; i < order.size(); ++i) {
    if (!t.nodes.count(order[i]) || pos.count(order[i])) return false;
    pos[order[i]] = i;
  }
  for (const auto &[name, n] : t.nodes) {
    for (const auto &d : n.depends_on) {
      if (pos.at(d) >= pos.at(name)) return false;
    }
  }
  return true;
}

// Random DAG: node i may only depend on nodes with a smaller index, and the
// names are shuffled so that index order is not alphabetical.
inline DeploymentTemplate random_dag(Gen &g, int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("n" + std::to_string(g.range(0, 999)) + "_" + std::to_string(i));
  std::shuffle(names.begin(), names.end(), g.engine());
  DeploymentTemplate t;
  for (int i = 0; i < n; ++i) {
    NodeSpec s;
    s.name = names[i];
    s.kind = NodeKind::kCompute;
    s.resources = {g.range(1, 8), 512 * g.range(1, 8), 10 * g.range(1, 8)};
    for (int j = 0; j < i; ++j) {
      if (g.coin(0.3)) s.depends_on.push_back(names[j]);
    }
    t.nodes[s.name] = s;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Log audits

inline bool oracle_legal(const std::string &from, const std::string &to) {
  static const std::set<std::pair<std::string, std::string>> legal = {
      {"CREATE_IN_PROGRESS", "CREATE_COMPLETE"},
      {"CREATE_IN_PROGRESS", "CREATE_FAILED"},
      {"CREATE_COMPLETE", "DELETE_IN_PROGRESS"},
      {"CREATE_FAILED", "DELETE_IN_PROGRESS"},
      {"DELETE_IN_PROGRESS", "DELETED"},
  };
  return legal.count({from, to}) > 0;
}

// Returns human-readable problems; empty means the log is consistent.
inline std::vector<std::string> audit_state_machine(const std::vector<LogRecord> &log) {
  std::vector<std::string> bad;
  std::map<std::string, std::string> state;
  for (const auto &r : log) {
    if (r.kind != "deployment_state") continue;
    const std::string uuid = r.fields.at("uuid");
    const std::string from = r.fields.at("from");
    const std::string to = r.fields.at("to");
    auto it = state.find(uuid);
    const std::string expect = it == state.end() ? "CREATE_IN_PROGRESS" : it->second;
    if (from != expect) bad.push_back(uuid + ": from " + from + " but was " + expect);
    if (!oracle_legal(from, to)) bad.push_back(uuid + ": illegal " + from + " -> " + to);
    state[uuid] = to;
  }
  return bad;
}

// Attempts form a prefix of the ranked list, every attempt but the last of a
// completed record failed.
inline std::vector<std::string> audit_failover(const Json &final_state) {
  std::vector<std::string> bad;
  for (const auto &d : final_state.at("deployments")) {
    const std::string uuid = d.at("uuid");
    const auto &ranked = d.at("ranked");
    const auto &attempts = d.at("attempts");
    if (attempts.size() > ranked.size()) {
      bad.push_back(uuid + ": more attempts than ranked sites");
      continue;
    }
    for (size_t i = 0; i < attempts.size(); ++i) {
      if (attempts[i].at("site") != ranked[i]) bad.push_back(uuid + ": attempt " + std::to_string(i) + " off list");
      if (i + 1 < attempts.size() && attempts[i].at("ok").get<bool>()) {
        bad.push_back(uuid + ": attempt after success");
      }
    }
  }
  return bad;
}

inline std::string role_name(NodeRole r) {
  switch (r) {
    case NodeRole::kBatch: return "batch";
    case NodeRole::kCloud: return "cloud";
    case NodeRole::kDrainingToBatch: return "draining_to_batch";
    case NodeRole::kDrainingToCloud: return "draining_to_cloud";
  }
  return "?";
}

// Replays roles, placements and cluster power from the log alone, starting
// from the scenario's node table.
inline std::vector<std::string> audit_partition(const Scenario &sc, const std::vector<LogRecord> &log) {
  std::vector<std::string> bad;
  struct PNode {
    std::string site;
    ResourceVector cap;
    std::string role;
    std::set<std::string> running;
  };
  std::map<std::string, PNode> nodes;
  std::map<std::string, std::string> where;  // instance id -> node
  for (const auto &p : sc.providers) {
    for (const auto &n : p.nodes) nodes[n.node_id] = {p.provider_id, n.capacity, role_name(n.role), {}};
  }
  auto cloud_side = [&](const std::string &site) {
    ResourceVector c;
    for (const auto &[_, n] : nodes) {
      if (n.site == site && (n.role == "cloud" || n.role == "draining_to_batch")) c += n.cap;
    }
    return c;
  };
  auto where_s = [](const LogRecord &r) { return "t=" + std::to_string(r.t) + " seq=" + std::to_string(r.seq); };

  // cluster/worker -> running jobs
  std::map<std::string, std::set<std::string>> worker_jobs;
  std::map<std::string, std::string> job_worker;

  for (const auto &r : log) {
    const auto &f = r.fields;
    if (r.kind == "role_transition") {
      const std::string node = f.at("node");
      auto &n = nodes.at(node);
      if (f.at("from") != n.role) bad.push_back(where_s(r) + " " + node + ": transition from stale role");
      const std::string to = f.at("to");
      const bool completed = f.at("completed");
      if (completed && !n.running.empty()) bad.push_back(where_s(r) + " " + node + ": switched while busy");
      if (!completed && n.running.empty()) bad.push_back(where_s(r) + " " + node + ": idle node left draining");
      n.role = to;
    } else if (r.kind == "instance_start") {
      const std::string node = f.at("node");
      auto &n = nodes.at(node);
      if (n.role != "cloud") bad.push_back(where_s(r) + " " + node + ": placement on " + n.role + " node");
      n.running.insert(f.at("id").get<std::string>());
      where[f.at("id")] = node;
    } else if (r.kind == "instance_end") {
      const std::string id = f.at("id");
      auto it = where.find(id);
      if (it == where.end()) {
        bad.push_back(where_s(r) + " " + id + ": end without start");
        continue;
      }
      nodes.at(it->second).running.erase(id);
      where.erase(it);
    } else if (r.kind == "site_capacity") {
      const std::string site = f.at("site");
      ResourceVector logged{f.at("cpus").get<std::int64_t>(), f.at("mem_mb").get<std::int64_t>(),
                            f.at("disk_gb").get<std::int64_t>()};
      if (logged != cloud_side(site)) {
        bad.push_back(where_s(r) + " " + site + ": capacity " + logged.str() + " vs pools " + cloud_side(site).str());
      }
    } else if (r.kind == "job_start") {
      const std::string w = f.at("cluster").get<std::string>() + "/" + f.at("worker").get<std::string>();
      const std::string j = f.at("cluster").get<std::string>() + "/" + f.at("job").get<std::string>();
      worker_jobs[w].insert(j);
      job_worker[j] = w;
    } else if (r.kind == "job_end" || r.kind == "job_cancelled" || r.kind == "job_requeued") {
      const std::string j = f.at("cluster").get<std::string>() + "/" + f.at("job").get<std::string>();
      auto it = job_worker.find(j);
      if (it != job_worker.end()) {
        worker_jobs[it->second].erase(j);
        job_worker.erase(it);
      }
    } else if (r.kind == "worker_power" && f.at("state") == "off") {
      const std::string w = f.at("cluster").get<std::string>() + "/" + f.at("worker").get<std::string>();
      const std::string reason = f.value("reason", "");
      if (!worker_jobs[w].empty()) bad.push_back(where_s(r) + " " + w + ": busy worker powered off (" + reason + ")");
    }
    // Every node is in exactly one pool by construction of the replay; check
    // that the pools add up to the physical total.
    if (r.kind == "role_transition") {
      std::map<std::string, ResourceVector> total, pooled;
      for (const auto &[_, n] : nodes) {
        total[n.site] += n.cap;
        if (n.role == "cloud" || n.role == "batch" || n.role == "draining_to_batch" ||
            n.role == "draining_to_cloud") {
          pooled[n.site] += n.cap;
        } else {
          bad.push_back(where_s(r) + ": unknown role " + n.role);
        }
      }
      if (total != pooled) bad.push_back(where_s(r) + ": pools do not partition the nodes");
    }
  }
  return bad;
}

}  // namespace fedorch::testing
