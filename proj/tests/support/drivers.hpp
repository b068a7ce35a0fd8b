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

// Workload drivers shared by unit and acceptance tests.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fedorch/simulator.hpp"
#include "fedorch/site_scheduler.hpp"
#include "oracles.hpp"

namespace fedorch::testing {

struct ShareResult {
  double share_a = 0;
  double share_b = 0;
  std::int64_t instances = 0;
};

// Two users keep a one-cpu backlog on a single node for `half_lives`
// half-lives. Replacement requests are queued before slots free up, so every
// start is decided by dispatch priority.
inline ShareResult saturate(double weight_a, double weight_b, SimTime half_life, int half_lives, std::int64_t cpus = 8,
                            SimTime job_s = 600) {
  SchedulerConfig cfg;
  cfg.half_life_s = half_life;
  cfg.weights = {{"a", weight_a}, {"b", weight_b}};
  SiteScheduler s("site", cfg);
  s.add_node("n0", {cpus, cpus * 1024, cpus * 10});

  const SimTime horizon = half_life * half_lives;
  std::int64_t next_id = 0;
  std::map<std::string, std::int64_t> queued;
  std::multimap<SimTime, std::string> ends;
  std::map<std::string, double> cpu_s;

  auto top_up = [&](SimTime t) {
    while (queued["a"] < cpus || queued["b"] < cpus) {
      for (const char *u : {"a", "b"}) {
        if (queued[u] >= cpus) continue;
        InstanceRequest r;
        r.request_id = std::string(u) + "-" + std::to_string(next_id++);
        r.user = u;
        r.group = u;
        r.resources = {1, 1024, 10};
        r.arrival_time = t;
        s.submit(r, t);
        ++queued[u];
      }
    }
  };
  auto collect = [&]() {
    for (const auto &ev : s.drain_events()) {
      if (ev.kind == SchedulerEvent::Kind::kStarted) {
        --queued[ev.instance.request.user];
        ends.emplace(ev.t + job_s, ev.instance.id());
      } else {
        cpu_s[ev.instance.request.user] += static_cast<double>(ev.cpu_seconds);
      }
    }
  };

  ShareResult out;
  top_up(0);
  collect();
  top_up(0);
  collect();
  while (!ends.empty() && ends.begin()->first <= horizon) {
    const SimTime t = ends.begin()->first;
    top_up(t);
    collect();
    while (!ends.empty() && ends.begin()->first == t) {
      std::string id = ends.begin()->second;
      ends.erase(ends.begin());
      s.release(id, t);
      ++out.instances;
      collect();
    }
  }
  for (const auto &[_, r] : s.running()) {
    cpu_s[r.request.user] += static_cast<double>(r.request.resources.cpus * (horizon - r.start_time));
  }
  const double total = cpu_s["a"] + cpu_s["b"];
  out.share_a = cpu_s["a"] / total;
  out.share_b = cpu_s["b"] / total;
  return out;
}

inline Scenario load_sample_scenario(const std::string &rel) { return Scenario::load(sample(rel)); }

inline RunReport run_sample(const std::string &rel, SimOptions opts = {}) {
  Simulator sim(load_sample_scenario(rel), opts);
  return sim.run();
}

inline std::string read_file(const std::string &path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace fedorch::testing
