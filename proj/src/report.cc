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

#include "fedorch/report.hpp"

#include <map>
#include <sstream>
#include <tuple>

#include "fedorch/errors.hpp"

namespace fedorch {

namespace {

constexpr const char *kStates[] = {"CREATE_IN_PROGRESS", "CREATE_COMPLETE", "CREATE_FAILED", "DELETE_IN_PROGRESS",
                                   "DELETED"};

struct Point {
  std::int64_t used = 0;
  std::int64_t cap = 0;
  bool operator==(const Point &) const = default;
};

}  // namespace

std::string to_line(const LogRecord &r) {
  Json j = Json::object();
  j["t"] = r.t;
  j["seq"] = r.seq;
  j["kind"] = r.kind;
  for (const auto &[k, v] : r.fields.items()) j[k] = v;
  return j.dump();
}

std::string RunReport::serialize_log() const {
  std::string out;
  for (const auto &r : event_log) {
    out += to_line(r);
    out += '\n';
  }
  return out;
}

std::string RunReport::serialize() const {
  std::string out = serialize_log();
  Json fs = Json::object();
  fs["kind"] = "final_state";
  fs["state"] = final_state;
  out += fs.dump() + "\n";
  Json m = Json::object();
  m["kind"] = "metrics";
  m["metrics"] = metrics;
  out += m.dump() + "\n";
  return out;
}

RunReport RunReport::parse(std::string_view jsonl) {
  RunReport report;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int number = 0;
  bool have_metrics = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error &e) {
      throw Error(Errc::kSyntaxError, "report line " + std::to_string(number) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
      throw Error(Errc::kSyntaxError, "report line " + std::to_string(number) + ": missing kind");
    }
    const std::string kind = j["kind"];
    if (kind == "final_state") {
      report.final_state = j.value("state", Json::object());
      continue;
    }
    if (kind == "metrics") {
      report.metrics = j.value("metrics", Json::object());
      have_metrics = true;
      continue;
    }
    if (!j.contains("t") || !j["t"].is_number_integer() || !j.contains("seq") || !j["seq"].is_number_unsigned()) {
      throw Error(Errc::kSyntaxError, "report line " + std::to_string(number) + ": missing t/seq");
    }
    LogRecord r;
    r.t = j["t"];
    r.seq = j["seq"];
    r.kind = kind;
    for (const auto &[k, v] : j.items()) {
      if (k != "t" && k != "seq" && k != "kind") r.fields[k] = v;
    }
    if (kind == "scenario_start") {
      report.scenario = r.fields.value("name", "");
      report.seed = r.fields.value("seed", std::uint64_t{0});
      report.horizon_s = r.fields.value("horizon_s", SimTime{0});
    }
    report.event_log.push_back(std::move(r));
  }
  if (!have_metrics) throw Error(Errc::kSyntaxError, "report has no metrics line");
  return report;
}

Json derive_metrics(const std::vector<LogRecord> &log, SimTime horizon_s) {
  struct Open {
    std::string user;
    std::int64_t cpus = 0;
    SimTime start = 0;
  };
  std::map<std::string, Point> current;                       // site -> state
  std::map<std::string, std::map<SimTime, Point>> by_time;    // site -> t -> state at end of t
  std::map<std::string, Open> open;                           // site/id -> running
  std::map<std::string, SimTime> queued_at;                   // site/id -> queue time
  std::map<std::string, std::int64_t> user_cpu;
  std::map<std::string, std::string> deployment_state;
  std::map<std::string, int> job_state;  // 0 queued, 1 running, 2 done
  std::int64_t preemptions = 0, started = 0, wait_total = 0, jobs_started = 0, jobs_completed = 0;

  std::uint64_t last_seq = 0;
  SimTime last_t = 0;
  bool first = true;
  for (const auto &r : log) {
    if (!first && (r.t < last_t || r.seq <= last_seq)) {
      throw Error(Errc::kInvariantViolation, "log is not ordered at seq " + std::to_string(r.seq));
    }
    first = false;
    last_t = r.t;
    last_seq = r.seq;
    const Json &f = r.fields;
    auto key = [&] { return f.at("site").get<std::string>() + "/" + f.at("id").get<std::string>(); };
    std::string touched;
    if (r.kind == "site_capacity") {
      touched = f.at("site");
      current[touched].cap = f.at("cpus");
    } else if (r.kind == "instance_start") {
      touched = f.at("site");
      std::string k = key();
      Open o{f.at("user"), f.at("cpus"), r.t};
      current[touched].used += o.cpus;
      user_cpu[o.user] += 0;
      ++started;
      if (auto q = queued_at.find(k); q != queued_at.end()) {
        wait_total += r.t - q->second;
        queued_at.erase(q);
      }
      open[k] = o;
    } else if (r.kind == "instance_end") {
      touched = f.at("site");
      auto it = open.find(key());
      if (it == open.end()) throw Error(Errc::kInvariantViolation, "instance_end without start: " + key());
      current[touched].used -= it->second.cpus;
      user_cpu[it->second.user] += it->second.cpus * (r.t - it->second.start);
      if (f.at("reason") == "preempted") ++preemptions;
      open.erase(it);
    } else if (r.kind == "instance_queued") {
      queued_at[key()] = r.t;
    } else if (r.kind == "instance_cancelled") {
      queued_at.erase(key());
    } else if (r.kind == "deployment_state") {
      deployment_state[f.at("uuid")] = f.at("to");
    } else if (r.kind == "job_queued" || r.kind == "job_requeued") {
      job_state[f.at("job")] = 0;
    } else if (r.kind == "job_start") {
      job_state[f.at("job")] = 1;
      ++jobs_started;
    } else if (r.kind == "job_end") {
      job_state[f.at("job")] = 2;
      ++jobs_completed;
    } else if (r.kind == "job_cancelled") {
      job_state[f.at("job")] = 2;
    }
    if (!touched.empty()) by_time[touched][r.t] = current[touched];
  }
  for (const auto &[_, o] : open) {
    if (horizon_s > o.start) user_cpu[o.user] += o.cpus * (horizon_s - o.start);
  }

  Json metrics = Json::object();
  metrics["horizon_s"] = horizon_s;
  Json sites = Json::object();
  for (const auto &[site, points] : by_time) {
    std::vector<std::pair<SimTime, Point>> series;
    for (const auto &[t, p] : points) {
      if (t > horizon_s) break;
      if (series.empty() || !(series.back().second == p)) series.emplace_back(t, p);
    }
    std::int64_t busy = 0, capacity = 0;
    Json js = Json::array();
    for (size_t i = 0; i < series.size(); ++i) {
      SimTime end = i + 1 < series.size() ? series[i + 1].first : horizon_s;
      busy += series[i].second.used * (end - series[i].first);
      capacity += series[i].second.cap * (end - series[i].first);
      js.push_back(Json::array({series[i].first, series[i].second.used, series[i].second.cap}));
    }
    Json s = Json::object();
    s["busy_cpu_s"] = busy;
    s["capacity_cpu_s"] = capacity;
    s["utilization"] = capacity > 0 ? static_cast<double>(busy) / static_cast<double>(capacity) : 0.0;
    s["series"] = std::move(js);
    sites[site] = std::move(s);
  }
  metrics["sites"] = std::move(sites);
  Json users = Json::object();
  for (const auto &[u, c] : user_cpu) users[u] = c;
  metrics["user_cpu_s"] = std::move(users);
  metrics["preemptions"] = preemptions;
  metrics["instances_started"] = started;
  metrics["wait_s_total"] = wait_total;
  metrics["mean_wait_s"] = started > 0 ? static_cast<double>(wait_total) / static_cast<double>(started) : 0.0;
  metrics["instances_queued_at_horizon"] = static_cast<std::int64_t>(queued_at.size());
  Json deployments = Json::object();
  for (const char *s : kStates) deployments[s] = 0;
  for (const auto &[_, s] : deployment_state) deployments[s] = deployments[s].get<std::int64_t>() + 1;
  metrics["deployments"] = std::move(deployments);
  std::int64_t jobs_queued = 0;
  for (const auto &[_, s] : job_state) jobs_queued += s == 0;
  metrics["jobs_started"] = jobs_started;
  metrics["jobs_completed"] = jobs_completed;
  metrics["jobs_queued_at_horizon"] = jobs_queued;
  return metrics;
}

std::string verify_report(const RunReport &report) {
  Json derived;
  try {
    derived = derive_metrics(report.event_log, report.horizon_s);
  } catch (const std::exception &e) {
    return e.what();
  }
  if (derived == report.metrics) return "";
  std::string diff;
  for (const auto &[k, v] : derived.items()) {
    if (!report.metrics.contains(k) || report.metrics[k] != v) diff += (diff.empty() ? "" : ", ") + k;
  }
  for (const auto &[k, v] : report.metrics.items()) {
    if (!derived.contains(k)) diff += (diff.empty() ? "" : ", ") + k;
  }
  return "metrics differ from the event log: " + diff;
}

}  // namespace fedorch
