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

#include "fedorch/simulator.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "fedorch/errors.hpp"

namespace fedorch {

namespace {

constexpr SimTime kNever = std::numeric_limits<SimTime>::max();

Json triple(const ResourceVector &r) { return Json::array({r.cpus, r.mem_mb, r.disk_gb}); }

std::string worker_name(size_t w, std::int64_t max_workers) {
  size_t width = std::max<size_t>(2, std::to_string(std::max<std::int64_t>(max_workers - 1, 0)).size());
  std::string digits = std::to_string(w);
  return "w" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

[[noreturn]] void violation(SimTime t, const std::string &what) {
  throw Error(Errc::kInvariantViolation, "t=" + std::to_string(t) + ": " + what);
}

}  // namespace

struct Simulator::Site {
  ProviderSpec spec;
  std::unique_ptr<SiteScheduler> sched;
  PartitionDirector director;
  SimTime down_until = 0;
  std::map<SimTime, std::pair<std::int64_t, std::int64_t>> samples;  // t -> (used cpus, capacity cpus)

  bool down(SimTime t) const { return t < down_until; }
};

struct Simulator::Worker {
  NodeRecord rec;
  ResourceVector free;
  std::set<std::uint64_t> jobs;
  int incarnation = 0;
  std::string request_id;
  bool vm = false;  // the worker's instance is running at the site
};

struct Simulator::Job {
  std::uint64_t id = 0;
  std::string name;
  ResourceVector resources;
  SimTime duration = 0;
  std::uint64_t generation = 0;
  std::optional<size_t> worker;
  SimTime start = 0;
};

struct Simulator::Cluster {
  std::string id;
  std::string uuid;
  std::string node;
  std::string site;
  std::string user;
  std::string group;
  NodeSpec spec;
  ElasticPolicy policy;
  std::vector<Worker> workers;
  std::set<std::uint64_t> queue;  // job ids, arrival order
  std::map<std::uint64_t, Job> jobs;
  std::set<SimTime> ticks;
};

struct Simulator::Owner {
  enum class Kind { kDetached, kCompute, kWorker };
  Kind kind = Kind::kDetached;
  std::string uuid;
  std::string node;
  std::string cluster;
  size_t worker = 0;
  int incarnation = 0;
};

Simulator::Simulator(Scenario scenario, SimOptions options)
    : scenario_(std::move(scenario)), options_(options), rng_(scenario_.seed) {
  scenario_.check();
  const KvConfig &cfg = scenario_.config;
  iam_ = std::make_unique<IamLite>(scenario_.seed, Policy::from(cfg));
  orch_ = std::make_unique<Orchestrator>(*iam_, static_cast<SiteGateway &>(*this), RankerConfig::from(cfg), PreferenceBook::from(cfg),
                                         scenario_.seed);
  elastic_defaults_ = ElasticPolicy::from(cfg);
  for (const auto &sla : scenario_.slas) orch_->add_sla(sla);
  for (const auto &d : scenario_.datasets) orch_->add_dataset(d);

  const SchedulerConfig sched_cfg = SchedulerConfig::from(cfg);
  for (const auto &p : scenario_.providers) {
    auto s = std::make_unique<Site>();
    s->spec = p;
    s->sched = std::make_unique<SiteScheduler>(p.provider_id, sched_cfg);
    for (const auto &n : p.nodes) {
      NodeRecord rec;
      rec.node_id = n.node_id;
      rec.capacity = n.capacity;
      rec.power = PowerState::kOn;
      rec.role = n.role;
      s->director.add_node(rec);
      if (n.role == NodeRole::kCloud) s->sched->add_node(n.node_id, n.capacity);
    }
    sites_.emplace(p.provider_id, std::move(s));
  }

  Json start = Json::object();
  start["name"] = scenario_.name;
  start["seed"] = scenario_.seed;
  start["horizon_s"] = scenario_.horizon_s;
  start["providers"] = static_cast<std::int64_t>(sites_.size());
  start["users"] = static_cast<std::int64_t>(scenario_.users.size());
  start["events"] = static_cast<std::int64_t>(scenario_.events.size());
  emit(0, "scenario_start", start);
  for (auto &[_, s] : sites_) log_capacity(*s, 0);
  for (const auto &u : scenario_.users) {
    TokenRecord tok = iam_->issue_token(u.user, {u.group}, scenario_.horizon_s + 1, 0);
    tokens_[u.user] = tok.token_id;
    emit(0, "token_issued", {{"user", u.user}, {"group", u.group}, {"expires_at", tok.expires_at}});
  }
  sample(0);
  audit(0);
  for (size_t i = 0; i < scenario_.events.size(); ++i) {
    schedule(scenario_.events[i].at, [this, i](SimTime t) { handle(scenario_.events[i], t); });
  }
}

Simulator::~Simulator() = default;

// ---------------------------------------------------------------------------
// Event loop

void Simulator::schedule(SimTime t, std::function<void(SimTime)> action) {
  agenda_.emplace(std::make_pair(t, next_seq_++), std::move(action));
}

void Simulator::step(SimTime t, const std::function<void()> &action) {
  action();
  run_followups();
  sample(t);
  audit(t);
}

void Simulator::advance_to(SimTime t) {
  if (t < now_) throw Error(Errc::kInvalidArgument, "time cannot move backwards");
  while (!agenda_.empty() && agenda_.begin()->first.first <= t) {
    auto node = agenda_.extract(agenda_.begin());
    now_ = node.key().first;
    step(now_, [&] { node.mapped()(now_); });
  }
  now_ = t;
}

void Simulator::run_followups() {
  while (!followups_.empty()) {
    auto f = std::move(followups_.front());
    followups_.pop_front();
    f();
  }
}

RunReport Simulator::run() {
  if (ran_) throw Error(Errc::kInvalidArgument, "a simulator runs once");
  ran_ = true;
  const SimTime horizon = scenario_.horizon_s;
  advance_to(horizon);
  if (options_.teardown_at_horizon) {
    step(horizon, [&] {
      for (const auto &rec : orch_->list_deployments()) retire(rec.uuid, horizon);
    });
  }
  emit(horizon, "scenario_end", {{"audits", audits_}});

  RunReport report;
  report.scenario = scenario_.name;
  report.seed = scenario_.seed;
  report.horizon_s = horizon;
  report.event_log = log_;
  report.final_state = final_state();
  report.metrics = metrics();
  if (std::string diff = verify_report(report); !diff.empty()) violation(horizon, diff);
  return report;
}

void Simulator::emit(SimTime t, std::string kind, Json fields) {
  log_.push_back({t, log_seq_++, std::move(kind), std::move(fields)});
}

Simulator::Site &Simulator::site(const std::string &provider_id) {
  auto it = sites_.find(provider_id);
  if (it == sites_.end()) throw Error(Errc::kNotFound, "unknown provider '" + provider_id + "'");
  return *it->second;
}

const Simulator::Site &Simulator::site(const std::string &provider_id) const {
  auto it = sites_.find(provider_id);
  if (it == sites_.end()) throw Error(Errc::kNotFound, "unknown provider '" + provider_id + "'");
  return *it->second;
}

ResourceVector Simulator::site_free(const std::string &provider_id) const { return site(provider_id).sched->free(); }

ResourceVector Simulator::site_capacity(const std::string &provider_id) const {
  return site(provider_id).sched->capacity();
}

std::string Simulator::token_for(const std::string &user) const {
  auto it = tokens_.find(user);
  if (it == tokens_.end()) throw Error(Errc::kAuthError, "unknown user '" + user + "'");
  return it->second;
}

// ---------------------------------------------------------------------------
// Scenario events

void Simulator::handle(const ScenarioEvent &ev, SimTime t) {
  using K = ScenarioEvent::Kind;
  switch (ev.kind) {
    case K::kSubmitTemplate: submit(ev, t); break;
    case K::kDeleteDeployment: remove_named(ev, t); break;
    case K::kFailSite: fail_site(ev, t); break;
    case K::kRevokeToken:
      iam_->revoke(token_for(ev.user));
      emit(t, "token_revoked", {{"user", ev.user}});
      break;
    case K::kSubmitJob: submit_job(ev, t); break;
    case K::kSwitchRole: switch_role(ev, t); break;
  }
}

void Simulator::submit(const ScenarioEvent &ev, SimTime t) {
  emit(t, "submit", {{"user", ev.user}, {"name", ev.name}, {"template", ev.template_path}});
  std::string uuid;
  try {
    uuid = orch_->create_deployment(ev.template_text, token_for(ev.user), t);
  } catch (const TemplateError &e) {
    Json kinds = Json::array();
    for (const auto &v : e.report().violations) kinds.push_back(std::string(to_string(v.kind)));
    emit(t, "submit_rejected", {{"user", ev.user}, {"name", ev.name}, {"error", e.name()}, {"violations", kinds}});
    return;
  } catch (const Error &e) {
    if (e.code() == Errc::kInvariantViolation) throw;
    emit(t, "submit_rejected", {{"user", ev.user}, {"name", ev.name}, {"error", e.name()}, {"message", e.what()}});
    return;
  }
  if (!ev.name.empty()) names_[ev.name] = uuid;
  emit(t, "submit_accepted", {{"name", ev.name}, {"uuid", uuid}});
  log_changes(uuid, t);
  if (ev.duration_s && orch_->get_deployment(uuid).state == DeploymentState::kCreateComplete) {
    schedule(t + *ev.duration_s, [this, uuid](SimTime at) { retire(uuid, at); });
  }
}

void Simulator::remove_named(const ScenarioEvent &ev, SimTime t) {
  auto it = names_.find(ev.ref);
  if (it == names_.end()) {
    emit(t, "delete_rejected", {{"ref", ev.ref}, {"error", "NotFound"}});
    return;
  }
  const std::string uuid = it->second;
  const std::string user = ev.user.empty() ? orch_->get_deployment(uuid).owner : ev.user;
  emit(t, "delete", {{"ref", ev.ref}, {"uuid", uuid}, {"user", user}});
  try {
    orch_->delete_deployment(uuid, token_for(user), t);
  } catch (const Error &e) {
    if (e.code() == Errc::kInvariantViolation) throw;
    emit(t, "delete_rejected", {{"ref", ev.ref}, {"uuid", uuid}, {"error", e.name()}, {"message", e.what()}});
    return;
  }
  log_changes(uuid, t);
}

void Simulator::retire(const std::string &uuid, SimTime t) {
  if (orch_->get_deployment(uuid).state != DeploymentState::kCreateComplete) return;
  emit(t, "retire", {{"uuid", uuid}});
  orch_->retire_deployment(uuid, t);
  log_changes(uuid, t);
}

void Simulator::log_changes(const std::string &uuid, SimTime) {
  const DeploymentRecord rec = orch_->get_deployment(uuid);
  size_t &seen = history_seen_[uuid];
  for (; seen < rec.history.size(); ++seen) {
    const StateChange &c = rec.history[seen];
    Json f = {{"uuid", uuid},
              {"from", std::string(to_string(c.from))},
              {"to", std::string(to_string(c.to))},
              {"site", rec.chosen_site ? Json(*rec.chosen_site) : Json(nullptr)}};
    emit(c.t, "deployment_state", std::move(f));
  }
}

void Simulator::fail_site(const ScenarioEvent &ev, SimTime t) {
  Site &s = site(ev.provider);
  SimTime jitter = 0;
  if (ev.jitter_s > 0) jitter = static_cast<SimTime>(rng_() % static_cast<std::uint64_t>(ev.jitter_s + 1));
  const SimTime until = t + ev.duration_s.value_or(0) + jitter;
  s.down_until = std::max(s.down_until, until);
  emit(t, "site_failed", {{"site", ev.provider}, {"until", until}, {"jitter_s", jitter}});
  schedule(until, [this, id = ev.provider](SimTime at) {
    if (site(id).down_until == at) emit(at, "site_recovered", {{"site", id}});
  });
}

void Simulator::switch_role(const ScenarioEvent &ev, SimTime t) {
  Site &s = site(ev.provider);
  RoleTransition tr;
  try {
    tr = s.director.switch_role(ev.node, ev.target, t);
  } catch (const Error &e) {
    emit(t, "switch_role_rejected", {{"site", ev.provider}, {"node", ev.node}, {"error", e.name()}});
    return;
  }
  emit(t, "role_transition", {{"site", ev.provider},
                              {"node", ev.node},
                              {"from", std::string(to_string(tr.from))},
                              {"to", std::string(to_string(tr.to))},
                              {"completed", tr.completed}});
  if (!tr.completed) {
    if (tr.to == NodeRole::kDrainingToBatch) s.sched->set_schedulable(ev.node, false);
    return;
  }
  if (tr.to == NodeRole::kCloud) {
    s.sched->add_node(ev.node, s.director.node(ev.node).capacity);
    log_capacity(s, t);
    s.sched->dispatch(t);
    drain(s);
  } else if (s.sched->has_node(ev.node)) {
    s.sched->remove_node(ev.node);
    log_capacity(s, t);
  }
}

// ---------------------------------------------------------------------------
// Scheduler plumbing

Decision Simulator::submit_instance(Site &s, const InstanceRequest &req, SimTime t) {
  Decision d = s.sched->submit(req, t);
  drain(s);
  const std::string &site_id = s.spec.provider_id;
  if (d.kind == Decision::Kind::kQueued) {
    emit(t, "instance_queued", {{"site", site_id},
                                {"id", req.request_id},
                                {"user", req.user},
                                {"cpus", req.resources.cpus},
                                {"position", static_cast<std::int64_t>(d.position)}});
  } else if (d.kind == Decision::Kind::kRejectedQuota) {
    emit(t, "instance_rejected", {{"site", site_id}, {"id", req.request_id}, {"user", req.user}, {"reason", "quota"}});
  }
  return d;
}

void Simulator::release_instance(Site &s, const std::string &id, const std::string &reason, SimTime t) {
  end_reason_[id] = reason;
  s.sched->release(id, t);
  drain(s);
}

void Simulator::cancel_instance(Site &s, const std::string &id, SimTime t) {
  if (!s.sched->cancel(id)) return;
  emit(t, "instance_cancelled", {{"site", s.spec.provider_id}, {"id", id}});
  owners_.erase(id);
  s.sched->dispatch(t);
  drain(s);
}

void Simulator::drain(Site &s) {
  const std::string &site_id = s.spec.provider_id;
  SimTime last = now_;
  for (auto &ev : s.sched->drain_events()) {
    const RunningInstance &inst = ev.instance;
    const InstanceRequest &req = inst.request;
    const std::string id = inst.id();
    last = ev.t;
    Owner owner;
    if (auto it = owners_.find(id); it != owners_.end()) owner = *it->second;

    if (ev.kind == SchedulerEvent::Kind::kStarted) {
      ++started_;
      wait_total_ += ev.t - req.arrival_time;
      user_cpu_s_[req.user] += 0;
      emit(ev.t, "instance_start", {{"site", site_id},
                                    {"id", id},
                                    {"user", req.user},
                                    {"group", req.group},
                                    {"node", inst.node_id},
                                    {"cpus", req.resources.cpus},
                                    {"mem_mb", req.resources.mem_mb},
                                    {"disk_gb", req.resources.disk_gb},
                                    {"preemptible", req.preemptible()},
                                    {"wait_s", ev.t - req.arrival_time}});
      if (owner.kind == Owner::Kind::kWorker) {
        followups_.push_back([this, owner, t = ev.t] { worker_started(owner.cluster, owner.worker, owner.incarnation, t); });
      }
      continue;
    }

    const bool preempted = ev.kind == SchedulerEvent::Kind::kPreempted;
    std::string reason = "released";
    if (preempted) {
      reason = "preempted";
      ++preemptions_;
    } else if (auto r = end_reason_.find(id); r != end_reason_.end()) {
      reason = r->second;
    }
    end_reason_.erase(id);
    user_cpu_s_[req.user] += ev.cpu_seconds;
    emit(ev.t, "instance_end", {{"site", site_id},
                                {"id", id},
                                {"user", req.user},
                                {"node", inst.node_id},
                                {"cpus", req.resources.cpus},
                                {"reason", reason},
                                {"cpu_s", ev.cpu_seconds}});
    owners_.erase(id);
    if (!preempted) continue;
    if (owner.kind == Owner::Kind::kWorker) {
      followups_.push_back([this, owner, t = ev.t] { worker_lost(owner.cluster, owner.worker, owner.incarnation, t); });
    } else if (owner.kind == Owner::Kind::kCompute) {
      emit(ev.t, "deployment_instance_lost", {{"uuid", owner.uuid}, {"node", owner.node}, {"id", id}});
      auto &list = compute_[owner.uuid];
      list.erase(std::remove_if(list.begin(), list.end(), [&](const auto &p) { return p.second == id; }), list.end());
    }
  }
  sync_nodes(s, last);
}

void Simulator::sync_nodes(Site &s, SimTime t) {
  std::vector<std::string> ids;
  for (const auto &[id, _] : s.director.nodes()) ids.push_back(id);
  for (const auto &id : ids) {
    const bool busy = s.sched->has_node(id) && s.sched->node_busy(id);
    const NodeRecord &rec = s.director.node(id);
    if (busy && !rec.busy) {
      s.director.mark_busy(id, t);
    } else if (!busy && rec.busy) {
      auto tr = s.director.mark_idle(id, t);
      if (!tr) continue;
      emit(t, "role_transition", {{"site", s.spec.provider_id},
                                  {"node", id},
                                  {"from", std::string(to_string(tr->from))},
                                  {"to", std::string(to_string(tr->to))},
                                  {"completed", true}});
      if (tr->to == NodeRole::kBatch && s.sched->has_node(id)) {
        s.sched->remove_node(id);
        log_capacity(s, t);
      } else if (tr->to == NodeRole::kCloud && !s.sched->has_node(id)) {
        s.sched->add_node(id, s.director.node(id).capacity);
        log_capacity(s, t);
        followups_.push_back([this, &s, t] {
          s.sched->dispatch(t);
          drain(s);
        });
      }
    }
  }
}

void Simulator::log_capacity(Site &s, SimTime t) {
  const ResourceVector cap = s.sched->capacity();
  emit(t, "site_capacity",
       {{"site", s.spec.provider_id}, {"cpus", cap.cpus}, {"mem_mb", cap.mem_mb}, {"disk_gb", cap.disk_gb}});
}

void Simulator::sample(SimTime t) {
  for (auto &[_, s] : sites_) s->samples[t] = {s->sched->running_total().cpus, s->sched->capacity().cpus};
}

// ---------------------------------------------------------------------------
// Gateway

std::vector<SiteStatus> Simulator::monitor(SimTime t) {
  std::vector<SiteStatus> out;
  for (const auto &[id, s] : sites_) {
    SiteStatus st;
    st.provider_id = id;
    st.availability = s->down(t) ? 0.0 : s->spec.availability;
    st.latency_ms = s->spec.latency_ms;
    st.free_capacity = s->sched->reclaimable_free();
    out.push_back(std::move(st));
  }
  return out;
}

SiteEvent Simulator::deploy(const std::string &provider_id, const DeploymentRecord &rec, SimTime t) {
  if (rec.attempts.empty()) {
    emit(t, "deployment_placed", {{"uuid", rec.uuid}, {"owner", rec.owner}, {"ranked", rec.ranked}});
  }
  Site &s = site(provider_id);
  auto attempt = [&](bool ok, const std::string &reason) {
    emit(t, "deployment_attempt", {{"uuid", rec.uuid}, {"site", provider_id}, {"ok", ok}, {"reason", reason}});
  };
  if (s.down(t)) {
    attempt(false, "site_unavailable");
    return SiteFailed{"site_unavailable"};
  }

  struct Planned {
    InstanceRequest req;
    std::string node;
    size_t worker = 0;
    bool compute = true;
  };
  const std::string group = rec.owner_groups.empty() ? rec.owner : *rec.owner_groups.begin();
  std::vector<Planned> plan;
  for (const auto &name : topological_order(rec.tmpl)) {
    const NodeSpec &spec = rec.tmpl.nodes.at(name);
    InstanceRequest req;
    req.user = rec.owner;
    req.group = group;
    req.resources = spec.resources;
    req.klass = spec.preemptible ? InstanceClass::kPreemptible : InstanceClass::kNormal;
    req.bid = spec.bid.value_or(0);
    req.arrival_time = t;
    if (spec.kind == NodeKind::kCompute) {
      req.request_id = rec.uuid + "." + name;
      plan.push_back({req, name, 0, true});
    } else if (spec.kind == NodeKind::kElasticCluster) {
      for (std::int64_t w = 0; w < spec.min_workers; ++w) {
        req.request_id = rec.uuid + "." + name + "." + worker_name(w, spec.max_workers) + ".1";
        plan.push_back({req, name, static_cast<size_t>(w), false});
      }
    }
  }

  std::string failure;
  std::vector<std::string> queued, submitted;
  for (const auto &p : plan) {
    try {
      Decision d = submit_instance(s, p.req, t);
      submitted.push_back(p.req.request_id);
      if (d.kind == Decision::Kind::kQueued) {
        queued.push_back(p.req.request_id);
        failure = "insufficient_capacity";
      } else if (d.kind == Decision::Kind::kRejectedQuota) {
        failure = "quota";
      }
    } catch (const Error &e) {
      if (e.code() == Errc::kInvariantViolation) throw;
      failure = std::string(e.name());
    }
    if (!failure.empty()) break;
  }
  if (failure.empty()) {
    for (const auto &id : submitted) {
      if (!s.sched->is_running(id)) failure = "instance_lost";
    }
  }
  if (!failure.empty()) {
    for (const auto &id : queued) cancel_instance(s, id, t);
    for (const auto &id : submitted) {
      if (s.sched->is_running(id)) release_instance(s, id, "rollback", t);
    }
    attempt(false, failure);
    return SiteFailed{failure};
  }

  SiteAccepted accepted;
  for (const auto &p : plan) {
    if (!p.compute) continue;
    auto o = std::make_unique<Owner>();
    o->kind = Owner::Kind::kCompute;
    o->uuid = rec.uuid;
    o->node = p.node;
    owners_[p.req.request_id] = std::move(o);
    compute_[rec.uuid].emplace_back(p.node, p.req.request_id);
    accepted.instances[p.node] = p.req.request_id;
  }
  for (const auto &[name, spec] : rec.tmpl.nodes) {
    if (spec.kind != NodeKind::kElasticCluster) continue;
    auto c = std::make_unique<Cluster>();
    c->id = rec.uuid + "/" + name;
    c->uuid = rec.uuid;
    c->node = name;
    c->site = provider_id;
    c->user = rec.owner;
    c->group = group;
    c->spec = spec;
    c->policy = elastic_defaults_;
    c->policy.min_nodes = spec.min_workers;
    c->policy.max_nodes = spec.max_workers;
    for (std::int64_t w = 0; w < spec.max_workers; ++w) {
      Worker k;
      k.rec.node_id = worker_name(w, spec.max_workers);
      k.rec.capacity = spec.resources;
      k.rec.power = PowerState::kOff;
      k.free = spec.resources;
      c->workers.push_back(std::move(k));
    }
    for (std::int64_t w = 0; w < spec.min_workers; ++w) {
      Worker &k = c->workers[w];
      k.incarnation = 1;
      k.request_id = rec.uuid + "." + name + "." + k.rec.node_id + ".1";
      k.vm = true;
      k.rec.power = PowerState::kBooting;
      k.rec.ready_at = t + c->policy.boot_delay_s;
      auto o = std::make_unique<Owner>();
      o->kind = Owner::Kind::kWorker;
      o->uuid = rec.uuid;
      o->node = name;
      o->cluster = c->id;
      o->worker = static_cast<size_t>(w);
      o->incarnation = 1;
      owners_[k.request_id] = std::move(o);
      emit(t, "worker_power", {{"cluster", c->id}, {"worker", k.rec.node_id}, {"state", "booting"}});
      schedule(k.rec.ready_at, [this, id = c->id, w](SimTime at) { worker_ready(id, w, 1, at); });
    }
    accepted.instances[name] = c->id;
    followups_.push_back([this, id = c->id, t] { cluster_step(id, t); });
    clusters_[c->id] = std::move(c);
  }
  attempt(true, "");
  return accepted;
}

void Simulator::undeploy(const std::string &provider_id, const DeploymentRecord &rec, SimTime t) {
  Site &s = site(provider_id);
  std::vector<std::string> ids;
  for (const auto &[id, c] : clusters_) {
    if (c->uuid == rec.uuid) ids.push_back(id);
  }
  for (const auto &id : ids) {
    teardown_cluster(*clusters_.at(id), t);
    clusters_.erase(id);
  }
  for (const auto &[node, id] : compute_[rec.uuid]) {
    if (s.sched->is_running(id)) release_instance(s, id, "teardown", t);
    owners_.erase(id);
  }
  compute_.erase(rec.uuid);
}

// ---------------------------------------------------------------------------
// Elastic clusters

Simulator::Cluster *Simulator::find_cluster(const std::string &cluster_id) {
  auto it = clusters_.find(cluster_id);
  return it == clusters_.end() ? nullptr : it->second.get();
}

void Simulator::submit_job(const ScenarioEvent &ev, SimTime t) {
  const std::string name = "job-" + std::to_string(++next_job_);
  auto reject = [&](const std::string &reason) {
    emit(t, "job_rejected", {{"job", name}, {"ref", ev.ref}, {"reason", reason}});
  };
  auto named = names_.find(ev.ref);
  if (named == names_.end()) return reject("no_deployment");
  Cluster *c = nullptr;
  for (auto &[_, cl] : clusters_) {
    if (cl->uuid == named->second) {
      c = cl.get();
      break;
    }
  }
  if (c == nullptr) return reject("cluster_unavailable");
  if (!fits(ev.resources, c->spec.resources)) return reject("too_large");

  Job job;
  job.id = next_job_;
  job.name = name;
  job.resources = ev.resources;
  job.duration = ev.duration_s.value_or(0);
  c->jobs[job.id] = job;
  c->queue.insert(job.id);
  emit(t, "job_queued", {{"cluster", c->id},
                         {"job", name},
                         {"ref", ev.ref},
                         {"cpus", ev.resources.cpus},
                         {"mem_mb", ev.resources.mem_mb},
                         {"disk_gb", ev.resources.disk_gb},
                         {"duration_s", job.duration}});
  cluster_step(c->id, t);
}

void Simulator::cluster_step(const std::string &cluster_id, SimTime t) {
  Cluster *c = find_cluster(cluster_id);
  if (c == nullptr) return;

  // FIFO with first fit; later jobs may pass a job that does not fit yet.
  for (auto it = c->queue.begin(); it != c->queue.end();) {
    Job &job = c->jobs.at(*it);
    bool placed = false;
    for (size_t w = 0; w < c->workers.size() && !placed; ++w) {
      Worker &k = c->workers[w];
      if (k.rec.power != PowerState::kOn || !fits(job.resources, k.free)) continue;
      k.free -= job.resources;
      k.jobs.insert(job.id);
      k.rec.busy = true;
      job.worker = w;
      job.start = t;
      ++jobs_started_;
      emit(t, "job_start", {{"cluster", c->id}, {"job", job.name}, {"worker", k.rec.node_id}});
      schedule(t + job.duration, [this, cluster_id, id = job.id, g = job.generation](SimTime at) {
        finish_job(cluster_id, id, g, at);
      });
      placed = true;
    }
    it = placed ? c->queue.erase(it) : std::next(it);
  }

  std::vector<NodeRecord> nodes;
  ResourceVector demand;
  for (const auto &k : c->workers) nodes.push_back(k.rec);
  for (auto id : c->queue) demand += c->jobs.at(id).resources;
  for (const auto &a : reconcile(nodes, demand, t, c->policy)) {
    size_t w = 0;
    while (c->workers[w].rec.node_id != a.node_id) ++w;
    if (a.kind == ElasticAction::Kind::kPowerOn) {
      power_on(*c, w, t);
    } else {
      power_off(*c, w, t);
    }
  }

  for (const auto &k : c->workers) {
    if (k.rec.power != PowerState::kOn || k.rec.busy) continue;
    const SimTime when = k.rec.idle_since + c->policy.t_idle_s;
    if (when > t && c->ticks.insert(when).second) {
      schedule(when, [this, cluster_id](SimTime at) { cluster_step(cluster_id, at); });
    }
  }
}

void Simulator::power_on(Cluster &c, size_t w, SimTime t) {
  Worker &k = c.workers[w];
  Site &s = site(c.site);
  k.incarnation += 1;
  k.request_id = c.uuid + "." + c.node + "." + k.rec.node_id + "." + std::to_string(k.incarnation);
  k.rec.power = PowerState::kBooting;
  k.rec.ready_at = kNever;
  auto o = std::make_unique<Owner>();
  o->kind = Owner::Kind::kWorker;
  o->uuid = c.uuid;
  o->node = c.node;
  o->cluster = c.id;
  o->worker = w;
  o->incarnation = k.incarnation;
  owners_[k.request_id] = std::move(o);
  emit(t, "worker_power", {{"cluster", c.id}, {"worker", k.rec.node_id}, {"state", "booting"}});

  InstanceRequest req;
  req.request_id = k.request_id;
  req.user = c.user;
  req.group = c.group;
  req.resources = c.spec.resources;
  req.klass = c.spec.preemptible ? InstanceClass::kPreemptible : InstanceClass::kNormal;
  req.bid = c.spec.bid.value_or(0);
  req.arrival_time = t;
  std::string refused;
  try {
    Decision d = submit_instance(s, req, t);
    if (d.kind == Decision::Kind::kStarted) {
      k.vm = true;
      k.rec.ready_at = t + c.policy.boot_delay_s;
      schedule(k.rec.ready_at, [this, id = c.id, w, inc = k.incarnation](SimTime at) { worker_ready(id, w, inc, at); });
    } else if (d.kind == Decision::Kind::kRejectedQuota) {
      refused = "quota";
    }
  } catch (const Error &e) {
    if (e.code() == Errc::kInvariantViolation) throw;
    refused = std::string(e.name());
  }
  if (!refused.empty()) {
    owners_.erase(k.request_id);
    k.rec.power = PowerState::kOff;
    emit(t, "worker_power", {{"cluster", c.id}, {"worker", k.rec.node_id}, {"state", "off"}, {"reason", refused}});
  }
}

void Simulator::power_off(Cluster &c, size_t w, SimTime t) {
  Worker &k = c.workers[w];
  if (k.rec.power != PowerState::kOn || k.rec.busy) violation(t, c.id + "/" + k.rec.node_id + ": power off while busy");
  k.rec.power = PowerState::kOff;
  k.vm = false;
  emit(t, "worker_power", {{"cluster", c.id}, {"worker", k.rec.node_id}, {"state", "off"}, {"reason", "idle"}});
  release_instance(site(c.site), k.request_id, "power_off", t);
}

void Simulator::worker_started(const std::string &cluster_id, size_t w, int incarnation, SimTime t) {
  Cluster *c = find_cluster(cluster_id);
  if (c == nullptr) return;
  Worker &k = c->workers[w];
  if (k.incarnation != incarnation || k.rec.power != PowerState::kBooting || k.rec.ready_at != kNever) return;
  k.vm = true;
  k.rec.ready_at = t + c->policy.boot_delay_s;
  schedule(k.rec.ready_at, [this, cluster_id, w, incarnation](SimTime at) { worker_ready(cluster_id, w, incarnation, at); });
}

void Simulator::worker_ready(const std::string &cluster_id, size_t w, int incarnation, SimTime t) {
  Cluster *c = find_cluster(cluster_id);
  if (c == nullptr) return;
  Worker &k = c->workers[w];
  if (k.incarnation != incarnation || k.rec.power != PowerState::kBooting || !k.vm || k.rec.ready_at != t) return;
  k.rec.power = PowerState::kOn;
  k.rec.busy = false;
  k.rec.idle_since = t;
  emit(t, "worker_power", {{"cluster", c->id}, {"worker", k.rec.node_id}, {"state", "on"}});
  cluster_step(cluster_id, t);
}

void Simulator::worker_lost(const std::string &cluster_id, size_t w, int incarnation, SimTime t) {
  Cluster *c = find_cluster(cluster_id);
  if (c == nullptr) return;
  Worker &k = c->workers[w];
  if (k.incarnation != incarnation || !k.vm) return;
  for (auto id : k.jobs) {
    Job &job = c->jobs.at(id);
    ++job.generation;
    job.worker.reset();
    c->queue.insert(id);
    emit(t, "job_requeued", {{"cluster", c->id}, {"job", job.name}});
  }
  k.jobs.clear();
  k.free = k.rec.capacity;
  k.vm = false;
  k.rec.power = PowerState::kOff;
  k.rec.busy = false;
  emit(t, "worker_power", {{"cluster", c->id}, {"worker", k.rec.node_id}, {"state", "off"}, {"reason", "preempted"}});
  cluster_step(cluster_id, t);
}

void Simulator::finish_job(const std::string &cluster_id, std::uint64_t id, std::uint64_t generation, SimTime t) {
  Cluster *c = find_cluster(cluster_id);
  if (c == nullptr) return;
  auto it = c->jobs.find(id);
  if (it == c->jobs.end() || it->second.generation != generation || !it->second.worker) return;
  Job &job = it->second;
  Worker &k = c->workers[*job.worker];
  k.free += job.resources;
  k.jobs.erase(id);
  if (k.jobs.empty()) {
    k.rec.busy = false;
    k.rec.idle_since = t;
  }
  ++jobs_completed_;
  emit(t, "job_end", {{"cluster", c->id}, {"job", job.name}, {"worker", k.rec.node_id}});
  c->jobs.erase(it);
  cluster_step(cluster_id, t);
}

void Simulator::teardown_cluster(Cluster &c, SimTime t) {
  Site &s = site(c.site);
  for (const auto &[_, job] : c.jobs) emit(t, "job_cancelled", {{"cluster", c.id}, {"job", job.name}});
  c.jobs.clear();
  c.queue.clear();
  for (auto &k : c.workers) {
    if (k.rec.power != PowerState::kOff && !k.vm) cancel_instance(s, k.request_id, t);
  }
  for (auto &k : c.workers) {
    if (k.rec.power == PowerState::kOff) continue;
    k.rec.power = PowerState::kOff;
    k.rec.busy = false;
    k.jobs.clear();
    k.free = k.rec.capacity;
    emit(t, "worker_power", {{"cluster", c.id}, {"worker", k.rec.node_id}, {"state", "off"}, {"reason", "teardown"}});
    if (k.vm) {
      k.vm = false;
      release_instance(s, k.request_id, "teardown", t);
    }
    owners_.erase(k.request_id);
  }
}

// ---------------------------------------------------------------------------
// Audits and results

void Simulator::audit(SimTime t) {
  ++audits_;
  for (const auto &[id, s] : sites_) {
    s->sched->audit();
    s->director.audit();
    if (s->sched->free() + s->sched->running_total() != s->sched->capacity()) {
      violation(t, id + ": free + running != capacity");
    }
    std::set<std::string> expected;
    for (const auto &[node, rec] : s->director.nodes()) {
      if (rec.role == NodeRole::kCloud || rec.role == NodeRole::kDrainingToBatch) expected.insert(node);
      const bool busy = s->sched->has_node(node) && s->sched->node_busy(node);
      if (busy != rec.busy) violation(t, id + "/" + node + ": busy flag out of sync");
    }
    auto have = s->sched->node_ids();
    if (std::set<std::string>(have.begin(), have.end()) != expected) {
      violation(t, id + ": scheduler nodes differ from the cloud pool");
    }
  }
  for (const auto &[id, c] : clusters_) {
    for (const auto &k : c->workers) {
      ResourceVector used;
      for (auto j : k.jobs) used += c->jobs.at(j).resources;
      if (k.free + used != k.rec.capacity) violation(t, id + "/" + k.rec.node_id + ": worker accounting");
      if (k.rec.busy != !k.jobs.empty()) violation(t, id + "/" + k.rec.node_id + ": busy flag");
      if (k.rec.power != PowerState::kOn && !k.jobs.empty()) {
        violation(t, id + "/" + k.rec.node_id + ": jobs on a worker that is not on");
      }
      if (k.vm != site(c->site).sched->is_running(k.request_id) && k.rec.power != PowerState::kOff) {
        violation(t, id + "/" + k.rec.node_id + ": instance state");
      }
      if (k.rec.power == PowerState::kOff && k.vm) violation(t, id + "/" + k.rec.node_id + ": off with instance");
    }
  }
  for (const auto &rec : orch_->list_deployments()) {
    if (rec.attempts.size() > rec.ranked.size()) violation(t, rec.uuid + ": more attempts than candidates");
    for (size_t i = 0; i < rec.attempts.size(); ++i) {
      if (rec.attempts[i].provider_id != rec.ranked[i]) violation(t, rec.uuid + ": attempts leave the ranked order");
    }
    DeploymentState at = DeploymentState::kCreateInProgress;
    for (const auto &c : rec.history) {
      if (c.from != at || !legal_transition(c.from, c.to)) violation(t, rec.uuid + ": illegal state change");
      at = c.to;
    }
    if (at != rec.state) violation(t, rec.uuid + ": state differs from history");
  }
}

Json Simulator::final_state() const {
  Json out = Json::object();
  out["t"] = now_;
  Json sites = Json::object();
  for (const auto &[id, s] : sites_) {
    Json js = Json::object();
    js["capacity"] = triple(s->sched->capacity());
    js["free"] = triple(s->sched->free());
    js["running"] = static_cast<std::int64_t>(s->sched->running().size());
    js["queued"] = static_cast<std::int64_t>(s->sched->queue_size());
    js["down"] = s->down(now_);
    Json nodes = Json::array();
    for (const auto &[node, rec] : s->director.nodes()) {
      nodes.push_back({{"node", node}, {"role", std::string(to_string(rec.role))}, {"busy", rec.busy}});
    }
    js["nodes"] = std::move(nodes);
    sites[id] = std::move(js);
  }
  out["sites"] = std::move(sites);
  Json deps = Json::array();
  for (const auto &rec : orch_->list_deployments()) {
    Json attempts = Json::array();
    for (const auto &a : rec.attempts) attempts.push_back({{"site", a.provider_id}, {"ok", a.ok}, {"reason", a.reason}});
    deps.push_back({{"uuid", rec.uuid},
                    {"owner", rec.owner},
                    {"state", std::string(to_string(rec.state))},
                    {"site", rec.chosen_site ? Json(*rec.chosen_site) : Json(nullptr)},
                    {"ranked", rec.ranked},
                    {"attempts", std::move(attempts)}});
  }
  out["deployments"] = std::move(deps);
  Json clusters = Json::object();
  for (const auto &[id, c] : clusters_) {
    Json workers = Json::array();
    for (const auto &k : c->workers) {
      workers.push_back({{"worker", k.rec.node_id},
                         {"power", std::string(to_string(k.rec.power))},
                         {"busy", k.rec.busy},
                         {"idle_since", k.rec.idle_since}});
    }
    std::int64_t running = 0;
    for (const auto &[_, j] : c->jobs) running += j.worker.has_value();
    clusters[id] = {{"site", c->site},
                    {"min_nodes", c->policy.min_nodes},
                    {"max_nodes", c->policy.max_nodes},
                    {"t_idle_s", c->policy.t_idle_s},
                    {"queued_jobs", static_cast<std::int64_t>(c->queue.size())},
                    {"running_jobs", running},
                    {"workers", std::move(workers)}};
  }
  out["clusters"] = std::move(clusters);
  return out;
}

Json Simulator::metrics() const {
  const SimTime horizon = scenario_.horizon_s;
  Json m = Json::object();
  m["horizon_s"] = horizon;
  Json sites = Json::object();
  for (const auto &[id, s] : sites_) {
    std::vector<std::tuple<SimTime, std::int64_t, std::int64_t>> series;
    for (const auto &[t, p] : s->samples) {
      if (t > horizon) break;
      if (!series.empty() && std::get<1>(series.back()) == p.first && std::get<2>(series.back()) == p.second) continue;
      series.emplace_back(t, p.first, p.second);
    }
    std::int64_t busy = 0, capacity = 0;
    Json js = Json::array();
    for (size_t i = 0; i < series.size(); ++i) {
      const auto [t, used, cap] = series[i];
      const SimTime end = i + 1 < series.size() ? std::get<0>(series[i + 1]) : horizon;
      busy += used * (end - t);
      capacity += cap * (end - t);
      js.push_back(Json::array({t, used, cap}));
    }
    sites[id] = {{"busy_cpu_s", busy},
                 {"capacity_cpu_s", capacity},
                 {"utilization", capacity > 0 ? static_cast<double>(busy) / static_cast<double>(capacity) : 0.0},
                 {"series", std::move(js)}};
  }
  m["sites"] = std::move(sites);

  std::map<std::string, std::int64_t> cpu = user_cpu_s_;
  std::int64_t queued = 0;
  for (const auto &[_, s] : sites_) {
    for (const auto &[_, r] : s->sched->running()) {
      if (horizon > r.start_time) cpu[r.request.user] += r.request.resources.cpus * (horizon - r.start_time);
    }
    queued += static_cast<std::int64_t>(s->sched->queue_size());
  }
  Json users = Json::object();
  for (const auto &[u, c] : cpu) users[u] = c;
  m["user_cpu_s"] = std::move(users);
  m["preemptions"] = preemptions_;
  m["instances_started"] = started_;
  m["wait_s_total"] = wait_total_;
  m["mean_wait_s"] = started_ > 0 ? static_cast<double>(wait_total_) / static_cast<double>(started_) : 0.0;
  m["instances_queued_at_horizon"] = queued;
  Json deps = Json::object();
  for (auto s : {DeploymentState::kCreateInProgress, DeploymentState::kCreateComplete, DeploymentState::kCreateFailed,
                 DeploymentState::kDeleteInProgress, DeploymentState::kDeleted}) {
    deps[std::string(to_string(s))] = 0;
  }
  for (const auto &rec : orch_->list_deployments()) {
    auto &slot = deps[std::string(to_string(rec.state))];
    slot = slot.get<std::int64_t>() + 1;
  }
  m["deployments"] = std::move(deps);
  std::int64_t jobs_queued = 0;
  for (const auto &[_, c] : clusters_) jobs_queued += static_cast<std::int64_t>(c->queue.size());
  m["jobs_started"] = jobs_started_;
  m["jobs_completed"] = jobs_completed_;
  m["jobs_queued_at_horizon"] = jobs_queued;
  return m;
}

// ---------------------------------------------------------------------------
// Step-wise use

std::string Simulator::create(std::string_view template_text, const std::string &user, SimTime t,
                              const std::optional<PreferenceList> &prefs) {
  advance_to(t);
  std::string uuid;
  step(t, [&] {
    emit(t, "submit", {{"user", user}});
    uuid = orch_->create_deployment(template_text, token_for(user), t, prefs);
    emit(t, "submit_accepted", {{"uuid", uuid}});
    log_changes(uuid, t);
  });
  return uuid;
}

DeploymentRecord Simulator::remove(const std::string &uuid, const std::string &user, SimTime t) {
  advance_to(t);
  DeploymentRecord out;
  step(t, [&] {
    emit(t, "delete", {{"uuid", uuid}, {"user", user}});
    out = orch_->delete_deployment(uuid, token_for(user), t);
    log_changes(uuid, t);
  });
  return out;
}

}  // namespace fedorch
