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

#include "fedorch/site_scheduler.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>

namespace fedorch {

namespace {

// Victim preference: lowest bid, then youngest, then request id.
bool victim_less(const RunningInstance &a, const RunningInstance &b) {
  if (a.request.bid != b.request.bid) return a.request.bid < b.request.bid;
  if (a.start_time != b.start_time) return a.start_time > b.start_time;
  return a.request.request_id < b.request.request_id;
}

bool eligible_victim(const InstanceRequest &request, const RunningInstance &r) {
  if (!r.request.preemptible()) return false;
  return !request.preemptible() || r.request.bid < request.bid;
}

ResourceVector deficit(const ResourceVector &demand, const ResourceVector &free) {
  return {std::max<std::int64_t>(0, demand.cpus - free.cpus), std::max<std::int64_t>(0, demand.mem_mb - free.mem_mb),
          std::max<std::int64_t>(0, demand.disk_gb - free.disk_gb)};
}

// Lexicographic comparison of two victim sets already in victim order.
bool better_victims(const std::vector<RunningInstance> &a, const std::vector<RunningInstance> &b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), victim_less);
}

}  // namespace

// ---------------------------------------------------------------------------
// UsageLedger

UsageLedger::UsageLedger(SimTime half_life_s) : half_life_(half_life_s) {
  if (half_life_s <= 0) throw Error(Errc::kConfigError, "half_life_s must be positive");
}

void UsageLedger::set_weight(const std::string &user, double weight) {
  if (!(weight > 0)) throw Error(Errc::kConfigError, "weight for '" + user + "' must be positive");
  accounts_[user].weight = weight;
}

double UsageLedger::weight(const std::string &user) const {
  auto it = accounts_.find(user);
  return it == accounts_.end() ? 1.0 : it->second.weight;
}

void UsageLedger::accrue(const std::string &user, double cpu_seconds, SimTime t) {
  if (cpu_seconds < 0) throw Error(Errc::kInvalidArgument, "negative usage accrual");
  Account &a = accounts_[user];
  if (t < a.last_update) throw Error(Errc::kInvariantViolation, "usage ledger time ran backwards for '" + user + "'");
  a.usage = usage(user, t) + cpu_seconds;
  a.last_update = t;
}

double UsageLedger::usage(const std::string &user, SimTime t) const {
  auto it = accounts_.find(user);
  if (it == accounts_.end()) return 0.0;
  const Account &a = it->second;
  if (t == a.last_update || a.usage == 0) return a.usage;
  return a.usage * std::exp2(static_cast<double>(a.last_update - t) / static_cast<double>(half_life_));
}

double UsageLedger::priority(const std::string &user, SimTime t) const {
  return weight(user) / (1.0 + usage(user, t));
}

// ---------------------------------------------------------------------------
// SchedulerConfig

SchedulerConfig SchedulerConfig::from(const KvConfig &cfg) {
  SchedulerConfig out;
  if (const auto *e = cfg.find("half_life_s")) {
    out.half_life_s = KvConfig::integer(*e);
    if (out.half_life_s <= 0) throw Error(Errc::kConfigError, "half_life_s must be positive");
  }
  if (const auto *e = cfg.find("backfill")) out.backfill = KvConfig::boolean(*e);
  for (const auto &e : cfg.with_prefix("weights.")) {
    double w = KvConfig::decimal(e);
    if (!(w > 0)) throw Error(Errc::kConfigError, "line " + std::to_string(e.line) + ": weight must be positive");
    out.weights[e.key.substr(8)] = w;
  }
  for (const auto &e : cfg.with_prefix("quota.")) out.quotas[e.key.substr(6)] = KvConfig::triple(e);
  return out;
}

// ---------------------------------------------------------------------------
// select_victims

std::vector<RunningInstance> select_victims(const InstanceRequest &request, const ResourceVector &free,
                                            std::span<const RunningInstance> running) {
  if (fits(request.resources, free)) return {};

  std::vector<RunningInstance> cand;
  for (const auto &r : running) {
    if (eligible_victim(request, r)) cand.push_back(r);
  }
  std::sort(cand.begin(), cand.end(), victim_less);

  const ResourceVector need = deficit(request.resources, free);
  const size_t n = cand.size();
  std::vector<ResourceVector> suffix(n + 1);
  for (size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] + cand[i].request.resources;
  if (!fits(need, suffix[0])) {
    throw Error(Errc::kInfeasible, "no preemptible set frees " + need.str() + " for " + request.request_id);
  }

  // best_r[c][r] = sum of the r largest values of component c; bounds any r picks.
  std::array<std::vector<std::int64_t>, 3> best_r;
  for (int c = 0; c < 3; ++c) {
    std::vector<std::int64_t> vals;
    for (const auto &x : cand) {
      const auto &res = x.request.resources;
      vals.push_back(c == 0 ? res.cpus : c == 1 ? res.mem_mb : res.disk_gb);
    }
    std::sort(vals.rbegin(), vals.rend());
    best_r[c].assign(n + 1, 0);
    for (size_t i = 0; i < n; ++i) best_r[c][i + 1] = best_r[c][i] + vals[i];
  }
  auto top = [&](size_t r) { return ResourceVector{best_r[0][r], best_r[1][r], best_r[2][r]}; };

  size_t k_min = 1;
  while (k_min < n && !fits(need, top(k_min))) ++k_min;

  std::vector<size_t> picked;
  std::function<bool(size_t, const ResourceVector &, size_t)> search = [&](size_t start, const ResourceVector &acc,
                                                                          size_t k) -> bool {
    if (picked.size() == k) return fits(need, acc);
    const size_t remaining = k - picked.size();
    if (!fits(need, acc + top(remaining))) return false;
    for (size_t i = start; i + remaining <= n; ++i) {
      if (!fits(need, acc + suffix[i])) break;
      picked.push_back(i);
      if (search(i + 1, acc + cand[i].request.resources, k)) return true;
      picked.pop_back();
    }
    return false;
  };

  for (size_t k = k_min; k <= n; ++k) {
    picked.clear();
    if (search(0, ResourceVector{}, k)) {
      std::vector<RunningInstance> out;
      for (size_t i : picked) out.push_back(cand[i]);
      return out;
    }
  }
  throw Error(Errc::kInfeasible, "no preemptible set frees " + need.str() + " for " + request.request_id);
}

// ---------------------------------------------------------------------------
// SiteScheduler

SiteScheduler::SiteScheduler(std::string site_id, SchedulerConfig config)
    : site_id_(std::move(site_id)), config_(std::move(config)), ledger_(config_.half_life_s) {
  for (const auto &[user, w] : config_.weights) ledger_.set_weight(user, w);
}

void SiteScheduler::add_node(const std::string &node_id, const ResourceVector &capacity, bool schedulable) {
  if (nodes_.count(node_id)) throw Error(Errc::kInvalidArgument, "node '" + node_id + "' already present");
  nodes_[node_id] = Node{capacity, capacity, schedulable};
}

void SiteScheduler::remove_node(const std::string &node_id) {
  if (!nodes_.count(node_id)) throw Error(Errc::kUnknownNode, "unknown node '" + node_id + "'");
  if (node_busy(node_id)) throw Error(Errc::kInvariantViolation, "cannot remove busy node '" + node_id + "'");
  nodes_.erase(node_id);
}

void SiteScheduler::set_schedulable(const std::string &node_id, bool schedulable) {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error(Errc::kUnknownNode, "unknown node '" + node_id + "'");
  it->second.schedulable = schedulable;
}

bool SiteScheduler::node_busy(const std::string &node_id) const {
  return std::any_of(running_.begin(), running_.end(), [&](const auto &kv) { return kv.second.node_id == node_id; });
}

ResourceVector SiteScheduler::node_free(const std::string &node_id) const {
  auto it = nodes_.find(node_id);
  if (it == nodes_.end()) throw Error(Errc::kUnknownNode, "unknown node '" + node_id + "'");
  return it->second.free;
}

std::vector<std::string> SiteScheduler::node_ids() const {
  std::vector<std::string> out;
  for (const auto &[id, _] : nodes_) out.push_back(id);
  return out;
}

ResourceVector SiteScheduler::capacity() const {
  ResourceVector total;
  for (const auto &[_, n] : nodes_) total += n.capacity;
  return total;
}

ResourceVector SiteScheduler::free() const {
  ResourceVector total;
  for (const auto &[_, n] : nodes_) total += n.free;
  return total;
}

ResourceVector SiteScheduler::schedulable_free() const {
  ResourceVector total;
  for (const auto &[_, n] : nodes_) {
    if (n.schedulable) total += n.free;
  }
  return total;
}

ResourceVector SiteScheduler::reclaimable_free() const {
  ResourceVector total = schedulable_free();
  for (const auto &[_, r] : running_) {
    if (r.request.preemptible() && nodes_.at(r.node_id).schedulable) total += r.request.resources;
  }
  return total;
}

ResourceVector SiteScheduler::running_total() const {
  ResourceVector total;
  for (const auto &[_, r] : running_) total += r.request.resources;
  return total;
}

ResourceVector SiteScheduler::group_usage(const std::string &group) const {
  ResourceVector total;
  for (const auto &[_, r] : running_) {
    if (r.request.group == group) total += r.request.resources;
  }
  return total;
}

bool SiteScheduler::is_queued(const std::string &request_id) const {
  return std::any_of(queue_.begin(), queue_.end(), [&](const auto &q) { return q.request_id == request_id; });
}

ResourceVector SiteScheduler::queued_demand() const {
  ResourceVector total;
  for (const auto &q : queue_) total += q.resources;
  return total;
}

std::vector<InstanceRequest> SiteScheduler::queue_order(SimTime t) const {
  std::vector<std::pair<double, const InstanceRequest *>> keyed;
  for (const auto &q : queue_) keyed.emplace_back(ledger_.priority(q.user, t), &q);
  std::sort(keyed.begin(), keyed.end(), [](const auto &a, const auto &b) {
    if (a.first != b.first) return a.first > b.first;
    if (a.second->arrival_time != b.second->arrival_time) return a.second->arrival_time < b.second->arrival_time;
    return a.second->request_id < b.second->request_id;
  });
  std::vector<InstanceRequest> out;
  for (const auto &[_, q] : keyed) out.push_back(*q);
  return out;
}

bool SiteScheduler::quota_allows(const InstanceRequest &request) const {
  auto it = config_.quotas.find(request.group);
  if (it == config_.quotas.end()) return true;
  return fits(group_usage(request.group) + request.resources, it->second);
}

std::optional<std::string> SiteScheduler::first_fit(const ResourceVector &demand) const {
  for (const auto &[id, n] : nodes_) {
    if (n.schedulable && fits(demand, n.free)) return id;
  }
  return std::nullopt;
}

RunningInstance SiteScheduler::start_on(const InstanceRequest &request, const std::string &node_id, SimTime t) {
  nodes_.at(node_id).free -= request.resources;
  RunningInstance inst{request, t, node_id};
  running_.emplace(request.request_id, inst);
  events_.push_back({SchedulerEvent::Kind::kStarted, inst, t, 0});
  return inst;
}

void SiteScheduler::terminate(const std::string &request_id, SimTime t, SchedulerEvent::Kind kind) {
  auto it = running_.find(request_id);
  if (it == running_.end()) throw Error(Errc::kUnknownInstance, "instance '" + request_id + "' is not running");
  RunningInstance inst = it->second;
  std::int64_t cpu_seconds = inst.request.resources.cpus * (t - inst.start_time);
  ledger_.accrue(inst.request.user, static_cast<double>(cpu_seconds), t);
  nodes_.at(inst.node_id).free += inst.request.resources;
  running_.erase(it);
  events_.push_back({kind, std::move(inst), t, cpu_seconds});
}

std::optional<RunningInstance> SiteScheduler::try_start(const InstanceRequest &request, SimTime t,
                                                        std::vector<RunningInstance> *victims) {
  if (!quota_allows(request)) return std::nullopt;
  if (auto node = first_fit(request.resources)) return start_on(request, *node, t);

  std::optional<std::string> best_node;
  std::vector<RunningInstance> best;
  for (const auto &[id, n] : nodes_) {
    if (!n.schedulable || !fits(request.resources, n.capacity)) continue;
    std::vector<RunningInstance> on_node;
    for (const auto &[_, r] : running_) {
      if (r.node_id == id) on_node.push_back(r);
    }
    try {
      auto chosen = select_victims(request, n.free, on_node);
      if (!best_node || better_victims(chosen, best)) {
        best_node = id;
        best = std::move(chosen);
      }
    } catch (const Error &e) {
      if (e.code() != Errc::kInfeasible) throw;
    }
  }
  if (!best_node) return std::nullopt;
  for (const auto &v : best) terminate(v.id(), t, SchedulerEvent::Kind::kPreempted);
  if (victims) victims->insert(victims->end(), best.begin(), best.end());
  return start_on(request, *best_node, t);
}

Decision SiteScheduler::submit(const InstanceRequest &request, SimTime t) {
  if (!request.resources.any_positive()) {
    throw Error(Errc::kInvalidArgument, "request '" + request.request_id + "' asks for no resources");
  }
  if (request.preemptible() && !(request.bid >= 0)) {
    throw Error(Errc::kInvalidArgument, "request '" + request.request_id + "' has a negative bid");
  }
  if (!seen_ids_.insert(request.request_id).second) {
    throw Error(Errc::kDuplicateRequestId, "request id '" + request.request_id + "' already used");
  }

  Decision d;
  if (auto cap = config_.quotas.find(request.group); cap != config_.quotas.end() && !fits(request.resources, cap->second)) {
    d.kind = Decision::Kind::kRejectedQuota;
    return d;
  }

  if (config_.backfill || queue_.empty()) {
    if (auto inst = try_start(request, t, &d.victims)) {
      d.kind = Decision::Kind::kStarted;
      d.instance = std::move(inst);
      return d;
    }
    queue_.push_back(request);
  } else {
    queue_.push_back(request);
    size_t mark = events_.size();
    dispatch(t);
    if (auto it = running_.find(request.request_id); it != running_.end()) {
      for (size_t i = mark; i < events_.size(); ++i) {
        if (events_[i].kind == SchedulerEvent::Kind::kPreempted) d.victims.push_back(events_[i].instance);
      }
      d.kind = Decision::Kind::kStarted;
      d.instance = it->second;
      return d;
    }
  }
  auto order = queue_order(t);
  auto pos = std::find_if(order.begin(), order.end(), [&](const auto &q) { return q.request_id == request.request_id; });
  d.kind = Decision::Kind::kQueued;
  d.position = static_cast<size_t>(pos - order.begin());
  return d;
}

std::vector<RunningInstance> SiteScheduler::dispatch(SimTime t) {
  std::vector<RunningInstance> started;
  bool progress = true;
  while (progress && !queue_.empty()) {
    progress = false;
    for (const auto &req : queue_order(t)) {
      if (auto inst = try_start(req, t, nullptr)) {
        queue_.erase(std::find_if(queue_.begin(), queue_.end(),
                                  [&](const auto &q) { return q.request_id == req.request_id; }));
        started.push_back(std::move(*inst));
        progress = true;
        break;
      }
      if (!config_.backfill) break;
    }
  }
  return started;
}

std::vector<RunningInstance> SiteScheduler::release(const std::string &request_id, SimTime t) {
  terminate(request_id, t, SchedulerEvent::Kind::kReleased);
  return dispatch(t);
}

bool SiteScheduler::cancel(const std::string &request_id) {
  auto it = std::find_if(queue_.begin(), queue_.end(), [&](const auto &q) { return q.request_id == request_id; });
  if (it == queue_.end()) return false;
  queue_.erase(it);
  return true;
}

std::vector<SchedulerEvent> SiteScheduler::drain_events() {
  std::vector<SchedulerEvent> out;
  out.swap(events_);
  return out;
}

void SiteScheduler::audit() const {
  std::map<std::string, ResourceVector> used;
  for (const auto &[_, r] : running_) {
    if (!nodes_.count(r.node_id)) {
      throw Error(Errc::kInvariantViolation, site_id_ + ": instance on unknown node " + r.node_id);
    }
    used[r.node_id] += r.request.resources;
  }
  for (const auto &[id, n] : nodes_) {
    if (n.free + used[id] != n.capacity) {
      throw Error(Errc::kInvariantViolation, site_id_ + "/" + id + ": free " + n.free.str() + " + running " +
                                                 used[id].str() + " != capacity " + n.capacity.str());
    }
  }
  for (const auto &[group, cap] : config_.quotas) {
    if (!fits(group_usage(group), cap)) {
      throw Error(Errc::kInvariantViolation, site_id_ + ": group '" + group + "' exceeds quota");
    }
  }
}

}  // namespace fedorch
