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

#include "fedorch/scenario.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fedorch/structured_text.hpp"

namespace fedorch {

namespace {

[[noreturn]] void scenario_error(int line, const std::string &what) {
  throw Error(Errc::kScenarioError, (line > 0 ? "line " + std::to_string(line) + ": " : std::string()) + what);
}

std::string read_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kScenarioError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string resolve(const std::string &base_dir, const std::string &path) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

bool has_cluster(const std::string &template_text) {
  try {
    for (const auto &[_, n] : parse_template(template_text).nodes) {
      if (n.kind == NodeKind::kElasticCluster) return true;
    }
  } catch (const Error &) {
  }
  return false;
}

std::string two_digits(size_t i) { return (i < 10 ? "0" : "") + std::to_string(i); }

std::string render_list(const std::vector<std::string> &v) {
  std::string out = "[";
  for (size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
  return out + "]";
}

void fold_flat_block(const text::Value &block, KvConfig &cfg, std::initializer_list<std::string_view> keys) {
  block.require_keys(keys);
  for (const auto &e : block.entries()) cfg.set(e.key, e.value->as_string());
}

ProviderSpec parse_provider(const std::string &id, const text::Value &v) {
  v.require_keys({"availability", "latency_ms", "nodes"});
  ProviderSpec p;
  p.provider_id = id;
  if (const auto *a = v.find("availability")) p.availability = a->as_decimal();
  if (p.availability < 0 || p.availability > 1) v.fail("availability must be within [0, 1]");
  if (const auto *l = v.find("latency_ms")) p.latency_ms = l->as_decimal();
  if (p.latency_ms < 0) v.fail("latency_ms must be non-negative");
  const auto *nodes = v.find("nodes");
  if (nodes == nullptr || !nodes->is_list()) v.fail("provider '" + id + "' needs a 'nodes' list");
  for (const auto &item : nodes->items()) {
    item.require_keys({"cpus", "mem_mb", "disk_gb", "role", "count"});
    text::Value res = text::Value::map(item.line());
    for (const auto &e : item.entries()) {
      if (e.key == "cpus" || e.key == "mem_mb" || e.key == "disk_gb") res.add_entry(e.key, e.line, *e.value);
    }
    ResourceVector cap = res.as_resources();
    NodeRole role = NodeRole::kCloud;
    if (const auto *r = item.find("role")) {
      auto parsed = parse_node_role(r->as_string());
      if (!parsed) r->fail("role must be batch or cloud");
      role = *parsed;
    }
    std::int64_t count = 1;
    if (const auto *c = item.find("count")) count = c->as_int();
    if (count < 1) item.fail("count must be positive");
    for (std::int64_t k = 0; k < count; ++k) {
      p.nodes.push_back({id + "-n" + two_digits(p.nodes.size()), cap, role});
    }
  }
  return p;
}

ScenarioEvent parse_event(const text::Value &v, const std::string &base_dir) {
  if (!v.is_map()) v.fail("event must be an inline map");
  v.reject_duplicate_keys();
  const auto *kind = v.find("kind");
  const auto *at = v.find("at");
  if (kind == nullptr || at == nullptr) v.fail("event needs 'at' and 'kind'");
  ScenarioEvent ev;
  ev.at = at->as_int();
  ev.line = v.line();
  auto str = [&](std::string_view key) -> std::string {
    const auto *x = v.find(key);
    if (x == nullptr) v.fail("event needs '" + std::string(key) + "'");
    return x->as_string();
  };
  auto duration = [&]() -> std::optional<SimTime> {
    const auto *d = v.find("duration_s");
    if (d == nullptr) return std::nullopt;
    SimTime s = d->as_int();
    if (s <= 0) d->fail("duration_s must be positive");
    return s;
  };
  const std::string &k = kind->as_string();
  if (k == "submit") {
    v.require_keys({"at", "kind", "template", "user", "name", "duration_s"});
    ev.kind = ScenarioEvent::Kind::kSubmitTemplate;
    ev.template_path = str("template");
    ev.template_text = read_file(resolve(base_dir, ev.template_path));
    ev.user = str("user");
    ev.name = v.find("name") ? str("name") : "";
    ev.duration_s = duration();
  } else if (k == "delete") {
    v.require_keys({"at", "kind", "ref", "user"});
    ev.kind = ScenarioEvent::Kind::kDeleteDeployment;
    ev.ref = str("ref");
    if (v.find("user")) ev.user = str("user");
  } else if (k == "fail_site") {
    v.require_keys({"at", "kind", "provider", "duration_s", "jitter_s"});
    ev.kind = ScenarioEvent::Kind::kFailSite;
    ev.provider = str("provider");
    ev.duration_s = duration();
    if (!ev.duration_s) v.fail("fail_site needs duration_s");
    if (const auto *j = v.find("jitter_s")) ev.jitter_s = j->as_int();
    if (ev.jitter_s < 0) v.fail("jitter_s must be non-negative");
  } else if (k == "revoke") {
    v.require_keys({"at", "kind", "user"});
    ev.kind = ScenarioEvent::Kind::kRevokeToken;
    ev.user = str("user");
  } else if (k == "job") {
    v.require_keys({"at", "kind", "cluster", "resources", "duration_s"});
    ev.kind = ScenarioEvent::Kind::kSubmitJob;
    ev.ref = str("cluster");
    const auto *r = v.find("resources");
    if (r == nullptr) v.fail("job needs resources");
    ev.resources = r->as_resources();
    if (!ev.resources.any_positive()) r->fail("job resources must not be empty");
    ev.duration_s = duration();
    if (!ev.duration_s) v.fail("job needs duration_s");
  } else if (k == "switch_role") {
    v.require_keys({"at", "kind", "provider", "node", "target"});
    ev.kind = ScenarioEvent::Kind::kSwitchRole;
    ev.provider = str("provider");
    ev.node = str("node");
    auto role = parse_node_role(str("target"));
    if (!role) v.fail("target must be batch or cloud");
    ev.target = *role;
  } else {
    kind->fail("unknown event kind '" + k + "'");
  }
  return ev;
}

}  // namespace

std::string_view to_string(ScenarioEvent::Kind k) {
  switch (k) {
    case ScenarioEvent::Kind::kSubmitTemplate: return "submit";
    case ScenarioEvent::Kind::kDeleteDeployment: return "delete";
    case ScenarioEvent::Kind::kFailSite: return "fail_site";
    case ScenarioEvent::Kind::kRevokeToken: return "revoke";
    case ScenarioEvent::Kind::kSubmitJob: return "job";
    case ScenarioEvent::Kind::kSwitchRole: return "switch_role";
  }
  return "?";
}

Scenario Scenario::load(const std::string &path, const KvConfig &base) {
  std::string dir = std::filesystem::path(path).parent_path().string();
  return parse(read_file(path), dir, base);
}

Scenario Scenario::parse(std::string_view source, const std::string &base_dir, const KvConfig &base) {
  text::Value root = text::parse(source);
  root.require_keys({"name", "seed", "horizon_s", "config_file", "ranker", "prefs", "scheduler", "quotas", "elastic",
                     "policy", "providers", "slas", "datasets", "users", "events"});
  Scenario s;
  s.config = base;
  if (const auto *v = root.find("name")) s.name = v->as_string();
  if (const auto *v = root.find("seed")) {
    std::int64_t seed = v->as_int();
    if (seed < 0) v->fail("seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  const auto *horizon = root.find("horizon_s");
  if (horizon == nullptr) scenario_error(0, "scenario needs horizon_s");
  s.horizon_s = horizon->as_int();
  if (s.horizon_s < 0) horizon->fail("horizon_s must be non-negative");

  if (const auto *v = root.find("config_file")) {
    KvConfig file = KvConfig::load(resolve(base_dir, v->as_string()));
    for (const auto &e : file.entries()) s.config.set(e.key, e.value);
    for (const auto &p : file.policy_lines()) s.config.add_policy(p);
  }
  if (const auto *v = root.find("ranker")) fold_flat_block(*v, s.config, {"w_sla", "w_avail", "w_lat", "w_data"});
  if (const auto *v = root.find("scheduler")) fold_flat_block(*v, s.config, {"half_life_s", "backfill"});
  if (const auto *v = root.find("elastic")) fold_flat_block(*v, s.config, {"t_idle_s", "boot_delay_s"});
  if (const auto *v = root.find("prefs")) {
    if (!v->is_map()) v->fail("prefs must be a map");
    v->reject_duplicate_keys();
    for (const auto &e : v->entries()) s.config.set("prefs." + e.key, render_list(e.value->as_string_list()));
  }
  if (const auto *v = root.find("quotas")) {
    if (!v->is_map()) v->fail("quotas must be a map");
    v->reject_duplicate_keys();
    for (const auto &e : v->entries()) {
      ResourceVector q = e.value->as_resources();
      s.config.set("quota." + e.key,
                   std::to_string(q.cpus) + "," + std::to_string(q.mem_mb) + "," + std::to_string(q.disk_gb));
    }
  }
  if (const auto *v = root.find("policy")) {
    std::string lines;
    for (const auto &line : v->as_string_list()) lines += line + "\n";
    KvConfig rules = KvConfig::parse(lines);
    if (!rules.entries().empty()) v->fail("policy entries must be 'permit <group> <provider>'");
    for (const auto &p : rules.policy_lines()) s.config.add_policy({p.permit, p.group, p.provider_id, v->line()});
  }

  if (const auto *v = root.find("providers")) {
    if (!v->is_map()) v->fail("providers must be a map");
    v->reject_duplicate_keys();
    for (const auto &e : v->entries()) s.providers.push_back(parse_provider(e.key, *e.value));
  }
  if (const auto *v = root.find("slas")) {
    if (!v->is_list()) v->fail("slas must be a list");
    for (const auto &item : v->items()) {
      item.require_keys({"provider", "group", "sla_rank", "guaranteed"});
      SLARecord sla;
      const auto *p = item.find("provider");
      const auto *g = item.find("group");
      const auto *r = item.find("sla_rank");
      if (!p || !g || !r) item.fail("sla needs provider, group, sla_rank");
      sla.provider_id = p->as_string();
      sla.group = g->as_string();
      sla.sla_rank = r->as_decimal();
      if (sla.sla_rank < 0) r->fail("sla_rank must be non-negative");
      if (const auto *q = item.find("guaranteed")) sla.guaranteed = q->as_resources();
      s.slas.push_back(sla);
    }
  }
  if (const auto *v = root.find("datasets")) {
    if (!v->is_list()) v->fail("datasets must be a list");
    for (const auto &item : v->items()) {
      item.require_keys({"dataset", "provider", "bytes_present", "bytes_total"});
      const auto *d = item.find("dataset");
      const auto *p = item.find("provider");
      const auto *bp = item.find("bytes_present");
      const auto *bt = item.find("bytes_total");
      if (!d || !p || !bp || !bt) item.fail("dataset needs dataset, provider, bytes_present, bytes_total");
      DataCatalogEntry entry{d->as_string(), p->as_string(), bp->as_int(), bt->as_int()};
      if (entry.bytes_total <= 0 || entry.bytes_present < 0 || entry.bytes_present > entry.bytes_total) {
        item.fail("need 0 <= bytes_present <= bytes_total and bytes_total > 0");
      }
      s.datasets.push_back(entry);
    }
  }
  if (const auto *v = root.find("users")) {
    if (!v->is_map()) v->fail("users must be a map");
    v->reject_duplicate_keys();
    for (const auto &e : v->entries()) {
      e.value->require_keys({"group", "weight"});
      UserSpec u;
      u.user = e.key;
      const auto *g = e.value->find("group");
      if (g == nullptr) e.value->fail("user '" + e.key + "' needs a group");
      u.group = g->as_string();
      if (const auto *w = e.value->find("weight")) u.weight = w->as_decimal();
      if (!(u.weight > 0)) e.value->fail("weight must be positive");
      s.config.set("weights." + u.user, text::render_decimal(u.weight));
      s.users.push_back(u);
    }
  }
  if (const auto *v = root.find("events")) {
    if (!v->is_list()) v->fail("events must be a list");
    for (const auto &item : v->items()) s.events.push_back(parse_event(item, base_dir));
  }
  s.config.check_known_keys();
  s.check();
  return s;
}

const UserSpec *Scenario::find_user(const std::string &user) const {
  for (const auto &u : users) {
    if (u.user == user) return &u;
  }
  return nullptr;
}

const ProviderSpec *Scenario::find_provider(const std::string &provider_id) const {
  for (const auto &p : providers) {
    if (p.provider_id == provider_id) return &p;
  }
  return nullptr;
}

void Scenario::check() const {
  std::set<std::string> provider_ids;
  for (const auto &p : providers) {
    if (!provider_ids.insert(p.provider_id).second) scenario_error(0, "duplicate provider '" + p.provider_id + "'");
  }
  for (const auto &sla : slas) {
    if (!provider_ids.count(sla.provider_id)) scenario_error(0, "sla names unknown provider '" + sla.provider_id + "'");
  }
  for (const auto &d : datasets) {
    if (!provider_ids.count(d.provider_id)) scenario_error(0, "dataset names unknown provider '" + d.provider_id + "'");
  }
  std::set<std::string> user_ids;
  for (const auto &u : users) {
    if (!user_ids.insert(u.user).second) scenario_error(0, "duplicate user '" + u.user + "'");
  }

  std::map<std::string, bool> names;  // name -> template has an ElasticCluster
  SimTime last = 0;
  for (const auto &ev : events) {
    if (ev.at < last) scenario_error(ev.line, "events must be sorted by time");
    last = ev.at;
    if (ev.at < 0) scenario_error(ev.line, "event time must be non-negative");
    auto need_user = [&](const std::string &u) {
      if (!user_ids.count(u)) scenario_error(ev.line, "unknown user '" + u + "'");
    };
    auto need_provider = [&] {
      if (!provider_ids.count(ev.provider)) scenario_error(ev.line, "unknown provider '" + ev.provider + "'");
    };
    switch (ev.kind) {
      case ScenarioEvent::Kind::kSubmitTemplate:
        need_user(ev.user);
        if (!ev.name.empty()) {
          if (names.count(ev.name)) scenario_error(ev.line, "duplicate deployment name '" + ev.name + "'");
          names[ev.name] = has_cluster(ev.template_text);
        }
        break;
      case ScenarioEvent::Kind::kDeleteDeployment:
        if (!ev.user.empty()) need_user(ev.user);
        if (!names.count(ev.ref)) scenario_error(ev.line, "delete refers to unknown deployment '" + ev.ref + "'");
        break;
      case ScenarioEvent::Kind::kSubmitJob:
        if (!names.count(ev.ref)) scenario_error(ev.line, "job refers to unknown deployment '" + ev.ref + "'");
        if (!names[ev.ref]) scenario_error(ev.line, "job target '" + ev.ref + "' has no ElasticCluster");
        break;
      case ScenarioEvent::Kind::kRevokeToken:
        need_user(ev.user);
        break;
      case ScenarioEvent::Kind::kFailSite:
        need_provider();
        break;
      case ScenarioEvent::Kind::kSwitchRole: {
        need_provider();
        const ProviderSpec *p = find_provider(ev.provider);
        bool found = false;
        for (const auto &n : p->nodes) found = found || n.node_id == ev.node;
        if (!found) scenario_error(ev.line, "unknown node '" + ev.node + "'");
        break;
      }
    }
  }
}

}  // namespace fedorch
