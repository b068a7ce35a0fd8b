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

#include "fedorch/template_model.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <queue>
#include <set>
#include <sstream>

#include "fedorch/structured_text.hpp"

namespace fedorch {

namespace {

constexpr std::string_view kKindNames[] = {"Compute", "Container", "Service", "Job", "ElasticCluster"};

// Keys a node of the given kind may carry; "kind" is always allowed.
bool allowed_property(NodeKind kind, std::string_view key) {
  if (key == "kind" || key == "depends_on") return true;
  switch (kind) {
    case NodeKind::kCompute:
      return key == "resources" || key == "preemptible" || key == "bid";
    case NodeKind::kElasticCluster:
      return key == "resources" || key == "preemptible" || key == "bid" || key == "min_workers" ||
             key == "max_workers";
    case NodeKind::kContainer:
    case NodeKind::kService:
      return key == "image";
    case NodeKind::kJob:
      return key == "image" || key == "input_datasets";
  }
  return false;
}

[[noreturn]] void missing(const std::string &node, std::string_view property) {
  throw Error(Errc::kMissingProperty, "node '" + node + "' is missing '" + std::string(property) + "'");
}

NodeSpec parse_node(const std::string &name, const text::Value &body) {
  if (!body.is_map()) body.fail("node '" + name + "' must be a map");
  body.reject_duplicate_keys();
  const text::Value *kind_v = body.find("kind");
  if (kind_v == nullptr) missing(name, "kind");
  auto kind = parse_node_kind(kind_v->as_string());
  if (!kind) throw Error(Errc::kUnknownKind, "node '" + name + "' has unknown kind '" + kind_v->as_string() + "'");

  for (const auto &e : body.entries()) {
    if (!allowed_property(*kind, e.key)) {
      e.value->fail("property '" + e.key + "' is not valid for kind " + std::string(to_string(*kind)));
    }
  }

  NodeSpec node;
  node.name = name;
  node.kind = *kind;
  auto require = [&](std::string_view key) -> const text::Value & {
    const text::Value *v = body.find(key);
    if (v == nullptr) missing(name, key);
    return *v;
  };

  switch (*kind) {
    case NodeKind::kCompute:
      node.resources = require("resources").as_resources();
      break;
    case NodeKind::kElasticCluster:
      node.resources = require("resources").as_resources();
      node.min_workers = require("min_workers").as_int();
      node.max_workers = require("max_workers").as_int();
      break;
    case NodeKind::kContainer:
    case NodeKind::kService:
    case NodeKind::kJob: {
      const text::Value &image = require("image");
      node.image = image.as_string();
      if (node.image.empty()) missing(name, "image");
      break;
    }
  }
  if (const auto *v = body.find("preemptible")) node.preemptible = v->as_bool();
  if (const auto *v = body.find("bid")) {
    double bid = v->as_decimal();
    if (!(bid >= 0)) v->fail("bid must be non-negative");
    node.bid = bid;
  }
  if (const auto *v = body.find("depends_on")) node.depends_on = v->as_string_list();
  if (const auto *v = body.find("input_datasets")) node.input_datasets = v->as_string_list();
  return node;
}

using Adjacency = std::map<std::string, std::vector<std::string>>;

// Edges that point at existing nodes only.
Adjacency resolved_edges(const DeploymentTemplate &tmpl) {
  Adjacency deps;
  for (const auto &[name, node] : tmpl.nodes) {
    auto &out = deps[name];
    for (const auto &d : node.depends_on) {
      if (tmpl.nodes.count(d)) out.push_back(d);
    }
  }
  return deps;
}

// Returns the members of one dependency cycle, or empty if acyclic.
std::vector<std::string> find_cycle(const Adjacency &deps) {
  enum class Mark { kNew, kActive, kDone };
  std::map<std::string, Mark> mark;
  std::vector<std::string> stack;
  std::vector<std::string> cycle;
  std::function<bool(const std::string &)> visit = [&](const std::string &n) {
    mark[n] = Mark::kActive;
    stack.push_back(n);
    for (const auto &d : deps.at(n)) {
      if (mark[d] == Mark::kActive) {
        auto it = std::find(stack.begin(), stack.end(), d);
        cycle.assign(it, stack.end());
        return true;
      }
      if (mark[d] == Mark::kNew && visit(d)) return true;
    }
    stack.pop_back();
    mark[n] = Mark::kDone;
    return false;
  };
  for (const auto &[n, _] : deps) {
    if (mark[n] == Mark::kNew && visit(n)) return cycle;
  }
  return {};
}

std::string join(const std::vector<std::string> &v, std::string_view sep) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

std::string render_list(const std::vector<std::string> &v) {
  std::string out = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += text::render_scalar(v[i]);
  }
  return out + "]";
}

}  // namespace

std::string_view to_string(NodeKind kind) { return kKindNames[static_cast<int>(kind)]; }

std::optional<NodeKind> parse_node_kind(std::string_view s) {
  for (size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == s) return static_cast<NodeKind>(i);
  }
  return std::nullopt;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kCycle: return "Cycle";
    case ViolationKind::kDanglingReference: return "DanglingReference";
    case ViolationKind::kDanglingOutput: return "DanglingOutput";
    case ViolationKind::kBidWithoutPreemptible: return "BidWithoutPreemptible";
    case ViolationKind::kMinGreaterThanMax: return "MinGreaterThanMax";
    case ViolationKind::kNegativeWorkers: return "NegativeWorkers";
    case ViolationKind::kUnparseable: return "Unparseable";
  }
  return "Unknown";
}

bool ValidationReport::has(ViolationKind kind) const {
  return std::any_of(violations.begin(), violations.end(), [&](const Violation &v) { return v.kind == kind; });
}

TemplateError::TemplateError(ValidationReport report)
    : Error(Errc::kTemplateError,
            report.violations.empty()
                ? std::string("template rejected")
                : "template rejected: " + std::string(to_string(report.violations.front().kind)) + " " +
                      report.violations.front().subject + " " + report.violations.front().detail),
      report_(std::move(report)) {}

DeploymentTemplate parse_template(std::string_view source) {
  text::Value root = text::parse(source);
  root.require_keys({"tosca_version", "nodes", "outputs"});

  DeploymentTemplate tmpl;
  const text::Value *version = root.find("tosca_version");
  if (version == nullptr) missing("<template>", "tosca_version");
  tmpl.version_tag = version->as_string();
  if (tmpl.version_tag != kTemplateVersion) {
    version->fail("unsupported tosca_version '" + tmpl.version_tag + "'");
  }

  const text::Value *nodes = root.find("nodes");
  if (nodes == nullptr) missing("<template>", "nodes");
  if (!nodes->is_map()) nodes->fail("'nodes' must be a map");
  for (const auto &e : nodes->entries()) {
    if (tmpl.nodes.count(e.key)) throw Error(Errc::kDuplicateNode, "duplicate node '" + e.key + "'");
    tmpl.nodes.emplace(e.key, parse_node(e.key, *e.value));
  }

  if (const text::Value *outputs = root.find("outputs")) {
    if (!outputs->is_map()) outputs->fail("'outputs' must be a map");
    outputs->reject_duplicate_keys();
    for (const auto &e : outputs->entries()) tmpl.outputs.emplace(e.key, e.value->as_string());
  }

  auto cycle = find_cycle(resolved_edges(tmpl));
  if (!cycle.empty()) throw Error(Errc::kCycleError, "dependency cycle: " + join(cycle, " -> "));
  return tmpl;
}

std::string serialize_template(const DeploymentTemplate &tmpl) {
  std::ostringstream out;
  out << "tosca_version: " << text::render_scalar(tmpl.version_tag) << "\n";
  if (tmpl.nodes.empty()) out << "nodes: {}\n";
  else out << "nodes:\n";
  for (const auto &[name, n] : tmpl.nodes) {
    out << "  " << name << ":\n";
    out << "    kind: " << to_string(n.kind) << "\n";
    if (n.kind == NodeKind::kCompute || n.kind == NodeKind::kElasticCluster) {
      out << "    resources: { cpus: " << n.resources.cpus << ", mem_mb: " << n.resources.mem_mb
          << ", disk_gb: " << n.resources.disk_gb << " }\n";
      if (n.preemptible) out << "    preemptible: true\n";
      if (n.bid) out << "    bid: " << text::render_decimal(*n.bid) << "\n";
    }
    if (n.kind == NodeKind::kElasticCluster) {
      out << "    min_workers: " << n.min_workers << "\n";
      out << "    max_workers: " << n.max_workers << "\n";
    }
    if (!n.image.empty()) out << "    image: " << text::render_scalar(n.image) << "\n";
    if (!n.depends_on.empty()) out << "    depends_on: " << render_list(n.depends_on) << "\n";
    if (!n.input_datasets.empty()) out << "    input_datasets: " << render_list(n.input_datasets) << "\n";
  }
  if (!tmpl.outputs.empty()) {
    out << "outputs:\n";
    for (const auto &[k, v] : tmpl.outputs) out << "  " << k << ": " << text::render_scalar(v) << "\n";
  }
  return out.str();
}

ValidationReport validate(const DeploymentTemplate &tmpl) {
  ValidationReport report;
  auto add = [&](ViolationKind k, std::string subject, std::string detail) {
    report.violations.push_back({k, std::move(subject), std::move(detail)});
  };
  for (const auto &[name, n] : tmpl.nodes) {
    for (const auto &d : n.depends_on) {
      if (!tmpl.nodes.count(d)) add(ViolationKind::kDanglingReference, name, "depends_on unknown node '" + d + "'");
    }
    if (n.bid && !n.preemptible) add(ViolationKind::kBidWithoutPreemptible, name, "bid set on a non-preemptible node");
    if (n.kind == NodeKind::kElasticCluster) {
      if (n.min_workers < 0 || n.max_workers < 0) {
        add(ViolationKind::kNegativeWorkers, name, "worker bounds must be non-negative");
      } else if (n.min_workers > n.max_workers) {
        add(ViolationKind::kMinGreaterThanMax, name,
            "min_workers " + std::to_string(n.min_workers) + " > max_workers " + std::to_string(n.max_workers));
      }
    }
  }
  for (const auto &[out, node] : tmpl.outputs) {
    if (!tmpl.nodes.count(node)) add(ViolationKind::kDanglingOutput, out, "references unknown node '" + node + "'");
  }
  auto cycle = find_cycle(resolved_edges(tmpl));
  if (!cycle.empty()) add(ViolationKind::kCycle, cycle.front(), join(cycle, " -> "));
  return report;
}

ResourceVector aggregate_demand(const DeploymentTemplate &tmpl) {
  ResourceVector total;
  for (const auto &[_, n] : tmpl.nodes) {
    if (n.kind == NodeKind::kCompute) total += n.resources;
    else if (n.kind == NodeKind::kElasticCluster && n.max_workers > 0) total += n.resources * n.max_workers;
  }
  return total;
}

std::vector<std::string> topological_order(const DeploymentTemplate &tmpl) {
  std::map<std::string, int> pending;
  std::map<std::string, std::vector<std::string>> dependents;
  for (const auto &[name, n] : tmpl.nodes) {
    pending[name];
    for (const auto &d : n.depends_on) {
      if (!tmpl.nodes.count(d)) {
        throw Error(Errc::kTemplateError, "node '" + name + "' depends on unknown node '" + d + "'");
      }
      ++pending[name];
      dependents[d].push_back(name);
    }
  }
  std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
  for (const auto &[name, count] : pending) {
    if (count == 0) ready.push(name);
  }
  std::vector<std::string> order;
  while (!ready.empty()) {
    std::string n = ready.top();
    ready.pop();
    order.push_back(n);
    for (const auto &m : dependents[n]) {
      if (--pending[m] == 0) ready.push(m);
    }
  }
  if (order.size() != tmpl.nodes.size()) throw Error(Errc::kCycleError, "dependency cycle in template");
  return order;
}

std::vector<std::string> required_datasets(const DeploymentTemplate &tmpl) {
  std::set<std::string> ids;
  for (const auto &[_, n] : tmpl.nodes) {
    if (n.kind == NodeKind::kJob) ids.insert(n.input_datasets.begin(), n.input_datasets.end());
  }
  return {ids.begin(), ids.end()};
}

DeploymentTemplate load_template(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kNotFound, "cannot open template '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_template(buf.str());
}

}  // namespace fedorch
