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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedorch/errors.hpp"
#include "fedorch/resource_vector.hpp"

namespace fedorch {

inline constexpr std::string_view kTemplateVersion = "indigo_subset_1";

enum class NodeKind { kCompute, kContainer, kService, kJob, kElasticCluster };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view s);

struct NodeSpec {
  std::string name;
  NodeKind kind = NodeKind::kCompute;
  // Compute: the VM. ElasticCluster: one worker.
  ResourceVector resources;
  std::string image;
  bool preemptible = false;
  std::optional<double> bid;
  std::vector<std::string> depends_on;
  std::int64_t min_workers = 0;
  std::int64_t max_workers = 0;
  std::vector<std::string> input_datasets;

  friend bool operator==(const NodeSpec &, const NodeSpec &) = default;
};

struct DeploymentTemplate {
  std::string version_tag{kTemplateVersion};
  std::map<std::string, NodeSpec> nodes;
  // output name -> node name
  std::map<std::string, std::string> outputs;

  friend bool operator==(const DeploymentTemplate &, const DeploymentTemplate &) = default;
};

enum class ViolationKind {
  kCycle,
  kDanglingReference,
  kDanglingOutput,
  kBidWithoutPreemptible,
  kMinGreaterThanMax,
  kNegativeWorkers,
  kUnparseable,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string subject;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const;
};

/// Raised when a template cannot be deployed; carries the full report.
class TemplateError : public Error {
 public:
  explicit TemplateError(ValidationReport report);
  const ValidationReport &report() const { return report_; }

 private:
  ValidationReport report_;
};

/// Parses template text. Structural problems raise kSyntaxError (with line),
/// kUnknownKind, kMissingProperty, kDuplicateNode or kCycleError. Semantic
/// problems that leave the topology well-formed (dangling references, bid
/// without preemptible, worker bounds) are left for validate().
DeploymentTemplate parse_template(std::string_view text);

/// Canonical text form; parse_template(serialize_template(t)) == t.
std::string serialize_template(const DeploymentTemplate &tmpl);

ValidationReport validate(const DeploymentTemplate &tmpl);

/// Sum over Compute nodes plus max_workers x worker for each ElasticCluster.
ResourceVector aggregate_demand(const DeploymentTemplate &tmpl);

/// Dependencies first; ties broken by node name. Raises kCycleError.
std::vector<std::string> topological_order(const DeploymentTemplate &tmpl);

/// Sorted, de-duplicated input datasets of every Job node.
std::vector<std::string> required_datasets(const DeploymentTemplate &tmpl);

/// Reads and parses a template file.
DeploymentTemplate load_template(const std::string &path);

}  // namespace fedorch
