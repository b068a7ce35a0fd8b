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

#include <ostream>
#include <string_view>
#include <vector>

#include "fedorch/provider_ranker.hpp"

namespace fedorch {

/// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Reads a ranking snapshot file:
///
///   providers:
///     site-a:
///       sla_rank: 3
///       availability: 0.99
///       latency_ms: 20
///       data_locality: 1
///       free: { cpus: 8, mem_mb: 16384, disk_gb: 200 }
///
/// availability and data_locality default to 1, latency_ms and sla_rank to 0.
std::vector<ProviderSnapshot> parse_snapshot_file(std::string_view text);

/// Entry point of `orch`. Environment: ORCH_CONFIG (base key/value config),
/// ORCH_USER (default --user), ORCH_STATE (deployment journal path).
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace fedorch
