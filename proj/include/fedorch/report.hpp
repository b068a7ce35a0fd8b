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

// Run reports: a totally ordered event log plus metrics, serialised as one
// JSON object per line with a fixed field order.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fedorch/resource_vector.hpp"

namespace fedorch {

using Json = nlohmann::ordered_json;

struct LogRecord {
  SimTime t = 0;
  std::uint64_t seq = 0;
  std::string kind;
  Json fields = Json::object();
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  SimTime horizon_s = 0;
  std::vector<LogRecord> event_log;
  Json final_state = Json::object();
  Json metrics = Json::object();

  /// Event log only, one record per line.
  std::string serialize_log() const;
  /// Event log, then a `final_state` line, then a `metrics` line.
  std::string serialize() const;
  static RunReport parse(std::string_view jsonl);
};

std::string to_line(const LogRecord &r);

/// Recomputes the metrics object from an event log alone. A report is
/// consistent iff derive_metrics(report.event_log, horizon) == report.metrics.
Json derive_metrics(const std::vector<LogRecord> &log, SimTime horizon_s);

/// Empty string if the report re-derives exactly; otherwise a diagnostic.
std::string verify_report(const RunReport &report);

}  // namespace fedorch
