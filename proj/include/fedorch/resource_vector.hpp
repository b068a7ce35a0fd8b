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
#include <ostream>
#include <string>

#include "fedorch/errors.hpp"

namespace fedorch {

/// Simulation time in integer seconds.
using SimTime = std::int64_t;

/// Demand or capacity as (cpus, memory MB, disk GB). All components are
/// non-negative integers; subtraction below zero raises kResourceUnderflow.
struct ResourceVector {
  std::int64_t cpus = 0;
  std::int64_t mem_mb = 0;
  std::int64_t disk_gb = 0;

  constexpr ResourceVector() = default;
  constexpr ResourceVector(std::int64_t c, std::int64_t m, std::int64_t d)
      : cpus(c), mem_mb(m), disk_gb(d) {}

  bool is_zero() const { return cpus == 0 && mem_mb == 0 && disk_gb == 0; }
  bool any_positive() const { return cpus > 0 || mem_mb > 0 || disk_gb > 0; }

  ResourceVector &operator+=(const ResourceVector &o) {
    cpus += o.cpus;
    mem_mb += o.mem_mb;
    disk_gb += o.disk_gb;
    return *this;
  }

  ResourceVector &operator-=(const ResourceVector &o) {
    if (o.cpus > cpus || o.mem_mb > mem_mb || o.disk_gb > disk_gb) {
      throw Error(Errc::kResourceUnderflow,
                  "cannot subtract " + o.str() + " from " + str());
    }
    cpus -= o.cpus;
    mem_mb -= o.mem_mb;
    disk_gb -= o.disk_gb;
    return *this;
  }

  std::string str() const {
    return "(" + std::to_string(cpus) + "," + std::to_string(mem_mb) + "," +
           std::to_string(disk_gb) + ")";
  }

  friend ResourceVector operator+(ResourceVector a, const ResourceVector &b) { return a += b; }
  friend ResourceVector operator-(ResourceVector a, const ResourceVector &b) { return a -= b; }
  friend ResourceVector operator*(ResourceVector a, std::int64_t k) {
    return {a.cpus * k, a.mem_mb * k, a.disk_gb * k};
  }
  friend bool operator==(const ResourceVector &, const ResourceVector &) = default;
  friend std::ostream &operator<<(std::ostream &os, const ResourceVector &r) { return os << r.str(); }
};

/// True iff every component of `demand` is <= the matching one of `capacity`.
constexpr bool fits(const ResourceVector &demand, const ResourceVector &capacity) {
  return demand.cpus <= capacity.cpus && demand.mem_mb <= capacity.mem_mb &&
         demand.disk_gb <= capacity.disk_gb;
}

}  // namespace fedorch
