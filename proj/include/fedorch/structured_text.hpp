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

// Indentation-based structured text shared by templates, scenarios and
// ranking snapshots: `key: value` maps nested by two spaces, `- item` block
// lists, inline `{ k: v }` / `[a, b]` collections and `#` comments.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fedorch/resource_vector.hpp"

namespace fedorch::text {

class Value;

struct Entry {
  std::string key;
  int line = 0;
  std::shared_ptr<Value> value;
};

class Value {
 public:
  enum class Type { kScalar, kMap, kList };

  static Value scalar(std::string s, int line, bool quoted = false);
  static Value map(int line);
  static Value list(int line);

  Type type() const { return type_; }
  int line() const { return line_; }
  bool is_scalar() const { return type_ == Type::kScalar; }
  bool is_map() const { return type_ == Type::kMap; }
  bool is_list() const { return type_ == Type::kList; }

  const std::string &raw() const { return scalar_; }
  bool quoted() const { return quoted_; }
  const std::vector<Entry> &entries() const { return entries_; }
  const std::vector<Value> &items() const { return items_; }

  void add_entry(std::string key, int line, Value v);
  void add_item(Value v) { items_.push_back(std::move(v)); }

  /// First entry with this key, or nullptr.
  const Value *find(std::string_view key) const;

  // Typed accessors; each raises kSyntaxError citing this value's line.
  const std::string &as_string() const;
  std::int64_t as_int() const;
  double as_decimal() const;
  bool as_bool() const;
  std::vector<std::string> as_string_list() const;
  ResourceVector as_resources() const;

  /// Rejects repeated keys and any key outside `allowed` with kSyntaxError.
  void require_keys(std::initializer_list<std::string_view> allowed) const;
  void reject_duplicate_keys() const;

  [[noreturn]] void fail(const std::string &what) const;

 private:
  Type type_ = Type::kScalar;
  int line_ = 0;
  bool quoted_ = false;
  std::string scalar_;
  std::vector<Entry> entries_;
  std::vector<Value> items_;
};

/// Parses a whole document. The root is always a map.
Value parse(std::string_view text);

/// Renders a scalar so that parse() reads it back verbatim (quotes when needed).
std::string render_scalar(std::string_view s);

/// Shortest decimal text that parses back to exactly `v`.
std::string render_decimal(double v);

}  // namespace fedorch::text
