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

#include "fedorch/kv_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace fedorch {

namespace {

[[noreturn]] void config_error(int line, const std::string &what) {
  throw Error(Errc::kConfigError, "line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> words(const std::string &s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

bool has_prefix(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

KvConfig KvConfig::parse(std::string_view text) {
  KvConfig cfg;
  std::istringstream in{std::string(text)};
  int number = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++number;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      auto w = words(line);
      if (w.size() == 3 && (w[0] == "permit" || w[0] == "deny")) {
        cfg.policy_.push_back({w[0] == "permit", w[1], w[2], number});
        continue;
      }
      config_error(number, "expected 'key = value' or 'permit <group> <provider>'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) config_error(number, "empty key");
    if (value.empty()) config_error(number, "empty value for '" + key + "'");
    if (cfg.find(key) != nullptr) config_error(number, "duplicate key '" + key + "'");
    cfg.entries_.push_back({key, value, number});
  }
  return cfg;
}

KvConfig KvConfig::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kConfigError, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

const KvEntry *KvConfig::find(std::string_view key) const {
  for (const auto &e : entries_) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

std::vector<KvEntry> KvConfig::with_prefix(std::string_view prefix) const {
  std::vector<KvEntry> out;
  for (const auto &e : entries_) {
    if (has_prefix(e.key, prefix) && e.key.size() > prefix.size()) out.push_back(e);
  }
  return out;
}

void KvConfig::set(std::string key, std::string value) {
  for (auto &e : entries_) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  entries_.push_back({std::move(key), std::move(value), 0});
}

void KvConfig::check_known_keys() const {
  static constexpr std::string_view kExact[] = {
      "w_sla", "w_avail", "w_lat", "w_data", "half_life_s", "backfill",
      "t_idle_s", "boot_delay_s", "min_nodes", "max_nodes", "world"};
  static constexpr std::string_view kPrefixes[] = {"prefs.", "weights.", "quota."};
  for (const auto &e : entries_) {
    bool known = std::find(std::begin(kExact), std::end(kExact), e.key) != std::end(kExact);
    for (auto p : kPrefixes) known = known || (has_prefix(e.key, p) && e.key.size() > p.size());
    if (!known) config_error(e.line, "unknown key '" + e.key + "'");
  }
}

double KvConfig::decimal(const KvEntry &e) {
  double out = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), out);
  if (ec != std::errc() || p != e.value.data() + e.value.size()) {
    config_error(e.line, "'" + e.key + "' expects a decimal, got '" + e.value + "'");
  }
  return out;
}

std::int64_t KvConfig::integer(const KvEntry &e) {
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), out);
  if (ec != std::errc() || p != e.value.data() + e.value.size()) {
    config_error(e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
  }
  return out;
}

bool KvConfig::boolean(const KvEntry &e) {
  if (e.value == "true") return true;
  if (e.value == "false") return false;
  config_error(e.line, "'" + e.key + "' expects true or false");
}

std::vector<std::string> KvConfig::list(const KvEntry &e) {
  if (e.value.size() < 2 || e.value.front() != '[' || e.value.back() != ']') {
    config_error(e.line, "'" + e.key + "' expects [a, b, ...]");
  }
  std::vector<std::string> out;
  std::string body = e.value.substr(1, e.value.size() - 2);
  if (trim(body).empty()) return out;
  std::istringstream in(body);
  for (std::string item; std::getline(in, item, ',');) {
    std::string t = trim(item);
    if (t.empty()) config_error(e.line, "empty list element in '" + e.key + "'");
    out.push_back(t);
  }
  return out;
}

ResourceVector KvConfig::triple(const KvEntry &e) {
  std::istringstream in(e.value);
  std::vector<std::int64_t> parts;
  for (std::string item; std::getline(in, item, ',');) {
    KvEntry part{e.key, trim(item), e.line};
    parts.push_back(integer(part));
  }
  if (parts.size() != 3) config_error(e.line, "'" + e.key + "' expects cpus,mem_mb,disk_gb");
  for (auto p : parts) {
    if (p < 0) config_error(e.line, "'" + e.key + "' components must be non-negative");
  }
  return {parts[0], parts[1], parts[2]};
}

}  // namespace fedorch
