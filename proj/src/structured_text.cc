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

#include "fedorch/structured_text.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>

namespace fedorch::text {

namespace {

struct Line {
  int number;
  int indent;
  std::string content;
};

[[noreturn]] void syntax(int line, const std::string &what) {
  throw Error(Errc::kSyntaxError, "line " + std::to_string(line) + ": " + what);
}

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Drops a trailing comment; '#' starts one only at line start or after blank.
std::string strip_comment(const std::string &s) {
  bool in_quote = false;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_quote) {
      if (c == '\\') ++i;
      else if (c == '"') in_quote = false;
    } else if (c == '"') {
      in_quote = true;
    } else if (c == '#' && (i == 0 || s[i - 1] == ' ')) {
      return s.substr(0, i);
    }
  }
  return s;
}

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> out;
  int number = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string raw(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    ++number;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string body = strip_comment(raw);
    int indent = 0;
    while (indent < static_cast<int>(body.size()) && body[indent] == ' ') ++indent;
    std::string content = trim(body);
    if (!content.empty()) {
      if (body[indent] == '\t') syntax(number, "tab in indentation");
      if (indent % 2 != 0) syntax(number, "indentation must be a multiple of two spaces");
      out.push_back({number, indent, content});
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return out;
}

class FlowParser {
 public:
  FlowParser(std::string_view s, int line) : s_(s), line_(line) {}

  Value parse_top() {
    skip_ws();
    Value v = (peek() == '{' || peek() == '[' || peek() == '"') ? parse_value(false) : block_scalar();
    skip_ws();
    if (pos_ != s_.size()) syntax(line_, "unexpected trailing text '" + std::string(s_.substr(pos_)) + "'");
    return v;
  }

 private:
  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && s_[pos_] == ' ') ++pos_;
  }

  Value block_scalar() {
    std::string v = trim(s_.substr(pos_));
    pos_ = s_.size();
    return Value::scalar(v, line_);
  }

  Value parse_value(bool in_flow) {
    skip_ws();
    char c = peek();
    if (c == '{') return parse_map();
    if (c == '[') return parse_list();
    if (c == '"') return parse_quoted();
    if (!in_flow) return block_scalar();
    size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '}') ++pos_;
    std::string v = trim(s_.substr(start, pos_ - start));
    if (v.empty()) syntax(line_, "empty value");
    return Value::scalar(v, line_);
  }

  Value parse_quoted() {
    ++pos_;
    std::string out;
    while (true) {
      if (pos_ >= s_.size()) syntax(line_, "unterminated string");
      char c = s_[pos_++];
      if (c == '"') break;
      if (c == '\\') {
        if (pos_ >= s_.size()) syntax(line_, "dangling escape");
        char e = s_[pos_++];
        if (e == 'n') out.push_back('\n');
        else if (e == '"' || e == '\\') out.push_back(e);
        else syntax(line_, std::string("unknown escape \\") + e);
      } else {
        out.push_back(c);
      }
    }
    return Value::scalar(out, line_, true);
  }

  Value parse_map() {
    ++pos_;
    Value m = Value::map(line_);
    skip_ws();
    if (peek() == '}') {
      ++pos_;
      return m;
    }
    while (true) {
      skip_ws();
      size_t start = pos_;
      while (pos_ < s_.size() && is_key_char(s_[pos_])) ++pos_;
      std::string key(s_.substr(start, pos_ - start));
      if (key.empty()) syntax(line_, "expected key in inline map");
      skip_ws();
      if (peek() != ':') syntax(line_, "expected ':' after key '" + key + "'");
      ++pos_;
      m.add_entry(key, line_, parse_value(true));
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == '}') {
        ++pos_;
        return m;
      }
      syntax(line_, "expected ',' or '}' in inline map");
    }
  }

  Value parse_list() {
    ++pos_;
    Value l = Value::list(line_);
    skip_ws();
    if (peek() == ']') {
      ++pos_;
      return l;
    }
    while (true) {
      l.add_item(parse_value(true));
      skip_ws();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      if (peek() == ']') {
        ++pos_;
        return l;
      }
      syntax(line_, "expected ',' or ']' in inline list");
    }
  }

  std::string_view s_;
  int line_;
  size_t pos_ = 0;
};

class BlockParser {
 public:
  explicit BlockParser(std::vector<Line> lines) : lines_(std::move(lines)) {}

  Value parse_root() {
    if (lines_.empty()) return Value::map(1);
    if (lines_[0].indent != 0) syntax(lines_[0].number, "document must start at column 0");
    Value root = parse_block(0);
    if (!root.is_map()) syntax(lines_[0].number, "document root must be a map");
    if (pos_ != lines_.size()) syntax(lines_[pos_].number, "unexpected indentation");
    return root;
  }

 private:
  static bool is_item(const std::string &c) { return c == "-" || c.rfind("- ", 0) == 0; }

  Value parse_block(int indent) {
    const Line &first = lines_[pos_];
    bool list = is_item(first.content);
    Value block = list ? Value::list(first.number) : Value::map(first.number);
    while (pos_ < lines_.size()) {
      const Line &ln = lines_[pos_];
      if (ln.indent < indent) break;
      if (ln.indent > indent) syntax(ln.number, "unexpected indentation");
      if (is_item(ln.content) != list) syntax(ln.number, "cannot mix list items and keys in one block");
      ++pos_;
      if (list) {
        std::string rest = trim(std::string_view(ln.content).substr(1));
        if (rest.empty()) syntax(ln.number, "empty list item");
        block.add_item(FlowParser(rest, ln.number).parse_top());
        continue;
      }
      size_t k = 0;
      while (k < ln.content.size() && is_key_char(ln.content[k])) ++k;
      if (k == 0 || k >= ln.content.size() || ln.content[k] != ':') {
        syntax(ln.number, "expected 'key: value'");
      }
      std::string key = ln.content.substr(0, k);
      std::string rest = trim(std::string_view(ln.content).substr(k + 1));
      if (!rest.empty()) {
        block.add_entry(key, ln.number, FlowParser(rest, ln.number).parse_top());
      } else if (pos_ < lines_.size() && lines_[pos_].indent > indent) {
        if (lines_[pos_].indent != indent + 2) syntax(lines_[pos_].number, "nested block must be indented by two spaces");
        block.add_entry(key, ln.number, parse_block(indent + 2));
      } else {
        syntax(ln.number, "missing value for '" + key + "'");
      }
    }
    return block;
  }

  std::vector<Line> lines_;
  size_t pos_ = 0;
};

}  // namespace

Value Value::scalar(std::string s, int line, bool quoted) {
  Value v;
  v.type_ = Type::kScalar;
  v.scalar_ = std::move(s);
  v.line_ = line;
  v.quoted_ = quoted;
  return v;
}

Value Value::map(int line) {
  Value v;
  v.type_ = Type::kMap;
  v.line_ = line;
  return v;
}

Value Value::list(int line) {
  Value v;
  v.type_ = Type::kList;
  v.line_ = line;
  return v;
}

void Value::add_entry(std::string key, int line, Value v) {
  entries_.push_back({std::move(key), line, std::make_shared<Value>(std::move(v))});
}

const Value *Value::find(std::string_view key) const {
  for (const auto &e : entries_) {
    if (e.key == key) return e.value.get();
  }
  return nullptr;
}

void Value::fail(const std::string &what) const { syntax(line_, what); }

const std::string &Value::as_string() const {
  if (!is_scalar()) fail("expected a scalar");
  return scalar_;
}

std::int64_t Value::as_int() const {
  const std::string &s = as_string();
  std::int64_t out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) fail("expected an integer, got '" + s + "'");
  return out;
}

double Value::as_decimal() const {
  const std::string &s = as_string();
  double out = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || p != s.data() + s.size()) fail("expected a decimal, got '" + s + "'");
  return out;
}

bool Value::as_bool() const {
  const std::string &s = as_string();
  if (s == "true") return true;
  if (s == "false") return false;
  fail("expected true or false, got '" + s + "'");
}

std::vector<std::string> Value::as_string_list() const {
  if (!is_list()) fail("expected a list");
  std::vector<std::string> out;
  for (const auto &item : items_) out.push_back(item.as_string());
  return out;
}

ResourceVector Value::as_resources() const {
  if (!is_map()) fail("expected { cpus, mem_mb, disk_gb }");
  require_keys({"cpus", "mem_mb", "disk_gb"});
  auto component = [&](std::string_view key) {
    const Value *v = find(key);
    if (v == nullptr) fail("resources missing '" + std::string(key) + "'");
    std::int64_t n = v->as_int();
    if (n < 0) v->fail("resource '" + std::string(key) + "' must be non-negative");
    return n;
  };
  return {component("cpus"), component("mem_mb"), component("disk_gb")};
}

void Value::reject_duplicate_keys() const {
  for (size_t i = 0; i < entries_.size(); ++i) {
    for (size_t j = 0; j < i; ++j) {
      if (entries_[i].key == entries_[j].key) syntax(entries_[i].line, "duplicate key '" + entries_[i].key + "'");
    }
  }
}

void Value::require_keys(std::initializer_list<std::string_view> allowed) const {
  if (!is_map()) fail("expected a map");
  reject_duplicate_keys();
  for (const auto &e : entries_) {
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end()) {
      syntax(e.line, "unknown key '" + e.key + "'");
    }
  }
}

Value parse(std::string_view text) { return BlockParser(split_lines(text)).parse_root(); }

std::string render_scalar(std::string_view s) {
  bool bare = !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == '/' || c == '+' || c == '@';
  });
  if (bare) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string render_decimal(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, p);
}

}  // namespace fedorch::text
