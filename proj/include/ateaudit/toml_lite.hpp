#pragma once

#include <map>
#include <string>
#include <vector>

#include "ateaudit/errors.hpp"

namespace ateaudit {

// Minimal TOML subset, enough for flat run configs:
//   [section] headers, bare keys, `key = value` with string / number / bool /
//   single-line scalar arrays, and # comments. Nested tables, dates, inline
//   tables and multi-line values are out of scope; anything unrecognized is a
//   BadConfig error with the offending line number.
struct TomlValue {
  enum class Kind { String, Number, Bool, Array };
  Kind kind = Kind::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<TomlValue> items;

  const std::string& as_string() const;
  double as_number() const;
  long long as_int() const;  // number with an integral value
  bool as_bool() const;
  const std::vector<TomlValue>& as_array() const;
};

// Keys are flattened to "section.key"; keys before any [section] keep their
// bare name. Duplicate keys are rejected.
struct TomlTable {
  std::map<std::string, TomlValue> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  const TomlValue* find(const std::string& key) const;
  const TomlValue& at(const std::string& key) const;  // BadConfig when absent

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_number(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

TomlTable parse_toml(const std::string& text);
TomlTable load_toml_file(const std::string& path);

}  // namespace ateaudit
