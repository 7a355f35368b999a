#include "ateaudit/toml_lite.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ateaudit {
namespace {

[[noreturn]] void bad(long line, const std::string& what) {
  fail(Err::BadConfig, "line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Cuts a trailing # comment, honoring quotes.
std::string strip_comment(const std::string& s) {
  char quote = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quote) {
      if (c == '\\' && quote == '"')
        ++i;  // escaped char inside a basic string
      else if (c == quote)
        quote = 0;
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return s.substr(0, i);
    }
  }
  return s;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

std::string parse_basic_string(const std::string& s, std::size_t& i, long line) {
  std::string out;
  ++i;  // opening quote
  while (i < s.size() && s[i] != '"') {
    char c = s[i++];
    if (c == '\\') {
      if (i >= s.size()) bad(line, "dangling escape in string");
      switch (s[i++]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: bad(line, "unsupported escape in string");
      }
    } else {
      out += c;
    }
  }
  if (i >= s.size()) bad(line, "unterminated string");
  ++i;  // closing quote
  return out;
}

TomlValue parse_scalar(const std::string& tok, long line) {
  TomlValue v;
  if (tok == "true" || tok == "false") {
    v.kind = TomlValue::Kind::Bool;
    v.boolean = tok == "true";
    return v;
  }
  // TOML permits underscores between digits.
  std::string digits;
  digits.reserve(tok.size());
  for (std::size_t i = 0; i < tok.size(); ++i) {
    if (tok[i] == '_') {
      const bool mid = i > 0 && i + 1 < tok.size() &&
                       std::isdigit(static_cast<unsigned char>(tok[i - 1])) &&
                       std::isdigit(static_cast<unsigned char>(tok[i + 1]));
      if (!mid) bad(line, "misplaced underscore in number: " + tok);
      continue;
    }
    digits += tok[i];
  }
  char* end = nullptr;
  const double x = std::strtod(digits.c_str(), &end);
  if (end != digits.c_str() + digits.size() || digits.empty())
    bad(line, "unrecognized value: " + tok);
  if (!std::isfinite(x)) bad(line, "non-finite number: " + tok);
  v.kind = TomlValue::Kind::Number;
  v.num = x;
  return v;
}

TomlValue parse_value(const std::string& s, std::size_t& i, long line);

TomlValue parse_array(const std::string& s, std::size_t& i, long line) {
  TomlValue v;
  v.kind = TomlValue::Kind::Array;
  ++i;  // '['
  bool expect_value = true;
  while (true) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= s.size()) bad(line, "unterminated array");
    if (s[i] == ']') {
      ++i;
      return v;
    }
    if (!expect_value) {
      if (s[i] != ',') bad(line, "expected ',' or ']' in array");
      ++i;
      expect_value = true;
      continue;
    }
    TomlValue item = parse_value(s, i, line);
    if (item.kind == TomlValue::Kind::Array) bad(line, "nested arrays are not supported");
    v.items.push_back(std::move(item));
    expect_value = false;
  }
}

TomlValue parse_value(const std::string& s, std::size_t& i, long line) {
  if (s[i] == '"') {
    TomlValue v;
    v.kind = TomlValue::Kind::String;
    v.str = parse_basic_string(s, i, line);
    return v;
  }
  if (s[i] == '\'') {  // literal string, no escapes
    const std::size_t close = s.find('\'', i + 1);
    if (close == std::string::npos) bad(line, "unterminated string");
    TomlValue v;
    v.kind = TomlValue::Kind::String;
    v.str = s.substr(i + 1, close - i - 1);
    i = close + 1;
    return v;
  }
  if (s[i] == '[') return parse_array(s, i, line);
  const std::size_t end = s.find_first_of(" \t,]", i);
  const std::string tok = s.substr(i, end == std::string::npos ? std::string::npos : end - i);
  i += tok.size();
  return parse_scalar(tok, line);
}

}  // namespace

const std::string& TomlValue::as_string() const {
  if (kind != Kind::String) fail(Err::BadConfig, "expected a string value");
  return str;
}

double TomlValue::as_number() const {
  if (kind != Kind::Number) fail(Err::BadConfig, "expected a numeric value");
  return num;
}

long long TomlValue::as_int() const {
  const double x = as_number();
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 || std::abs(x) > 9e15)
    fail(Err::BadConfig, "expected an integer value");
  return static_cast<long long>(r);
}

bool TomlValue::as_bool() const {
  if (kind != Kind::Bool) fail(Err::BadConfig, "expected a boolean value");
  return boolean;
}

const std::vector<TomlValue>& TomlValue::as_array() const {
  if (kind != Kind::Array) fail(Err::BadConfig, "expected an array value");
  return items;
}

const TomlValue* TomlTable::find(const std::string& key) const {
  auto it = values.find(key);
  return it == values.end() ? nullptr : &it->second;
}

const TomlValue& TomlTable::at(const std::string& key) const {
  const TomlValue* v = find(key);
  if (!v) fail(Err::BadConfig, "missing config key: " + key);
  return *v;
}

std::string TomlTable::get_string(const std::string& key, const std::string& fallback) const {
  const TomlValue* v = find(key);
  return v ? v->as_string() : fallback;
}

double TomlTable::get_number(const std::string& key, double fallback) const {
  const TomlValue* v = find(key);
  return v ? v->as_number() : fallback;
}

long long TomlTable::get_int(const std::string& key, long long fallback) const {
  const TomlValue* v = find(key);
  return v ? v->as_int() : fallback;
}

bool TomlTable::get_bool(const std::string& key, bool fallback) const {
  const TomlValue* v = find(key);
  return v ? v->as_bool() : fallback;
}

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  long line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad(line_no, "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!valid_key(section)) bad(line_no, "malformed section name");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) bad(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!valid_key(key)) bad(line_no, "malformed key: '" + key + "'");
    const std::string rhs = trim(line.substr(eq + 1));
    if (rhs.empty()) bad(line_no, "missing value for key: " + key);
    std::size_t i = 0;
    TomlValue v = parse_value(rhs, i, line_no);
    while (i < rhs.size() && (rhs[i] == ' ' || rhs[i] == '\t')) ++i;
    if (i != rhs.size()) bad(line_no, "trailing characters after value");
    const std::string full = section.empty() ? key : section + "." + key;
    if (!table.values.emplace(full, std::move(v)).second)
      bad(line_no, "duplicate key: " + full);
  }
  return table;
}

TomlTable load_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str());
}

}  // namespace ateaudit
