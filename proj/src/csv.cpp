#include "ateaudit/csv.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ateaudit {

std::optional<double> parse_double(const std::string& token) {
  if (token.empty()) return std::nullopt;
  const char* s = token.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end != s + token.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

namespace {

// One record; handles quotes and embedded newlines. Returns false on EOF
// before any character of a new record.
bool read_record(std::istream& in, std::vector<std::string>& fields, Index record_no) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  std::string field;
  bool quoted = false;
  bool any = false;
  auto push = [&] {
    fields.push_back(field);
    field.clear();
  };
  while (true) {
    if (c == EOF) {
      push();
      if (quoted) fail(Err::RaggedRow, "unterminated quote in record " + std::to_string(record_no));
      return true;
    }
    if (quoted) {
      if (c == '"') {
        int nxt = in.get();
        if (nxt == '"') {
          field += '"';
        } else {
          quoted = false;
          c = nxt;
          continue;
        }
      } else {
        field += static_cast<char>(c);
      }
    } else if (c == '"' && field.empty() && !any) {
      quoted = true;
      any = true;
    } else if (c == ',') {
      push();
      any = false;
    } else if (c == '\r') {
      int nxt = in.get();
      if (nxt == '\n' || nxt == EOF) {
        push();
        return true;
      }
      field += '\r';
      c = nxt;
      continue;
    } else if (c == '\n') {
      push();
      return true;
    } else {
      field += static_cast<char>(c);
      any = true;
    }
    c = in.get();
  }
}

}  // namespace

Dataset load_csv(std::istream& in, const SchemaHint& hint) {
  std::vector<std::string> header;
  if (!read_record(in, header, 0)) fail(Err::IoError, "empty input: no header row");
  const Index ncols = header.size();
  for (const auto& [name, kind] : hint) {
    (void)kind;
    bool found = false;
    for (const auto& h : header) found = found || h == name;
    if (!found) fail(Err::MissingColumn, "hinted column '" + name + "' not in header");
  }

  std::vector<std::vector<std::string>> raw(ncols);
  std::vector<std::string> rec;
  Index row = 0;
  while (read_record(in, rec, row + 1)) {
    ++row;
    if (rec.size() != ncols)
      fail(Err::RaggedRow, "row " + std::to_string(row) + " has " + std::to_string(rec.size()) +
                               " fields, expected " + std::to_string(ncols));
    for (Index a = 0; a < ncols; ++a) {
      if (rec[a].empty())
        fail(Err::UnparseableValue,
             "empty cell at row " + std::to_string(row) + ", column '" + header[a] + "'");
      raw[a].push_back(std::move(rec[a]));
    }
  }

  Schema schema;
  std::vector<Column> cols(ncols);
  for (Index a = 0; a < ncols; ++a) {
    AttrKind kind;
    auto hinted = hint.find(header[a]);
    if (hinted != hint.end()) {
      kind = hinted->second;
    } else {
      bool all_num = true, all_binary = true;
      for (const auto& tok : raw[a]) {
        auto v = parse_double(tok);
        if (!v) {
          all_num = false;
          all_binary = false;
          break;
        }
        if (*v != 0.0 && *v != 1.0) all_binary = false;
      }
      kind = all_binary ? AttrKind::NumericBinary
                        : (all_num ? AttrKind::NumericContinuous : AttrKind::Categorical);
    }
    Column& c = cols[a];
    c.kind = kind;
    if (kind == AttrKind::Categorical) {
      c.codes.reserve(raw[a].size());
      for (const auto& tok : raw[a]) c.codes.push_back(c.intern(tok));
    } else {
      c.num.resize(static_cast<Eigen::Index>(raw[a].size()));
      for (Index i = 0; i < raw[a].size(); ++i) {
        auto v = parse_double(raw[a][i]);
        if (!v)
          fail(Err::UnparseableValue, "row " + std::to_string(i + 1) + ", column '" + header[a] +
                                          "': '" + raw[a][i] + "' is not numeric");
        if (kind == AttrKind::NumericBinary && *v != 0.0 && *v != 1.0)
          fail(Err::UnparseableValue, "row " + std::to_string(i + 1) + ", column '" + header[a] +
                                          "': '" + raw[a][i] + "' is not 0/1");
        c.num[static_cast<Eigen::Index>(i)] = *v;
      }
    }
    schema.attrs.push_back({header[a], kind});
  }
  return Dataset(std::move(schema), std::move(cols));
}

Dataset load_csv_file(const std::string& path, const SchemaHint& hint) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Err::IoError, "cannot open '" + path + "'");
  return load_csv(f, hint);
}

namespace {

void write_field(std::ostream& out, const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) {
    out << s;
    return;
  }
  out << '"';
  for (char ch : s) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

}  // namespace

void write_csv(std::ostream& out, const Dataset& d) {
  const Schema& s = d.schema();
  for (Index a = 0; a < s.size(); ++a) {
    if (a) out << ',';
    write_field(out, s.attrs[a].name);
  }
  out << '\n';
  for (Index i = 0; i < d.n_rows(); ++i) {
    if (!d.alive(i)) continue;
    for (Index a = 0; a < s.size(); ++a) {
      if (a) out << ',';
      write_field(out, d.col(a).cell(i));
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Dataset& d) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(Err::IoError, "cannot open '" + path + "' for writing");
  write_csv(f, d);
  if (!f.good()) fail(Err::IoError, "write failed for '" + path + "'");
}

}  // namespace ateaudit
