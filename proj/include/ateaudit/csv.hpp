#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "ateaudit/dataset.hpp"

namespace ateaudit {

// Exact numeric parse of a full token; nullopt when not a number.
std::optional<double> parse_double(const std::string& token);

// Kind overrides by column name; names must exist in the header.
using SchemaHint = std::map<std::string, AttrKind>;

// RFC 4180 CSV with a header row: quoted fields, embedded separators/newlines,
// doubled quotes. Column kinds are inferred per column — all values in {0,1}
// => binary, else all numeric => continuous, else categorical — unless a hint
// overrides. Empty cells are rejected (UnparseableValue). A hinted numeric
// column containing non-numeric text is an UnparseableValue error carrying
// 1-based data row and the column name.
Dataset load_csv(std::istream& in, const SchemaHint& hint = {});
Dataset load_csv_file(const std::string& path, const SchemaHint& hint = {});

void write_csv(std::ostream& out, const Dataset& d);
void write_csv_file(const std::string& path, const Dataset& d);

}  // namespace ateaudit
