#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ateaudit/errors.hpp"

namespace ateaudit {

using Index = std::size_t;

enum class AttrKind {
  NumericBinary,      // every observed value is 0 or 1
  NumericContinuous,  // parses as a number, not all 0/1
  Categorical,        // anything else; dictionary-encoded
};

struct Attribute {
  std::string name;
  AttrKind kind = AttrKind::Categorical;
};

struct Schema {
  std::vector<Attribute> attrs;

  // Index of `name`, or nullopt.
  std::optional<Index> find(const std::string& name) const;
  // Index of `name`, throws UnknownAttribute.
  Index require(const std::string& name) const;
  Index size() const { return attrs.size(); }
};

// One column of data. Numeric kinds live in `num`; categorical columns are
// dictionary-encoded: `codes[i]` indexes `labels` (order of first appearance).
struct Column {
  AttrKind kind = AttrKind::Categorical;
  Eigen::VectorXd num;
  std::vector<std::int32_t> codes;
  std::vector<std::string> labels;

  std::optional<std::int32_t> code_of(const std::string& label) const;
  std::int32_t intern(const std::string& label);  // existing or new code
  // Printable cell value (numeric formatted shortest round-trip).
  std::string cell(Index row) const;
};

// Receipt for one delete_rows call; undo() consumes it. Row ids stay stable
// across deletions (deletion only flips the alive mask).
struct DeletionReceipt {
  std::vector<Index> rows;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(Schema schema, std::vector<Column> cols);

  const Schema& schema() const { return schema_; }
  const Column& col(Index a) const { return cols_[a]; }
  const Column& col(const std::string& name) const { return cols_[schema_.require(name)]; }
  Index n_rows() const { return n_rows_; }
  Index n_alive() const { return n_alive_; }
  bool alive(Index row) const { return alive_[row] != 0; }
  const std::vector<std::uint8_t>& alive_mask() const { return alive_; }

  std::vector<Index> alive_rows() const;

  // Marks rows dead. Throws AlreadyDeleted (whole call is rejected) if any id
  // is already dead or out of range.
  DeletionReceipt delete_rows(const std::vector<Index>& rows);
  void undo(const DeletionReceipt& receipt);

  // New dataset holding copies of `rows` (all must be alive); used for
  // uniform-sample runs. Keeps the mapping back to the source ids.
  Dataset subset(const std::vector<Index>& rows) const;
  const std::vector<Index>& source_ids() const { return source_ids_; }

 private:
  Schema schema_;
  std::vector<Column> cols_;
  std::vector<std::uint8_t> alive_;
  Index n_rows_ = 0;
  Index n_alive_ = 0;
  std::vector<Index> source_ids_;  // empty unless built by subset()
};

// Average-treatment-effect query: binary treatment, numeric outcome,
// confounder list, and the target interval [target - epsilon, target + epsilon].
struct CausalQuery {
  std::string treatment;
  std::string outcome;
  std::vector<std::string> confounders;
  double target = 0.0;
  double epsilon = 0.0;

  // Checks attribute existence, kinds, distinctness, epsilon >= 0 and finite
  // target. Throws BadQuery / UnknownAttribute.
  void validate(const Dataset& d) const;
  bool in_range(double ate) const {
    return ate >= target - epsilon && ate <= target + epsilon;
  }
};

// Conjunction of equality predicates over categorical / binary attributes.
struct Predicate {
  std::string attr;
  std::string value;  // label for categorical, "0"/"1" for binary
  bool operator==(const Predicate&) const = default;
};

struct Pattern {
  std::vector<Predicate> preds;

  bool empty() const { return preds.empty(); }
  Index size() const { return preds.size(); }
  // Canonical "a=v AND b=w" rendering, attributes sorted.
  std::string key() const;
  std::string display() const;
  // Throws UnknownAttribute / BadQuery if a predicate names a missing or
  // continuous attribute, repeats an attribute, or touches outcome (always)
  // or treatment (unless allow_treatment).
  void validate(const Dataset& d, const CausalQuery& q, bool allow_treatment = false) const;
};

// Alive rows matching every predicate, ascending ids. Value absent from a
// column's dictionary matches nothing.
std::vector<Index> satisfies(const Dataset& d, const Pattern& p);

}  // namespace ateaudit
