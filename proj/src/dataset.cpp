#include "ateaudit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>

namespace ateaudit {

std::optional<Index> Schema::find(const std::string& name) const {
  for (Index i = 0; i < attrs.size(); ++i)
    if (attrs[i].name == name) return i;
  return std::nullopt;
}

Index Schema::require(const std::string& name) const {
  if (auto i = find(name)) return *i;
  fail(Err::UnknownAttribute, "no attribute named '" + name + "'");
}

std::optional<std::int32_t> Column::code_of(const std::string& label) const {
  for (Index i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<std::int32_t>(i);
  return std::nullopt;
}

std::int32_t Column::intern(const std::string& label) {
  if (auto c = code_of(label)) return *c;
  labels.push_back(label);
  return static_cast<std::int32_t>(labels.size() - 1);
}

std::string Column::cell(Index row) const {
  if (kind == AttrKind::Categorical) return labels[static_cast<Index>(codes[row])];
  double v = num[static_cast<Eigen::Index>(row)];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::ostringstream os;
    os << static_cast<long long>(v);
    return os.str();
  }
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

Dataset::Dataset(Schema schema, std::vector<Column> cols)
    : schema_(std::move(schema)), cols_(std::move(cols)) {
  if (schema_.size() != cols_.size())
    fail(Err::BadConfig, "schema/column count mismatch");
  n_rows_ = 0;
  if (!cols_.empty()) {
    const Column& c0 = cols_[0];
    n_rows_ = c0.kind == AttrKind::Categorical ? c0.codes.size()
                                               : static_cast<Index>(c0.num.size());
  }
  for (Index a = 0; a < cols_.size(); ++a) {
    Index len = cols_[a].kind == AttrKind::Categorical
                    ? cols_[a].codes.size()
                    : static_cast<Index>(cols_[a].num.size());
    if (len != n_rows_) fail(Err::RaggedRow, "column '" + schema_.attrs[a].name + "' length mismatch");
  }
  alive_.assign(n_rows_, 1);
  n_alive_ = n_rows_;
}

std::vector<Index> Dataset::alive_rows() const {
  std::vector<Index> out;
  out.reserve(n_alive_);
  for (Index i = 0; i < n_rows_; ++i)
    if (alive_[i]) out.push_back(i);
  return out;
}

DeletionReceipt Dataset::delete_rows(const std::vector<Index>& rows) {
  // Validate the whole batch before touching the mask so a failure is a no-op.
  std::set<Index> seen;
  for (Index r : rows) {
    if (r >= n_rows_) fail(Err::AlreadyDeleted, "row " + std::to_string(r) + " out of range");
    if (!alive_[r]) fail(Err::AlreadyDeleted, "row " + std::to_string(r) + " already deleted");
    if (!seen.insert(r).second)
      fail(Err::AlreadyDeleted, "row " + std::to_string(r) + " listed twice");
  }
  for (Index r : rows) alive_[r] = 0;
  n_alive_ -= rows.size();
  return DeletionReceipt{rows};
}

void Dataset::undo(const DeletionReceipt& receipt) {
  for (Index r : receipt.rows) {
    if (r >= n_rows_ || alive_[r])
      fail(Err::AlreadyDeleted, "undo of row " + std::to_string(r) + " that is not deleted");
  }
  for (Index r : receipt.rows) alive_[r] = 1;
  n_alive_ += receipt.rows.size();
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  std::vector<Column> cols(cols_.size());
  for (Index a = 0; a < cols_.size(); ++a) {
    const Column& src = cols_[a];
    Column& dst = cols[a];
    dst.kind = src.kind;
    dst.labels = src.labels;
    if (src.kind == AttrKind::Categorical) {
      dst.codes.reserve(rows.size());
      for (Index r : rows) dst.codes.push_back(src.codes[r]);
    } else {
      dst.num.resize(static_cast<Eigen::Index>(rows.size()));
      for (Index i = 0; i < rows.size(); ++i)
        dst.num[static_cast<Eigen::Index>(i)] = src.num[static_cast<Eigen::Index>(rows[i])];
    }
  }
  Dataset out(schema_, std::move(cols));
  out.source_ids_ = rows;
  return out;
}

void CausalQuery::validate(const Dataset& d) const {
  const Schema& s = d.schema();
  Index t = s.require(treatment);
  Index o = s.require(outcome);
  if (treatment == outcome) fail(Err::BadQuery, "treatment and outcome must differ");
  if (d.col(t).kind != AttrKind::NumericBinary)
    fail(Err::BadQuery, "treatment '" + treatment + "' must be binary 0/1");
  if (d.col(o).kind == AttrKind::Categorical)
    fail(Err::BadQuery, "outcome '" + outcome + "' must be numeric");
  std::set<std::string> seen;
  for (const auto& z : confounders) {
    s.require(z);
    if (z == treatment || z == outcome)
      fail(Err::BadQuery, "confounder '" + z + "' collides with treatment/outcome");
    if (!seen.insert(z).second) fail(Err::BadQuery, "confounder '" + z + "' repeated");
  }
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    fail(Err::BadQuery, "epsilon must be finite and >= 0");
  if (!std::isfinite(target)) fail(Err::BadQuery, "target must be finite");
}

std::string Pattern::key() const {
  std::vector<Predicate> sorted = preds;
  std::sort(sorted.begin(), sorted.end(),
            [](const Predicate& a, const Predicate& b) { return a.attr < b.attr; });
  std::string out;
  for (const auto& p : sorted) {
    if (!out.empty()) out += ";";
    out += p.attr + "=" + p.value;
  }
  return out;
}

std::string Pattern::display() const {
  if (preds.empty()) return "<empty>";
  std::vector<Predicate> sorted = preds;
  std::sort(sorted.begin(), sorted.end(),
            [](const Predicate& a, const Predicate& b) { return a.attr < b.attr; });
  std::string out;
  for (const auto& p : sorted) {
    if (!out.empty()) out += " AND ";
    out += p.attr + "=" + p.value;
  }
  return out;
}

void Pattern::validate(const Dataset& d, const CausalQuery& q, bool allow_treatment) const {
  std::set<std::string> seen;
  for (const auto& p : preds) {
    Index a = d.schema().require(p.attr);
    if (!seen.insert(p.attr).second)
      fail(Err::BadQuery, "pattern repeats attribute '" + p.attr + "'");
    if (p.attr == q.outcome) fail(Err::BadQuery, "pattern may not constrain the outcome");
    if (!allow_treatment && p.attr == q.treatment)
      fail(Err::BadQuery, "pattern may not constrain the treatment");
    if (d.col(a).kind == AttrKind::NumericContinuous)
      fail(Err::BadQuery, "pattern attribute '" + p.attr + "' is continuous");
  }
}

std::vector<Index> satisfies(const Dataset& d, const Pattern& p) {
  // Resolve predicates once: (column, categorical code or numeric value).
  struct Test {
    const Column* col;
    std::int32_t code;
    double value;
  };
  std::vector<Test> tests;
  tests.reserve(p.preds.size());
  for (const auto& pred : p.preds) {
    Index a = d.schema().require(pred.attr);
    const Column& c = d.col(a);
    Test t{&c, 0, 0.0};
    if (c.kind == AttrKind::Categorical) {
      auto code = c.code_of(pred.value);
      if (!code) return {};  // value never occurs
      t.code = *code;
    } else {
      char* end = nullptr;
      double v = std::strtod(pred.value.c_str(), &end);
      if (pred.value.empty() || end != pred.value.c_str() + pred.value.size())
        fail(Err::UnparseableValue, "pattern value '" + pred.value + "' is not numeric");
      t.value = v;
    }
    tests.push_back(t);
  }
  std::vector<Index> out;
  for (Index i = 0; i < d.n_rows(); ++i) {
    if (!d.alive(i)) continue;
    bool ok = true;
    for (const auto& t : tests) {
      if (t.col->kind == AttrKind::Categorical) {
        if (t.col->codes[i] != t.code) { ok = false; break; }
      } else {
        if (t.col->num[static_cast<Eigen::Index>(i)] != t.value) { ok = false; break; }
      }
    }
    if (ok) out.push_back(i);
  }
  return out;
}

const char* err_name(Err e) {
  switch (e) {
    case Err::MissingColumn: return "MissingColumn";
    case Err::RaggedRow: return "RaggedRow";
    case Err::UnparseableValue: return "UnparseableValue";
    case Err::UnknownAttribute: return "UnknownAttribute";
    case Err::AlreadyDeleted: return "AlreadyDeleted";
    case Err::BadQuery: return "BadQuery";
    case Err::RankDeficient: return "RankDeficient";
    case Err::RankLost: return "RankLost";
    case Err::DegenerateGroups: return "DegenerateGroups";
    case Err::SingularCapacitance: return "SingularCapacitance";
    case Err::NormTooLarge: return "NormTooLarge";
    case Err::Separation: return "Separation";
    case Err::SingularFisher: return "SingularFisher";
    case Err::EmptyGroup: return "EmptyGroup";
    case Err::NoEligibleAttributes: return "NoEligibleAttributes";
    case Err::TooLarge: return "TooLarge";
    case Err::BadConfig: return "BadConfig";
    case Err::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ateaudit
