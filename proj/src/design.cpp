#include "ateaudit/design.hpp"

#include <cmath>

namespace ateaudit {

DesignSpec build_design(const Dataset& d, const CausalQuery& q, bool with_treatment) {
  DesignSpec spec;
  spec.with_treatment = with_treatment;
  spec.treatment_attr = d.schema().require(q.treatment);
  spec.outcome_attr = d.schema().require(q.outcome);
  spec.treatment_index = with_treatment ? 1 : -1;
  for (const auto& zname : q.confounders) {
    Index a = d.schema().require(zname);
    const Column& c = d.col(a);
    if (c.kind == AttrKind::Categorical) {
      // Drop the first dictionary level as the reference category.
      for (std::int32_t code = 1; code < static_cast<std::int32_t>(c.labels.size()); ++code)
        spec.terms.push_back({a, true, code});
    } else {
      spec.terms.push_back({a, false, 0});
    }
  }
  return spec;
}

void encode_row(const Dataset& d, const DesignSpec& spec, Index row,
                Eigen::Ref<Eigen::VectorXd> out) {
  int j = 0;
  out[j++] = 1.0;
  if (spec.with_treatment)
    out[j++] = d.col(spec.treatment_attr).num[static_cast<Eigen::Index>(row)];
  for (const auto& t : spec.terms) {
    const Column& c = d.col(t.attr);
    if (t.categorical)
      out[j++] = c.codes[row] == t.code ? 1.0 : 0.0;
    else
      out[j++] = c.num[static_cast<Eigen::Index>(row)];
  }
}

Eigen::MatrixXd encode_rows(const Dataset& d, const DesignSpec& spec,
                            const std::vector<Index>& rows) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), spec.dim());
  Eigen::VectorXd buf(spec.dim());
  for (Index i = 0; i < rows.size(); ++i) {
    encode_row(d, spec, rows[i], buf);
    X.row(static_cast<Eigen::Index>(i)) = buf;
  }
  return X;
}

Eigen::MatrixXd standardized_features(const Dataset& d, const CausalQuery& q,
                                      const std::vector<Index>& rows) {
  DesignSpec spec = build_design(d, q, /*with_treatment=*/true);
  const Index outcome = d.schema().require(q.outcome);
  const int dz = spec.dim() - 1;  // drop the intercept, keep T + encodings
  Eigen::MatrixXd F(static_cast<Eigen::Index>(rows.size()), dz + 1);
  Eigen::VectorXd buf(spec.dim());
  for (Index i = 0; i < rows.size(); ++i) {
    encode_row(d, spec, rows[i], buf);
    F.row(static_cast<Eigen::Index>(i)).head(dz) = buf.tail(dz);
    F(static_cast<Eigen::Index>(i), dz) = d.col(outcome).num[static_cast<Eigen::Index>(rows[i])];
  }
  for (Eigen::Index c = 0; c < F.cols(); ++c) {
    const double mean = F.col(c).mean();
    F.col(c).array() -= mean;
    const double sd = std::sqrt(F.col(c).squaredNorm() / std::max<Eigen::Index>(1, F.rows()));
    if (sd > 0)
      F.col(c) /= sd;
    else
      F.col(c).setZero();
  }
  return F;
}

}  // namespace ateaudit
