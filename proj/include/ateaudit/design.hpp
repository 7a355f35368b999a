#pragma once

#include <Eigen/Core>

#include "ateaudit/dataset.hpp"

namespace ateaudit {

// Fixed column layout for regression designs: intercept first, then the
// treatment (if included), then confounder encodings in query order.
// Categorical confounders expand to one-hot with the first dictionary level
// dropped; numeric confounders enter as-is.
struct DesignSpec {
  struct Term {
    Index attr;         // column in the dataset
    bool categorical;   // one-hot term?
    std::int32_t code;  // matched level (categorical only)
  };
  std::vector<Term> terms;  // one per design column after intercept/treatment
  Index treatment_attr = 0;
  Index outcome_attr = 0;
  bool with_treatment = true;
  int treatment_index = 1;  // column of T in the design (when included)

  int dim() const {
    return 1 + (with_treatment ? 1 : 0) + static_cast<int>(terms.size());
  }
};

DesignSpec build_design(const Dataset& d, const CausalQuery& q, bool with_treatment);

// Single-row encoding into a preallocated vector of length spec.dim().
void encode_row(const Dataset& d, const DesignSpec& spec, Index row, Eigen::Ref<Eigen::VectorXd> out);

// Rows stacked into a matrix (one row per id, in the given order).
Eigen::MatrixXd encode_rows(const Dataset& d, const DesignSpec& spec, const std::vector<Index>& rows);

// Standardized feature block for clustering / nearest-neighbor work:
// confounder encodings plus treatment and outcome, each column shifted to
// mean 0 and scaled to unit variance over `rows` (constant columns go to 0).
Eigen::MatrixXd standardized_features(const Dataset& d, const CausalQuery& q,
                                      const std::vector<Index>& rows);

}  // namespace ateaudit
