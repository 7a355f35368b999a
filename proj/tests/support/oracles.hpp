#pragma once

// Reference implementations the test suite checks the library against.
// Everything here is deliberately written from scratch with plain loops and
// Gaussian elimination — no Eigen, no code shared with the library paths
// under test.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ateaudit/dataset.hpp"

namespace oracle {

using ateaudit::CausalQuery;
using ateaudit::Dataset;
using ateaudit::Index;

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

// Solves M x = rhs by Gaussian elimination with partial pivoting.
// Throws std::runtime_error on a (numerically) singular system.
Vec solve_linear(Mat M, Vec rhs);

// Least squares via the normal equations: returns the coefficient vector of
// X beta ~= y.
Vec least_squares(const Mat& X, const Vec& y);

// Design rows [1, T, enc(Z)...] with one-hot(first level dropped) categorical
// confounders, mirroring the documented encoding but independently coded.
Mat design_rows(const Dataset& d, const CausalQuery& q, const std::vector<Index>& rows,
                bool with_treatment);

// Treatment coefficient of o ~ [1, T, enc(Z)] over `rows`.
double ate_ols(const Dataset& d, const CausalQuery& q, const std::vector<Index>& rows);

// mean(O | T=1) - mean(O | T=0) over `rows`.
double mean_diff(const Dataset& d, const CausalQuery& q, const std::vector<Index>& rows);

// Ridge-penalized logistic regression (penalty lambda/2 * |theta|^2 on all
// coordinates including the intercept) by damped Newton iteration on the
// intercept+confounder design. Gradient norm driven below 1e-10.
Vec logistic_newton(const Dataset& d, const CausalQuery& q, const std::vector<Index>& rows,
                    double lambda);

// Hajek estimate from explicit propensities (clipped to [clip, 1-clip]).
double hajek(const Vec& t, const Vec& o, const Vec& p, double clip);

// Subsets of {0..n-1} in increasing cardinality (lexicographic inside one
// cardinality), up to max_card inclusive. The visitor returns true to stop;
// for_each_subset then returns true. The empty set is not visited.
bool for_each_subset(std::size_t n, std::size_t max_card,
                     const std::function<bool(const std::vector<std::size_t>&)>& visit);

// Group sizes of the alive rows keyed by their rendered values over `attrs`.
std::map<std::string, Index> group_counts(const Dataset& d, const std::vector<Index>& attrs);

}  // namespace oracle
