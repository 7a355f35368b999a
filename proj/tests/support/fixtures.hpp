#pragma once

// Shared test data: the 7-row golden table, the 4-row identifier table, and
// small helpers for building datasets inline.

#include <random>
#include <string>
#include <vector>

#include "ateaudit/csv.hpp"
#include "ateaudit/dataset.hpp"

namespace fixtures {

using ateaudit::CausalQuery;
using ateaudit::Dataset;
using ateaudit::Index;

// T,O rows (1,1),(1,3),(1,5),(1,-4),(0,0),(0,0),(0,0): four treated rows
// averaging 1.25 against an all-zero control arm. Removing row 2 (O=5) is the
// unique single deletion that lands the estimate exactly on 0.
std::string golden_csv();
Dataset golden();
CausalQuery golden_query(double target = 0.0, double epsilon = 0.0);

// Four rows t1..t4 with one-hot identifier columns S1..S4 (row i has S_i=1)
// plus the golden table's treated T,O values. S1=0 AND S4=0 selects rows
// {1, 2}.
Dataset identifier_table();

// n rows: T fair coin (both arms guaranteed), O = effect*T + noise, plus
// `c` standard-normal confounders z1..zc that also enter O. No planted
// structure; handy when a test just needs a well-conditioned table.
Dataset random_table(Index n, int c, std::mt19937_64& rng, double effect = 1.0);
CausalQuery numeric_query(int c, double target = 0.0, double epsilon = 0.0);

// Builds a single-column dataset description inline.
struct ColSpec {
  std::string name;
  ateaudit::AttrKind kind;
  std::vector<double> num;            // numeric kinds
  std::vector<std::string> values;    // categorical
};
Dataset make_dataset(const std::vector<ColSpec>& cols);

}  // namespace fixtures
