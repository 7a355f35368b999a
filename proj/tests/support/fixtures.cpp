#include "support/fixtures.hpp"

#include <sstream>

#include "ateaudit/rng.hpp"

namespace fixtures {

std::string golden_csv() {
  return "T,O\n"
         "1,1\n"
         "1,3\n"
         "1,5\n"
         "1,-4\n"
         "0,0\n"
         "0,0\n"
         "0,0\n";
}

Dataset golden() {
  std::istringstream in(golden_csv());
  return ateaudit::load_csv(in);
}

CausalQuery golden_query(double target, double epsilon) {
  CausalQuery q;
  q.treatment = "T";
  q.outcome = "O";
  q.target = target;
  q.epsilon = epsilon;
  return q;
}

Dataset identifier_table() {
  std::istringstream in(
      "T,O,S1,S2,S3,S4\n"
      "1,1,1,0,0,0\n"
      "1,3,0,1,0,0\n"
      "1,5,0,0,1,0\n"
      "1,-4,0,0,0,1\n");
  return ateaudit::load_csv(in);
}

Dataset random_table(Index n, int c, std::mt19937_64& rng, double effect) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<ColSpec> cols;
  std::vector<double> t(n), o(n);
  std::vector<std::vector<double>> z(c, std::vector<double>(n));
  for (Index i = 0; i < n; ++i) {
    t[i] = i < 2 ? static_cast<double>(i)  // both arms occupied
                 : (ateaudit::rand01(rng()) < 0.5 ? 1.0 : 0.0);
    double zsum = 0.0;
    for (int j = 0; j < c; ++j) {
      z[j][i] = gauss(rng);
      zsum += z[j][i];
    }
    o[i] = effect * t[i] + 0.5 * zsum + gauss(rng);
  }
  cols.push_back({"T", ateaudit::AttrKind::NumericBinary, std::move(t), {}});
  cols.push_back({"O", ateaudit::AttrKind::NumericContinuous, std::move(o), {}});
  for (int j = 0; j < c; ++j)
    cols.push_back({"z" + std::to_string(j + 1), ateaudit::AttrKind::NumericContinuous,
                    std::move(z[j]), {}});
  return make_dataset(cols);
}

CausalQuery numeric_query(int c, double target, double epsilon) {
  CausalQuery q;
  q.treatment = "T";
  q.outcome = "O";
  for (int j = 0; j < c; ++j) q.confounders.push_back("z" + std::to_string(j + 1));
  q.target = target;
  q.epsilon = epsilon;
  return q;
}

Dataset make_dataset(const std::vector<ColSpec>& specs) {
  ateaudit::Schema schema;
  std::vector<ateaudit::Column> cols;
  for (const auto& s : specs) {
    schema.attrs.push_back({s.name, s.kind});
    ateaudit::Column c;
    c.kind = s.kind;
    if (s.kind == ateaudit::AttrKind::Categorical) {
      for (const auto& v : s.values) c.codes.push_back(c.intern(v));
    } else {
      c.num.resize(static_cast<long>(s.num.size()));
      for (std::size_t i = 0; i < s.num.size(); ++i) c.num[static_cast<long>(i)] = s.num[i];
    }
    cols.push_back(std::move(c));
  }
  return Dataset(std::move(schema), std::move(cols));
}

}  // namespace fixtures
