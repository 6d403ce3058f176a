#include "doctest.h"

#include <limits>
#include <utility>
#include <vector>

#include "dtr/factor.hpp"

using namespace dtr;

namespace {

// Joint over {0, 1}: rows (0,0) (0,1) (1,0) (1,1).
Factor joint01() { return Factor({0, 1}, {2, 2}, {0.1, 0.2, 0.3, 0.4}); }

}  // namespace

TEST_CASE("factor rows are row-major with the last variable fastest") {
  Factor f = joint01();
  CHECK(f.at(std::vector<int>{1, 0}) == 0.3);
  CHECK(f.encode(std::vector<int>{0, 1}) == 1);
  CHECK(f.decode(2) == std::vector<int>{1, 0});
  CHECK(f.total() == doctest::Approx(1.0));
}

TEST_CASE("factor construction checks its scope") {
  CHECK_THROWS_AS(Factor({1, 0}, {2, 2}, {0.25, 0.25, 0.25, 0.25}), Error);
  CHECK_THROWS_AS(Factor({0}, {2}, {1.0}), Error);
  CHECK_THROWS_AS(Factor({0, 0}, {2, 2}, {0.25, 0.25, 0.25, 0.25}), Error);
}

TEST_CASE("probability sums the rows that agree with the fixed values") {
  Factor f = joint01();
  std::vector<std::pair<int, int>> both{{0, 1}, {1, 1}};
  std::vector<std::pair<int, int>> first{{0, 1}};
  std::vector<std::pair<int, int>> other{{5, 0}, {1, 0}};
  std::vector<std::pair<int, int>> none;
  CHECK(f.probability(both) == 0.4);
  CHECK(f.probability(first) == doctest::Approx(0.7));
  CHECK(f.probability(other) == doctest::Approx(0.4));
  CHECK(f.probability(none) == doctest::Approx(1.0));
}

TEST_CASE("sum out and marginal") {
  Factor f = joint01();
  Factor m0 = f.sum_out(1);
  CHECK(m0.scope() == std::vector<int>{0});
  CHECK(m0.table()[0] == doctest::Approx(0.3));
  CHECK(m0.table()[1] == doctest::Approx(0.7));
  Factor m1 = f.marginal(std::vector<int>{1});
  CHECK(m1.table()[0] == doctest::Approx(0.4));
  CHECK(m1.table()[1] == doctest::Approx(0.6));
  CHECK_THROWS_AS(f.sum_out(7), Error);
}

TEST_CASE("product of disjoint factors") {
  Factor a = Factor::single(2, {0.25, 0.75});
  Factor b = Factor::single(0, {0.5, 0.5});
  Factor p = Factor::product(a, b);
  CHECK(p.scope() == std::vector<int>{0, 2});
  CHECK(p.at(std::vector<int>{1, 1}) == doctest::Approx(0.375));
  CHECK_THROWS_AS(Factor::product(a, a), Error);
}

TEST_CASE("factor sets keep disjoint scopes sorted by smallest variable") {
  FactorSet fs({Factor::single(3, {1, 0}), joint01()});
  CHECK(fs.factors()[0].scope() == std::vector<int>{0, 1});
  CHECK(fs.factor_of(1) == 0);
  CHECK(fs.factor_of(3) == 1);
  CHECK(fs.factor_of(2) == -1);
  CHECK_FALSE(fs.records(2));
  CHECK(fs.recorded() == std::vector<int>{0, 1, 3});
  CHECK_THROWS_AS(fs.with(Factor::single(1, {0.5, 0.5})), Error);
  FactorSet smaller = fs.without(std::vector<int>{0});
  CHECK(smaller.recorded() == std::vector<int>{3});
  CHECK(fs.with(Factor::single(2, {0.5, 0.5})).size() == 3);
}

TEST_CASE("factor set distance") {
  FactorSet a({Factor::single(0, {0.5, 0.5})});
  FactorSet b({Factor::single(0, {0.25, 0.75})});
  FactorSet c({Factor::single(1, {0.5, 0.5})});
  CHECK(leaf_distance(a, b) == doctest::Approx(0.25));
  CHECK(leaf_distance(a, a) == 0.0);
  CHECK(leaf_distance(a, c) == std::numeric_limits<double>::infinity());
}

TEST_CASE("factor set formatting") {
  FactorSet fs({joint01(), Factor::single(2, {1, 0})});
  CHECK(format_factor_set(fs, {"A", "B", "C"}) == "{Pr(A',B')=[0.1 0.2 0.3 0.4]; Pr(C')=[1 0]}");
}
