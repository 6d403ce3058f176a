#include "doctest.h"

#include <random>
#include <vector>

#include "dtr/tree.hpp"
#include "support.hpp"

using namespace dtr;

namespace {

using T = DecisionTree<double>;

T leaf(double v) { return T::leaf(v); }
T node(int var, T t, T f) { return T::node(pre_ref(var), {std::move(t), std::move(f)}); }

// Random binary tree over variables [0, n) that may repeat tests on a path.
T random_tree(std::mt19937_64& rng, int n, int depth) {
  if (depth == 0 || rng() % 4 == 0) return leaf(static_cast<double>(rng() % 5));
  int v = static_cast<int>(rng() % static_cast<unsigned>(n));
  return T::node(pre_ref(v), {random_tree(rng, n, depth - 1), random_tree(rng, n, depth - 1)});
}

Context state_of(int n, unsigned bits) {
  Context c;
  for (int i = 0; i < n; ++i) c.assign(pre_ref(i), (bits >> i) & 1u);
  return c;
}

bool repeats_test(const T& t, std::set<VarRef>& seen) {
  if (t.is_leaf()) return false;
  if (!seen.insert(t.test()).second) return true;
  for (const auto& c : t.children()) {
    if (repeats_test(c, seen)) return true;
  }
  seen.erase(t.test());
  return false;
}

}  // namespace

TEST_CASE("evaluate follows the assignment") {
  CHECK(evaluate(leaf(7.0), Context{}) == 7.0);
  CHECK(evaluate(node(0, leaf(10), leaf(0)), Context{{pre_ref(0), 0}}) == 10.0);
  CHECK(evaluate(node(0, leaf(10), leaf(0)), Context{{pre_ref(0), 1}}) == 0.0);
}

TEST_CASE("evaluate reports a missing assignment") {
  try {
    evaluate(node(0, leaf(1), leaf(2)), Context{{pre_ref(1), 0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::missing_assignment);
  }
}

TEST_CASE("reward tree matches the flat expansion at every state") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    MdpModel m = random_model(test::small_params(seed, 5, 2));
    StateSpace space(m);
    auto table = expand(space, m.reward);
    for (std::size_t s = 0; s < space.size(); ++s) {
      CHECK(evaluate(m.reward, space.context(s)) == table[s]);
    }
  }
}

TEST_CASE("context with conflicting values is rejected") {
  Context c{{pre_ref(0), 1}};
  CHECK_THROWS(c.assign(pre_ref(0), 0));
  CHECK_NOTHROW(c.assign(pre_ref(0), 1));
  CHECK(c.with(post_ref(0), 0).size() == 2);
}

TEST_CASE("reduce picks the child of an assigned test") {
  T t = node(0, leaf(1), leaf(2));
  CHECK(structurally_equal(reduce(t, Context{{pre_ref(0), 0}}), leaf(1)));
  CHECK(structurally_equal(reduce(t, Context{{pre_ref(0), 1}}), leaf(2)));
}

TEST_CASE("reduce with an empty context is the identity on canonical trees") {
  T t = node(0, node(1, leaf(1), leaf(2)), leaf(3));
  T r = reduce(t);
  CHECK(structurally_equal(r, t));
  CHECK(r.shares(t));
}

TEST_CASE("reduce removes a repeated test") {
  T t = node(0, node(1, node(0, leaf(1), leaf(9)), leaf(2)), leaf(3));
  T r = reduce(t);
  CHECK(structurally_equal(r, node(0, node(1, leaf(1), leaf(2)), leaf(3))));
}

TEST_CASE("reduce collapses nodes whose children become identical") {
  T t = node(0, node(1, leaf(4), leaf(4)), leaf(5));
  CHECK(structurally_equal(reduce(t), node(0, leaf(4), leaf(5))));
}

TEST_CASE("reduce preserves the function on consistent assignments") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    T t = random_tree(rng, 5, 6);
    Context c;
    if (rng() % 2) c.assign(pre_ref(static_cast<int>(rng() % 5)), static_cast<int>(rng() % 2));
    T r = reduce(t, c);
    std::set<VarRef> seen;
    CHECK_FALSE(repeats_test(r, seen));
    for (const auto& [ref, value] : c) CHECK(tested_variables(r).count(ref) == 0);
    for (unsigned bits = 0; bits < 32; ++bits) {
      Context s = state_of(5, bits);
      bool consistent = true;
      for (const auto& [ref, value] : c) consistent = consistent && *s.find(ref) == value;
      if (consistent) CHECK(evaluate(r, s) == evaluate(t, s));
    }
  }
}

TEST_CASE("merge composes disjoint tests") {
  T y = node(0, leaf(1), leaf(2));
  T w = node(1, leaf(10), leaf(20));
  auto m = merge(std::vector<T>{y, w}, [](const std::vector<double>& p) { return std::make_pair(p[0], p[1]); });
  REQUIRE_FALSE(m.is_leaf());
  CHECK(m.test() == pre_ref(0));
  for (const auto& c : m.children()) CHECK(c.test() == pre_ref(1));
  CHECK(leaf_count(m) == 4);
  CHECK(evaluate(m, Context{{pre_ref(0), 1}, {pre_ref(1), 0}}) == std::make_pair(2.0, 10.0));
}

TEST_CASE("merge of a tree with itself is the tree") {
  T t = node(0, node(1, leaf(1), leaf(2)), leaf(3));
  auto m = merge(std::vector<T>{t, t}, [](const std::vector<double>& p) { return p[0]; });
  CHECK(semantic_eq(m, t, 0.0));
  CHECK(leaf_count(m) == leaf_count(t));
}

TEST_CASE("merge evaluates pointwise and partitions the space") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<T> ts;
    for (int i = 0; i < 3; ++i) ts.push_back(reduce(random_tree(rng, 10, 5)));
    auto sum = [](const std::vector<double>& p) { return p[0] + 2 * p[1] + 4 * p[2]; };
    T m = merge(ts, sum);
    std::set<VarRef> seen;
    CHECK_FALSE(repeats_test(m, seen));
    for (unsigned bits = 0; bits < 1024; bits += 7) {
      Context s = state_of(10, bits);
      CHECK(evaluate(m, s) == sum({evaluate(ts[0], s), evaluate(ts[1], s), evaluate(ts[2], s)}));
    }
    // Each full assignment reaches exactly one leaf, so leaf masses sum to 1.
    double mass = 0;
    for_each_leaf(m, [&](const Context& c, double) { mass += std::ldexp(1.0, -static_cast<int>(c.size())); });
    CHECK(mass == 1.0);
  }
}

TEST_CASE("merge does not modify its inputs") {
  T a = node(0, leaf(1), leaf(2));
  T b = node(1, leaf(3), leaf(4));
  T a_copy = a;
  merge(std::vector<T>{a, b}, [](const std::vector<double>& p) { return p[0] * p[1]; });
  CHECK(a.shares(a_copy));
  CHECK(structurally_equal(a, node(0, leaf(1), leaf(2))));
}

TEST_CASE("semantic equality ignores variable order") {
  T a = node(0, node(1, leaf(1), leaf(2)), node(1, leaf(3), leaf(4)));
  T b = node(1, node(0, leaf(1), leaf(3)), node(0, leaf(2), leaf(4)));
  CHECK(semantic_eq(a, b, 0.0));
  CHECK_FALSE(structurally_equal(a, b));
  CHECK_FALSE(semantic_eq(leaf(1.0), leaf(2.0), 1e-9));
  CHECK(semantic_eq(leaf(1.0), leaf(1.0 + 1e-10), 1e-9));
  CHECK(max_distance(a, node(0, leaf(1), leaf(3.5))) == doctest::Approx(1.0));
}

TEST_CASE("semantic equality holds between a tree and its reduction") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    T t = random_tree(rng, 4, 6);
    CHECK(semantic_eq(t, reduce(t), 0.0));
  }
}

TEST_CASE("graft reduces the grafted subtree by the branch") {
  T t = node(0, leaf(1), leaf(2));
  T g = graft(t, [](const Context&, double v) { return node(0, leaf(v), leaf(-v)); });
  CHECK(structurally_equal(g, node(0, leaf(1), leaf(-2))));
}
