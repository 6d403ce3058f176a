#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dtr/oracle.hpp"
#include "support.hpp"

using namespace dtr;

namespace {

double mass(const FlatDistribution& d) {
  double s = 0;
  for (const auto& [t, p] : d) s += p;
  return s;
}

double prob_of(const FlatDistribution& d, std::size_t t) {
  for (const auto& [u, p] : d) {
    if (u == t) return p;
  }
  return 0.0;
}

// Pre-slice A and B; M' depends on the listed parents, B' on M' in the chain.
const char* kChain = R"(
discount 0.5
var A { t f }
var M { t f }
var B { t f }
reward (leaf 0)
action a {
  cpt A' [parents: A] (test A (t (leaf 1 0)) (f (leaf 0 1)))
  cpt M' [parents: A] (test A (t (leaf 0.75 0.25)) (f (leaf 0.25 0.75)))
  cpt B' [parents: M'] (test M' (t (leaf 0.875 0.125)) (f (leaf 0.375 0.625)))
}
)";

const char* kCollider = R"(
discount 0.5
var A { t f }
var M { t f }
var B { t f }
reward (leaf 0)
action a {
  cpt A' [parents: A] (test A (t (leaf 1 0)) (f (leaf 0 1)))
  cpt M' [parents: A B] (test A
    (t (test B (t (leaf 0.875 0.125)) (f (leaf 0.5 0.5))))
    (f (test B (t (leaf 0.25 0.75)) (f (leaf 0.125 0.875)))))
  cpt B' [parents: B] (test B (t (leaf 1 0)) (f (leaf 0 1)))
}
)";

}  // namespace

TEST_CASE("state space enumeration") {
  MdpModel m = test::load_fixture("fig1.mdp");
  StateSpace space(m);
  CHECK(space.size() == 16);
  CHECK(space.decode(1) == std::vector<int>{0, 0, 0, 1});
  CHECK(space.encode(std::vector<int>{1, 0, 0, 0}) == 8);
  CHECK(space.context(8).find(pre_ref(0)) == 1);
  try {
    StateSpace small(m, 8);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::state_space_too_large);
  }
}

TEST_CASE("transitions without intra-slice arcs are products of marginals") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    MdpModel m = random_model(test::small_params(seed, 5, 0));
    StateSpace space(m);
    for (const auto& action : m.actions) {
      for (std::size_t s = 0; s < space.size(); s += 3) {
        const Context k = space.context(s);
        auto d = flat_transition(m, action, space, s);
        for (std::size_t t = 0; t < space.size(); ++t) {
          const auto tv = space.decode(t);
          double p = 1;
          for (int x = 0; x < m.variable_count(); ++x) {
            p *= evaluate(action.cpts[static_cast<std::size_t>(x)].tree, k)[static_cast<std::size_t>(tv[static_cast<std::size_t>(x)])];
          }
          CHECK(std::abs(prob_of(d, t) - p) < 1e-15);
        }
      }
    }
  }
}

TEST_CASE("deterministic networks give a point mass") {
  MdpModel m = test::load_fixture("fig3c.mdp");
  StateSpace space(m);
  for (std::size_t s = 0; s < space.size(); ++s) {
    auto d = flat_transition(m, m.actions[0], space, s);
    REQUIRE(d.size() == 1);
    CHECK(d[0].second == 1.0);
  }
}

TEST_CASE("the Y' marginal of the correlated action is the sum over X'") {
  MdpModel m = test::load_fixture("fig1.mdp");
  const auto& b = m.action(test::act(m, "b"));
  const int x = test::var(m, "X"), y = test::var(m, "Y");
  StateSpace space(m);
  for (std::size_t s = 0; s < space.size(); ++s) {
    const Context k = space.context(s);
    double joint = 0;
    for (const auto& [t, p] : flat_transition(m, b, space, s)) {
      if (space.decode(t)[static_cast<std::size_t>(y)] == 0) joint += p;
    }
    const auto& px = evaluate(b.cpts[static_cast<std::size_t>(x)].tree, k);
    double mixed = 0;
    for (int xv = 0; xv < 2; ++xv) {
      mixed += evaluate(b.cpts[static_cast<std::size_t>(y)].tree, k.with(post_ref(x), xv))[0] * px[static_cast<std::size_t>(xv)];
    }
    CHECK(std::abs(joint - mixed) < 1e-15);
  }
}

TEST_CASE("transitions are normalized and independent of the topological order") {
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    MdpModel m = random_model(test::small_params(seed, 6, 3));
    StateSpace space(m);
    for (const auto& action : m.actions) {
      // Any reversal of an order where children come first lists parents first.
      auto forward = post_action_ordering(action);
      std::reverse(forward.begin(), forward.end());
      for (std::size_t s = 0; s < space.size(); s += 5) {
        auto d = flat_transition(m, action, space, s);
        CHECK(std::abs(mass(d) - 1.0) < 1e-9);
        auto e = flat_transition(m, action, space, s, forward);
        std::sort(d.begin(), d.end());
        std::sort(e.begin(), e.end());
        REQUIRE(d.size() == e.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
          CHECK(d[i].first == e[i].first);
          CHECK(std::abs(d[i].second - e[i].second) < 1e-15);
        }
      }
    }
  }
}

TEST_CASE("flat value iteration closed forms") {
  MdpModel loop = test::load_fixture("selfloop.mdp");
  auto r = flat_value_iteration(loop, 1e-8, 1000000);
  CHECK(std::abs(r.value[0] - 10.0) < 1e-8);
  MdpModel m = test::load_fixture("fig1.mdp");
  m.discount = 0.0;
  auto z = flat_value_iteration(m, 1e-4, 100);
  CHECK(z.iterations == 1);
  CHECK(test::gap(StateSpace(m), m.reward, z.value) == 0.0);
}

TEST_CASE("flat value iteration ends near its own fixed point") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    MdpModel m = random_model(test::small_params(seed, 4, 2));
    FlatModel flat(m);
    const double eps = 1e-4;
    auto r = flat_value_iteration(flat, eps, 100000);
    CHECK(r.converged);
    for (std::size_t s = 0; s < flat.states(); ++s) {
      double best = -1e300;
      for (int a = 0; a < m.action_count(); ++a) best = std::max(best, flat.q(s, a, r.value));
      CHECK(std::abs(best - r.value[s]) <= eps);
    }
  }
}

TEST_CASE("flat policy value closed forms and residual") {
  MdpModel loop = test::load_fixture("selfloop.mdp");
  FlatModel lf(loop);
  CHECK(std::abs(flat_policy_value(lf, std::vector<int>{0}, 1e-10)[0] - 10.0) < 1e-9);
  MdpModel m = test::load_fixture("fig1.mdp");
  m.discount = 0.0;
  FlatModel zf(m);
  std::vector<int> pi(zf.states(), 1);
  CHECK(test::gap(zf.space(), m.reward, flat_policy_value(zf, pi, 1e-6)) == 0.0);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    MdpModel g = random_model(test::small_params(seed, 5, 3));
    FlatModel flat(g);
    std::vector<int> policy(flat.states());
    for (std::size_t s = 0; s < policy.size(); ++s) policy[s] = static_cast<int>((s * 7 + seed) % static_cast<std::size_t>(g.action_count()));
    const double eps = 1e-6;
    auto v = flat_policy_value(flat, policy, eps);
    for (std::size_t s = 0; s < flat.states(); ++s) CHECK(std::abs(flat.q(s, policy[s], v) - v[s]) <= eps);
  }
}

TEST_CASE("compare against the oracle's own results") {
  MdpModel m = random_model(test::small_params(4, 5, 2));
  FlatModel flat(m);
  auto ref = flat_value_iteration(flat, 1e-4, 100000);
  // Rebuild the flat solution as a tree testing every variable.
  auto tree_of = [&](auto leaf_of) {
    auto rec = [&](auto&& self, int v, std::vector<int>& vals) -> auto {
      if (v == m.variable_count()) return decltype(leaf_of(vals))::leaf(leaf_of(vals).payload());
      std::vector<decltype(leaf_of(vals))> kids;
      for (int i = 0; i < 2; ++i) {
        vals.push_back(i);
        kids.push_back(self(self, v + 1, vals));
        vals.pop_back();
      }
      return make_node(pre_ref(v), std::move(kids));
    };
    std::vector<int> vals;
    return rec(rec, 0, vals);
  };
  const double delta = 0.25;
  const std::size_t target = 5;
  auto value = tree_of([&](const std::vector<int>& s) { return ValueTree::leaf(ref.value[flat.space().encode(s)]); });
  auto policy = tree_of([&](const std::vector<int>& s) { return PolicyTree::leaf(ActionId{ref.policy[flat.space().encode(s)]}); });
  auto same = compare(value, policy, flat, ref, 1e-12);
  CHECK(same.max_gap == 0.0);
  CHECK(same.passed);
  CHECK(same.policy_disagreements == 0);
  auto bumped = tree_of([&](const std::vector<int>& s) {
    const std::size_t i = flat.space().encode(s);
    return ValueTree::leaf(ref.value[i] + (i == target ? delta : 0.0));
  });
  auto report = compare(bumped, policy, flat, ref, 1e-4);
  CHECK(report.max_gap == doctest::Approx(delta));
  CHECK(report.worst_state == target);
  CHECK_FALSE(report.passed);
}

TEST_CASE("brute force independence on a chain and a collider") {
  MdpModel chain = parse_model(kChain);
  const auto& ca = chain.actions[0];
  std::vector<VarRef> given_m{test::post(chain, "M")};
  std::vector<VarRef> none;
  CHECK(brute_force_ci(chain, ca, test::pre(chain, "A"), test::post(chain, "B"), given_m));
  CHECK_FALSE(brute_force_ci(chain, ca, test::pre(chain, "A"), test::post(chain, "B"), none));

  MdpModel collider = parse_model(kCollider);
  const auto& co = collider.actions[0];
  std::vector<VarRef> given_cm{test::post(collider, "M")};
  CHECK(brute_force_ci(collider, co, test::pre(collider, "A"), test::pre(collider, "B"), none));
  CHECK_FALSE(brute_force_ci(collider, co, test::pre(collider, "A"), test::pre(collider, "B"), given_cm));
}

TEST_CASE("conditional joints average over free pre-action variables") {
  MdpModel m = parse_model(kChain);
  const int mv = test::var(m, "M");
  auto given_a = conditional_joint(m, m.actions[0], std::vector<int>{mv}, test::ctx(m, {{"A", "t"}}));
  CHECK(given_a[0] == doctest::Approx(0.75));
  auto free = conditional_joint(m, m.actions[0], std::vector<int>{mv}, Context{});
  CHECK(free[0] == doctest::Approx(0.5));
  auto both = conditional_joint(m, m.actions[0], std::vector<int>{mv, test::var(m, "B")}, test::ctx(m, {{"A", "t"}}));
  CHECK(std::accumulate(both.begin(), both.end(), 0.0) == doctest::Approx(1.0));
  CHECK(both[0] == doctest::Approx(0.75 * 0.875));
}

TEST_CASE("network joints cover both slices and agree with direct marginals") {
  MdpModel m = parse_model(kChain);
  NetworkJoint joint(m, m.actions[0]);
  CHECK(joint.node_count() == 6);
  CHECK(joint.node(test::pre(m, "M")) == 1);
  CHECK(joint.node(test::post(m, "B")) == 5);
  double total = 0;
  for (double p : joint.joint().table()) total += p;
  CHECK(total == doctest::Approx(1.0));
  std::vector<VarRef> given_m{test::post(m, "M")};
  std::vector<VarRef> none;
  CHECK(joint.independent(test::pre(m, "A"), test::post(m, "B"), given_m));
  CHECK_FALSE(joint.independent(test::pre(m, "A"), test::post(m, "B"), none));
  CHECK(joint.independent(test::pre(m, "A"), test::post(m, "M"), given_m));
  CHECK_THROWS_AS(joint.independent(test::pre(m, "A"), test::pre(m, "A"), none), Error);
  // Pre-slice variables are independent of each other under the uniform prior.
  CHECK(joint.independent(test::pre(m, "A"), test::pre(m, "B"), none));
}
