#include <algorithm>
#include <random>
#include <set>

#include "dtr/io.hpp"

namespace dtr {

namespace {

// Draws use plain modulo on the raw engine output so documents are
// byte-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  int below(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }
  bool chance(int num, int den) { return below(den) < num; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(below(static_cast<int>(i)))]);
  }

 private:
  std::mt19937_64 engine_;
};

Variable binary(const std::string& name) { return Variable{name, {"t", "f"}}; }

Distribution grid_distribution(Rng& rng) {
  const double p = rng.below(9) / 8.0;
  return {p, 1.0 - p};
}

// Tests `parents` in order; the first branch always continues so every
// parent is tested somewhere, other branches stop early at random.
DecisionTree<Distribution> random_cpt_tree(Rng& rng, const std::vector<VarRef>& parents, std::size_t depth, bool spine) {
  if (depth == parents.size() || (!spine && rng.chance(1, 4))) return DecisionTree<Distribution>::leaf(grid_distribution(rng));
  auto first = random_cpt_tree(rng, parents, depth + 1, spine);
  auto second = random_cpt_tree(rng, parents, depth + 1, false);
  return DecisionTree<Distribution>::node(parents[depth], {std::move(first), std::move(second)});
}

ValueTree random_tree_over(Rng& rng, const std::vector<int>& vars, std::size_t depth, int max_leaf, bool spine) {
  if (depth == vars.size() || (!spine && rng.chance(1, 3))) return ValueTree::leaf(rng.below(max_leaf + 1));
  auto first = random_tree_over(rng, vars, depth + 1, max_leaf, spine);
  auto second = random_tree_over(rng, vars, depth + 1, max_leaf, false);
  return ValueTree::node(pre_ref(vars[depth]), {std::move(first), std::move(second)});
}

Cpt persistence(int x) {
  return Cpt{{pre_ref(x)},
             DecisionTree<Distribution>::node(pre_ref(x), {DecisionTree<Distribution>::leaf({1.0, 0.0}),
                                                           DecisionTree<Distribution>::leaf({0.0, 1.0})})};
}

}  // namespace

MdpModel random_model(const GenParams& p) {
  if (p.n_vars < 1 || p.n_actions < 1 || p.max_parents < 0 || p.max_intra_arcs < 0 || p.reward_vars < 0 ||
      p.reward_vars > p.n_vars) {
    throw Error(Errc::invalid_argument, "generator parameters out of range");
  }
  if (!(p.discount >= 0.0 && p.discount < 1.0)) throw Error(Errc::invalid_argument, "discount must satisfy 0 <= beta < 1");
  Rng rng(p.seed);
  MdpModel m;
  m.discount = p.discount;
  for (int i = 0; i < p.n_vars; ++i) m.variables.push_back(binary("x" + std::to_string(i)));

  for (int a = 0; a < p.n_actions; ++a) {
    ActionNetwork action;
    action.name = "a" + std::to_string(a);
    std::vector<int> perm(static_cast<std::size_t>(p.n_vars));
    for (int i = 0; i < p.n_vars; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(perm);
    std::vector<std::pair<int, int>> candidates;  // (parent, child) respecting perm order
    for (int i = 0; i < p.n_vars; ++i) {
      for (int j = i + 1; j < p.n_vars; ++j) candidates.emplace_back(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    rng.shuffle(candidates);
    const int arcs = std::min<int>(static_cast<int>(candidates.size()), rng.below(p.max_intra_arcs + 1));
    std::vector<std::vector<int>> intra(static_cast<std::size_t>(p.n_vars));
    for (int i = 0; i < arcs; ++i) {
      intra[static_cast<std::size_t>(candidates[static_cast<std::size_t>(i)].second)].push_back(
          candidates[static_cast<std::size_t>(i)].first);
    }

    for (int x = 0; x < p.n_vars; ++x) {
      std::vector<VarRef> parents;
      if (p.max_parents > 0 && rng.chance(4, 5)) parents.push_back(pre_ref(x));
      const int extra = p.max_parents > 0 ? rng.below(p.max_parents + 1) : 0;
      for (int e = 0; e < extra && static_cast<int>(parents.size()) < p.max_parents; ++e) {
        const VarRef r = pre_ref(rng.below(p.n_vars));
        if (std::find(parents.begin(), parents.end(), r) == parents.end()) parents.push_back(r);
      }
      for (int y : intra[static_cast<std::size_t>(x)]) parents.push_back(post_ref(y));
      rng.shuffle(parents);
      Cpt cpt;
      cpt.tree = reduce(random_cpt_tree(rng, parents, 0, true));
      std::sort(parents.begin(), parents.end());
      cpt.parents = std::move(parents);
      action.cpts.push_back(std::move(cpt));
    }
    m.actions.push_back(std::move(action));
  }

  std::vector<int> reward_vars(static_cast<std::size_t>(p.n_vars));
  for (int i = 0; i < p.n_vars; ++i) reward_vars[static_cast<std::size_t>(i)] = i;
  rng.shuffle(reward_vars);
  reward_vars.resize(static_cast<std::size_t>(p.reward_vars));
  m.reward = reduce(random_tree_over(rng, reward_vars, 0, 10, true));
  return m;
}

ValueTree random_value_tree(const MdpModel& model, std::uint64_t seed, int max_depth) {
  Rng rng(seed);
  auto rec = [&](auto&& self, std::set<int>& used, int depth) -> ValueTree {
    if (depth >= max_depth || static_cast<int>(used.size()) == model.variable_count() || (depth > 0 && rng.chance(1, 4))) {
      return ValueTree::leaf(rng.below(21));
    }
    int v = rng.below(model.variable_count());
    while (used.count(v)) v = (v + 1) % model.variable_count();
    used.insert(v);
    std::vector<ValueTree> kids;
    for (int i = 0; i < model.arity(v); ++i) kids.push_back(self(self, used, depth + 1));
    used.erase(v);
    return make_node(pre_ref(v), std::move(kids));
  };
  std::set<int> used;
  return rec(rec, used, 0);
}

MdpModel k_of_n_model(int n, int k, std::uint64_t seed, double discount) {
  if (k < 1 || k > n) throw Error(Errc::invalid_argument, "k-of-n model needs 1 <= k <= n");
  Rng rng(seed);
  MdpModel m;
  m.discount = discount;
  for (int i = 0; i < n; ++i) m.variables.push_back(binary("x" + std::to_string(i)));
  const int n_actions = 3;
  for (int a = 0; a < n_actions; ++a) {
    ActionNetwork action;
    action.name = "a" + std::to_string(a);
    for (int x = 0; x < n; ++x) {
      if (x >= k) {
        action.cpts.push_back(persistence(x));
        continue;
      }
      std::vector<VarRef> parents{pre_ref(x)};
      const int other = rng.below(k);
      if (other != x) parents.push_back(pre_ref(other));
      if (x > 0 && rng.chance(1, 2)) parents.push_back(post_ref(x - 1));
      Cpt cpt;
      cpt.tree = reduce(random_cpt_tree(rng, parents, 0, true));
      std::sort(parents.begin(), parents.end());
      cpt.parents = std::move(parents);
      action.cpts.push_back(std::move(cpt));
    }
    m.actions.push_back(std::move(action));
  }
  std::vector<int> reward_vars;
  for (int i = 0; i < k; ++i) reward_vars.push_back(i);
  m.reward = reduce(random_tree_over(rng, reward_vars, 0, 10, true));
  return m;
}

}  // namespace dtr
