#pragma once

// Decision trees over pre-/post-action variables.
//
// Trees are immutable values backed by shared nodes, so copies are cheap and
// subtrees are shared freely between results. Every operation that builds a
// tree returns it in canonical form: no variable is tested twice on a path and
// no node has children that are all structurally identical.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "dtr/error.hpp"

namespace dtr {

/// A model variable in one of the two time slices (X before the action, X' after).
struct VarRef {
  int var = -1;
  bool post = false;

  friend constexpr auto operator<=>(const VarRef&, const VarRef&) = default;
};

constexpr VarRef pre_ref(int var) { return VarRef{var, false}; }
constexpr VarRef post_ref(int var) { return VarRef{var, true}; }

/// Partial assignment of variables to value indices; at most one value per VarRef.
class Context {
 public:
  using Entry = std::pair<VarRef, int>;

  Context() = default;
  Context(std::initializer_list<Entry> entries) {
    for (const auto& [ref, value] : entries) assign(ref, value);
  }

  std::optional<int> find(VarRef ref) const {
    auto it = lower(ref);
    if (it != entries_.end() && it->first == ref) return it->second;
    return std::nullopt;
  }

  bool contains(VarRef ref) const { return find(ref).has_value(); }

  void assign(VarRef ref, int value) {
    if (value < 0) throw std::invalid_argument("context value index must be non-negative");
    auto it = lower(ref);
    if (it != entries_.end() && it->first == ref) {
      if (it->second != value) throw std::invalid_argument("conflicting assignment in context");
      return;
    }
    entries_.insert(it, Entry{ref, value});
  }

  void erase(VarRef ref) {
    auto it = lower(ref);
    if (it != entries_.end() && it->first == ref) entries_.erase(it);
  }

  Context with(VarRef ref, int value) const {
    Context out = *this;
    out.assign(ref, value);
    return out;
  }

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  friend bool operator==(const Context&, const Context&) = default;

 private:
  std::vector<Entry>::const_iterator lower(VarRef ref) const {
    return std::lower_bound(entries_.begin(), entries_.end(), ref,
                            [](const Entry& e, VarRef r) { return e.first < r; });
  }
  std::vector<Entry>::iterator lower(VarRef ref) {
    return std::lower_bound(entries_.begin(), entries_.end(), ref,
                            [](const Entry& e, VarRef r) { return e.first < r; });
  }

  std::vector<Entry> entries_;
};

template <class L>
class DecisionTree {
 public:
  using payload_type = L;

  static DecisionTree leaf(L payload) {
    auto n = std::make_shared<Node>();
    n->payload.emplace(std::move(payload));
    return DecisionTree(std::move(n));
  }

  /// Children are ordered by the tested variable's declared value order.
  static DecisionTree node(VarRef test, std::vector<DecisionTree> children) {
    if (children.empty()) throw std::invalid_argument("decision tree node needs children");
    auto n = std::make_shared<Node>();
    n->test = test;
    n->children = std::move(children);
    return DecisionTree(std::move(n));
  }

  bool is_leaf() const { return node_->children.empty(); }
  const L& payload() const { return *node_->payload; }
  VarRef test() const { return node_->test; }
  const std::vector<DecisionTree>& children() const { return node_->children; }
  const DecisionTree& child(int value) const { return node_->children.at(static_cast<std::size_t>(value)); }
  int arity() const { return static_cast<int>(node_->children.size()); }

  /// True when both handles point at the same shared node.
  bool shares(const DecisionTree& other) const { return node_ == other.node_; }

 private:
  struct Node {
    std::optional<L> payload;
    VarRef test;
    std::vector<DecisionTree> children;
  };

  explicit DecisionTree(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

// ---------------------------------------------------------------------------
// Basic queries

template <class L>
const L& evaluate(const DecisionTree<L>& tree, const Context& assignment) {
  const DecisionTree<L>* t = &tree;
  while (!t->is_leaf()) {
    auto v = assignment.find(t->test());
    if (!v) {
      throw Error(Errc::missing_assignment,
                  "assignment does not cover tested variable #" + std::to_string(t->test().var) +
                      (t->test().post ? "'" : ""));
    }
    if (*v >= t->arity()) throw Error(Errc::invalid_argument, "assigned value outside the variable's domain");
    t = &t->child(*v);
  }
  return t->payload();
}

template <class L>
bool structurally_equal(const DecisionTree<L>& a, const DecisionTree<L>& b) {
  if (a.shares(b)) return true;
  if (a.is_leaf() != b.is_leaf()) return false;
  if (a.is_leaf()) return a.payload() == b.payload();
  if (a.test() != b.test() || a.arity() != b.arity()) return false;
  for (int i = 0; i < a.arity(); ++i) {
    if (!structurally_equal(a.child(i), b.child(i))) return false;
  }
  return true;
}

/// Builds a node, collapsing it to its first child when every child is identical.
template <class L>
DecisionTree<L> make_node(VarRef test, std::vector<DecisionTree<L>> children) {
  bool uniform = true;
  for (std::size_t i = 1; i < children.size() && uniform; ++i) {
    uniform = structurally_equal(children[0], children[i]);
  }
  if (uniform) return children.front();
  return DecisionTree<L>::node(test, std::move(children));
}

/// Visits every leaf with the context (branch) leading to it.
template <class L, class F>
void for_each_leaf(const DecisionTree<L>& tree, F&& visit) {
  Context path;
  auto rec = [&](auto&& self, const DecisionTree<L>& t) -> void {
    if (t.is_leaf()) {
      visit(static_cast<const Context&>(path), t.payload());
      return;
    }
    for (int i = 0; i < t.arity(); ++i) {
      path.assign(t.test(), i);
      self(self, t.child(i));
      path.erase(t.test());
    }
  };
  rec(rec, tree);
}

template <class L>
std::size_t leaf_count(const DecisionTree<L>& tree) {
  if (tree.is_leaf()) return 1;
  std::size_t n = 0;
  for (const auto& c : tree.children()) n += leaf_count(c);
  return n;
}

template <class L>
std::size_t internal_count(const DecisionTree<L>& tree) {
  if (tree.is_leaf()) return 0;
  std::size_t n = 1;
  for (const auto& c : tree.children()) n += internal_count(c);
  return n;
}

template <class L>
void collect_tested(const DecisionTree<L>& tree, std::set<VarRef>& out) {
  if (tree.is_leaf()) return;
  out.insert(tree.test());
  for (const auto& c : tree.children()) collect_tested(c, out);
}

template <class L>
std::set<VarRef> tested_variables(const DecisionTree<L>& tree) {
  std::set<VarRef> out;
  collect_tested(tree, out);
  return out;
}

/// Domain sizes of tested variables as recorded by node arities.
template <class L>
void collect_arities(const DecisionTree<L>& tree, std::vector<std::pair<VarRef, int>>& out) {
  if (tree.is_leaf()) return;
  auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == tree.test(); });
  if (it == out.end()) out.emplace_back(tree.test(), tree.arity());
  for (const auto& c : tree.children()) collect_arities(c, out);
}

// ---------------------------------------------------------------------------
// Transformations

namespace detail {

template <class L>
DecisionTree<L> reduce_rec(const DecisionTree<L>& t, Context& path) {
  if (t.is_leaf()) return t;
  if (auto v = path.find(t.test())) return reduce_rec(t.child(*v), path);
  std::vector<DecisionTree<L>> kids;
  kids.reserve(t.children().size());
  bool unchanged = true;
  for (int i = 0; i < t.arity(); ++i) {
    path.assign(t.test(), i);
    kids.push_back(reduce_rec(t.child(i), path));
    path.erase(t.test());
    unchanged = unchanged && kids.back().shares(t.child(i));
  }
  if (unchanged) {
    bool uniform = true;
    for (std::size_t i = 1; i < kids.size() && uniform; ++i) uniform = structurally_equal(kids[0], kids[i]);
    if (!uniform) return t;
  }
  return make_node(t.test(), std::move(kids));
}

template <class L>
DecisionTree<L> strip_decided(DecisionTree<L> t, const Context& path) {
  while (!t.is_leaf()) {
    auto v = path.find(t.test());
    if (!v) break;
    t = t.child(*v);
  }
  return t;
}

}  // namespace detail

/// Replaces tests of variables assigned in `context` by the matching child and
/// removes repeated tests; the result agrees with `tree` on every assignment
/// consistent with `context`.
template <class L>
DecisionTree<L> reduce(const DecisionTree<L>& tree, const Context& context = {}) {
  Context path = context;
  return detail::reduce_rec(tree, path);
}

template <class L, class F>
auto map_leaves(const DecisionTree<L>& tree, F&& f) -> DecisionTree<std::decay_t<std::invoke_result_t<F&, const L&>>> {
  using R = std::decay_t<std::invoke_result_t<F&, const L&>>;
  if (tree.is_leaf()) return DecisionTree<R>::leaf(f(tree.payload()));
  std::vector<DecisionTree<R>> kids;
  kids.reserve(tree.children().size());
  for (const auto& c : tree.children()) kids.push_back(map_leaves(c, f));
  return make_node(tree.test(), std::move(kids));
}

/// Replaces each leaf with the tree returned by `f(branch_context, payload)`.
/// The grafted subtree is reduced by the branch context.
template <class L, class F>
auto graft(const DecisionTree<L>& tree, F&& f, const Context& initial = {})
    -> std::invoke_result_t<F&, const Context&, const L&> {
  using Out = std::invoke_result_t<F&, const Context&, const L&>;
  Context path = initial;
  auto rec = [&](auto&& self, const DecisionTree<L>& t) -> Out {
    if (t.is_leaf()) {
      Out sub = f(static_cast<const Context&>(path), t.payload());
      return detail::reduce_rec(sub, path);
    }
    if (auto v = path.find(t.test())) return self(self, t.child(*v));
    std::vector<Out> kids;
    kids.reserve(t.children().size());
    for (int i = 0; i < t.arity(); ++i) {
      path.assign(t.test(), i);
      kids.push_back(self(self, t.child(i)));
      path.erase(t.test());
    }
    return make_node(t.test(), std::move(kids));
  };
  return rec(rec, detail::strip_decided(tree, path));
}

/// Merges trees so the result makes every distinction any input makes. Trees
/// are grafted in order: the first tree's tests come first on every branch.
/// Leaves carry `combine(payloads)` for the inputs' payloads under the branch.
template <class L, class F>
auto merge(const std::vector<DecisionTree<L>>& trees, F&& combine, const Context& initial = {})
    -> DecisionTree<std::decay_t<std::invoke_result_t<F&, const std::vector<L>&>>> {
  using R = std::decay_t<std::invoke_result_t<F&, const std::vector<L>&>>;
  if (trees.empty()) throw std::invalid_argument("merge needs at least one tree");
  Context path = initial;
  std::vector<L> payloads;
  auto rec = [&](auto&& self, std::vector<DecisionTree<L>> ts) -> DecisionTree<R> {
    const DecisionTree<L>* split = nullptr;
    for (auto& t : ts) {
      t = detail::strip_decided(t, path);
      if (!split && !t.is_leaf()) split = &t;
    }
    if (!split) {
      payloads.clear();
      for (const auto& t : ts) payloads.push_back(t.payload());
      return DecisionTree<R>::leaf(combine(static_cast<const std::vector<L>&>(payloads)));
    }
    const VarRef var = split->test();
    const int arity = split->arity();
    std::vector<DecisionTree<R>> kids;
    kids.reserve(static_cast<std::size_t>(arity));
    for (int v = 0; v < arity; ++v) {
      path.assign(var, v);
      kids.push_back(self(self, ts));
      path.erase(var);
    }
    return make_node(var, std::move(kids));
  };
  return rec(rec, trees);
}

/// Two-tree merge with heterogeneous payloads; `a`'s tests come first.
template <class A, class B, class F>
auto apply(const DecisionTree<A>& a, const DecisionTree<B>& b, F&& f, const Context& initial = {})
    -> DecisionTree<std::decay_t<std::invoke_result_t<F&, const A&, const B&>>> {
  using R = std::decay_t<std::invoke_result_t<F&, const A&, const B&>>;
  Context path = initial;
  auto rec = [&](auto&& self, DecisionTree<A> x, DecisionTree<B> y) -> DecisionTree<R> {
    x = detail::strip_decided(x, path);
    y = detail::strip_decided(y, path);
    if (x.is_leaf() && y.is_leaf()) return DecisionTree<R>::leaf(f(x.payload(), y.payload()));
    const VarRef var = x.is_leaf() ? y.test() : x.test();
    const int arity = x.is_leaf() ? y.arity() : x.arity();
    std::vector<DecisionTree<R>> kids;
    kids.reserve(static_cast<std::size_t>(arity));
    for (int v = 0; v < arity; ++v) {
      path.assign(var, v);
      kids.push_back(self(self, x, y));
      path.erase(var);
    }
    return make_node(var, std::move(kids));
  };
  return rec(rec, a, b);
}

// ---------------------------------------------------------------------------
// Semantic comparison

inline double leaf_distance(double a, double b) { return std::abs(a - b); }

/// Distributions: largest elementwise difference; infinite when sizes differ.
inline double leaf_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

/// Largest payload distance over all full assignments of the variables either
/// tree tests. Merging enumerates exactly the cells of that assignment space.
template <class L>
double max_distance(const DecisionTree<L>& a, const DecisionTree<L>& b) {
  auto diff = apply(a, b, [](const L& x, const L& y) { return leaf_distance(x, y); });
  double worst = 0.0;
  for_each_leaf(diff, [&](const Context&, double d) {
    if (std::isnan(d) || d > worst) worst = std::isnan(d) ? std::numeric_limits<double>::infinity() : d;
  });
  return worst;
}

template <class L>
bool semantic_eq(const DecisionTree<L>& a, const DecisionTree<L>& b, double tol) {
  return max_distance(a, b) <= tol;
}

}  // namespace dtr
