#include "dtr/regression.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace dtr {

namespace {

// Function of pre- and post-action variables, used while a CPT tree is being
// expanded: the product of the CPT factors multiplied in so far.
using Fn = DecisionTree<double>;

void check_value_tree(const MdpModel& model, const ValueTree& value_tree) {
  for (VarRef r : tested_variables(value_tree)) {
    if (r.var < 0 || r.var >= model.variable_count()) {
      throw Error(Errc::unknown_variable, "value tree tests undeclared variable #" + std::to_string(r.var));
    }
    if (r.post) throw Error(Errc::invalid_argument, "value tree tests post-action variable " + model.ref_name(r));
  }
}

std::vector<Context> contexts_leading_to(const ValueTree& tree, int x) {
  std::vector<Context> out;
  Context path;
  auto rec = [&](auto&& self, const ValueTree& t) -> void {
    if (t.is_leaf()) return;
    if (t.test().var == x) {
      out.push_back(path);
      return;
    }
    for (int i = 0; i < t.arity(); ++i) {
      path.assign(t.test(), i);
      self(self, t.child(i));
      path.erase(t.test());
    }
  };
  rec(rec, tree);
  return out;
}

// Probability of the part of `c` whose variables are recorded in `fs`.
double recorded_probability(const FactorSet& fs, const Context& c) {
  double p = 1.0;
  thread_local std::vector<std::pair<int, int>> fixed;
  for (const auto& f : fs.factors()) {
    fixed.clear();
    for (const auto& [ref, value] : c) {
      if (f.contains(ref.var)) fixed.emplace_back(ref.var, value);
    }
    if (fixed.empty()) continue;
    p *= f.probability(fixed);
    if (p == 0.0) return 0.0;
  }
  return p;
}

bool qualifies(const FactorSet& label, const std::vector<Context>& contexts) {
  return std::any_of(contexts.begin(), contexts.end(),
                     [&](const Context& c) { return recorded_probability(label, c) > 0.0; });
}

// Flags the variables tested on some branch of the value tree whose recorded
// part has positive probability. Factors are disjoint, so assigning a variable
// only changes the marginal of the factor recording it, and extending a
// context never raises its probability: a zero prefix prunes the subtree.
// The walk stops once all `value_vars` distinct variables are flagged.
std::vector<char> positive_branch_vars(const ValueTree& value_tree, std::size_t value_vars, const FactorSet& label,
                                       int n) {
  std::vector<char> out(static_cast<std::size_t>(n), 0);
  std::size_t flagged = 0;
  thread_local std::vector<int> path;
  thread_local std::vector<std::vector<std::pair<int, int>>> fixed;
  path.clear();
  if (fixed.size() < label.factors().size()) fixed.resize(label.factors().size());
  for (auto& entries : fixed) entries.clear();
  auto rec = [&](auto&& self, const ValueTree& t) -> void {
    if (flagged == value_vars) return;
    if (t.is_leaf()) {
      for (int var : path) {
        char& seen = out[static_cast<std::size_t>(var)];
        if (!seen) {
          seen = 1;
          ++flagged;
        }
      }
      return;
    }
    const int var = t.test().var;
    const int fi = label.factor_of(var);
    const auto f = static_cast<std::size_t>(fi);
    path.push_back(var);
    for (int i = 0; i < t.arity(); ++i) {
      bool positive = true;
      if (fi >= 0) {
        fixed[f].emplace_back(var, i);
        positive = label.factors()[f].probability(fixed[f]) > 0.0;
      }
      if (positive) self(self, t.child(i));
      if (fi >= 0) fixed[f].pop_back();
    }
    path.pop_back();
  };
  rec(rec, value_tree);
  return out;
}

bool needed_impl(const ActionNetwork& action, int candidate, const FactorSet& label, const std::vector<char>& positive,
                 const std::vector<VarRef>& evidence) {
  if (positive[static_cast<std::size_t>(candidate)]) return true;
  for (int t = 0; t < static_cast<int>(positive.size()); ++t) {
    if (positive[static_cast<std::size_t>(t)] && !label.records(t) &&
        !blocked(action, post_ref(candidate), post_ref(t), evidence)) {
      return true;
    }
  }
  return false;
}

std::vector<VarRef> all_pre(int n) {
  std::vector<VarRef> out;
  for (int v = 0; v < n; ++v) out.push_back(pre_ref(v));
  return out;
}

Fn cpt_fn(const ActionNetwork& action, int y, const Context& ctx) {
  const auto& cpt = action.cpts.at(static_cast<std::size_t>(y)).tree;
  return graft(
      reduce(cpt, ctx),
      [&](const Context&, const Distribution& d) {
        std::vector<Fn> kids;
        kids.reserve(d.size());
        for (double p : d) kids.push_back(Fn::leaf(p));
        return make_node(post_ref(y), std::move(kids));
      },
      ctx);
}

// Pointwise product; g is grafted below f's nonzero leaves only.
Fn product(const Fn& f, const Fn& g, const Context& ctx) {
  return graft(
      f,
      [&](const Context& path, double v) -> Fn {
        if (v == 0.0) return Fn::leaf(0.0);
        return map_leaves(reduce(g, path), [v](double w) { return v * w; });
      },
      ctx);
}

// Replaces each Y'-node with Tree(Y', a) and, at every CPT leaf, the
// probability-weighted merge of the node's children with positive weight.
Fn sum_out(const Fn& f, int y, const ActionNetwork& action, Context& path) {
  if (f.is_leaf()) return f;
  if (auto v = path.find(f.test())) return sum_out(f.child(*v), y, action, path);
  if (f.test() == post_ref(y)) {
    const auto& cpt = action.cpts.at(static_cast<std::size_t>(y)).tree;
    return graft(
        reduce(cpt, path),
        [&](const Context& p2, const Distribution& d) -> Fn {
          std::vector<Fn> parts;
          std::vector<double> weights;
          for (std::size_t v = 0; v < d.size(); ++v) {
            if (d[v] > 0.0) {
              parts.push_back(f.child(static_cast<int>(v)));
              weights.push_back(d[v]);
            }
          }
          if (parts.empty()) return Fn::leaf(0.0);
          return merge(
              parts,
              [&](const std::vector<double>& xs) {
                double s = 0.0;
                for (std::size_t i = 0; i < xs.size(); ++i) s += weights[i] * xs[i];
                return s;
              },
              p2);
        },
        path);
  }
  std::vector<Fn> kids;
  kids.reserve(f.children().size());
  for (int i = 0; i < f.arity(); ++i) {
    path.assign(f.test(), i);
    kids.push_back(sum_out(f.child(i), y, action, path));
    path.erase(f.test());
  }
  return make_node(f.test(), std::move(kids));
}

// Zeroes subtrees under recorded-variable values that are impossible given
// the recorded joint and the values already fixed on the path.
Fn prune(const Fn& f, const FactorSet& label, Context& path) {
  if (f.is_leaf()) return f;
  const VarRef t = f.test();
  const int fi = t.post ? label.factor_of(t.var) : -1;
  std::vector<Fn> kids;
  kids.reserve(f.children().size());
  std::vector<std::pair<int, int>> fixed;
  for (int i = 0; i < f.arity(); ++i) {
    path.assign(t, i);
    bool impossible = false;
    if (fi >= 0) {
      const Factor& factor = label.factors()[static_cast<std::size_t>(fi)];
      fixed.clear();
      for (const auto& [ref, value] : path) {
        if (ref.post && factor.contains(ref.var)) fixed.emplace_back(ref.var, value);
      }
      impossible = factor.probability(fixed) == 0.0;
    }
    kids.push_back(impossible ? Fn::leaf(0.0) : prune(f.child(i), label, path));
    path.erase(t);
  }
  return make_node(t, std::move(kids));
}

std::optional<VarRef> first_pre_test(const Fn& f) {
  if (f.is_leaf()) return std::nullopt;
  if (!f.test().post) return f.test();
  for (const auto& c : f.children()) {
    if (auto r = first_pre_test(c)) return r;
  }
  return std::nullopt;
}

std::set<int> pending_vars(const Fn& f, const std::set<int>& resolved, const FactorSet& label) {
  std::set<int> out;
  for (VarRef r : tested_variables(f)) {
    if (r.post && !resolved.count(r.var) && !label.records(r.var)) out.insert(r.var);
  }
  return out;
}

struct SimplifyState {
  const MdpModel& model;
  const ActionNetwork& action;
  const ValueTree& value_tree;
  int x;
  std::size_t value_vars;
  const FactorSet& label;
  std::vector<int> kept;
  const RegressionOptions& options;
};

// Sums out of `fs`'s cluster holding x the variables that are neither on a
// positive branch of the value tree nor d-connected to an unrecorded one.
FactorSet cleanup(const SimplifyState& st, FactorSet fs) {
  const int n = st.model.variable_count();
  const auto positive = positive_branch_vars(st.value_tree, st.value_vars, fs, n);
  bool changed = true;
  while (changed) {
    changed = false;
    const int fi = fs.factor_of(st.x);
    const Factor& cluster = fs.factors()[static_cast<std::size_t>(fi)];
    for (int y : cluster.scope()) {
      if (y == st.x) continue;
      std::vector<VarRef> evidence = all_pre(n);
      for (int r : fs.recorded()) {
        if (r != y) evidence.push_back(post_ref(r));
      }
      if (needed_impl(st.action, y, fs, positive, evidence)) continue;
      std::vector<Factor> factors = fs.factors();
      factors[static_cast<std::size_t>(fi)] = cluster.sum_out(y);
      fs = FactorSet(std::move(factors));
      changed = true;
      break;
    }
  }
  return fs;
}

FactorSet region_label(const SimplifyState& st, const Fn& f) {
  std::set<int> absorbed;
  for (VarRef r : tested_variables(f)) {
    if (!r.post) throw Error(Errc::internal, "pre-action test left in a region");
    const int fi = st.label.factor_of(r.var);
    if (fi >= 0) absorbed.insert(fi);
  }
  std::vector<int> scope{st.x};
  scope.insert(scope.end(), st.kept.begin(), st.kept.end());
  for (int fi : absorbed) {
    const auto& s = st.label.factors()[static_cast<std::size_t>(fi)].scope();
    scope.insert(scope.end(), s.begin(), s.end());
  }
  std::sort(scope.begin(), scope.end());
  std::vector<int> arity;
  std::size_t rows = 1;
  for (int v : scope) {
    arity.push_back(st.model.arity(v));
    rows *= static_cast<std::size_t>(arity.back());
  }
  Factor shape(scope, arity, std::vector<double>(rows, 0.0));
  std::vector<double> table(rows, 0.0);
  double total = 0.0;
  std::vector<int> sub;
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = shape.decode(i);
    Context assignment;
    for (std::size_t j = 0; j < scope.size(); ++j) assignment.assign(post_ref(scope[j]), row[j]);
    double p = evaluate(f, assignment);
    for (int fi : absorbed) {
      if (p == 0.0) break;
      const Factor& factor = st.label.factors()[static_cast<std::size_t>(fi)];
      sub.clear();
      for (int v : factor.scope()) sub.push_back(*assignment.find(post_ref(v)));
      p *= factor.at(sub);
    }
    table[i] = p;
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(Errc::internal, "local joint for " + st.model.ref_name(post_ref(st.x)) + " sums to " + std::to_string(total));
  }
  std::vector<Factor> factors;
  for (std::size_t i = 0; i < st.label.factors().size(); ++i) {
    if (!absorbed.count(static_cast<int>(i))) factors.push_back(st.label.factors()[i]);
  }
  factors.emplace_back(scope, arity, std::move(table));
  FactorSet fs(std::move(factors));
  return cleanup(st, std::move(fs));
}

// Splits on pre-action tests until each region depends on post-action variables only.
PartialQTree hoist(const SimplifyState& st, const Fn& f, Context& path) {
  const Fn g = reduce(f, path);
  const auto var = first_pre_test(g);
  if (!var) return PartialQTree::leaf(region_label(st, g));
  std::vector<PartialQTree> kids;
  const int arity = st.model.arity(var->var);
  kids.reserve(static_cast<std::size_t>(arity));
  for (int v = 0; v < arity; ++v) {
    path.assign(*var, v);
    kids.push_back(hoist(st, g, path));
    path.erase(*var);
  }
  return make_node(*var, std::move(kids));
}

std::vector<int> elimination_rank(const ActionNetwork& action, const RegressionOptions& options) {
  const int n = action.variable_count();
  const std::vector<int> order = options.elimination_order.empty() ? post_action_ordering(action) : options.elimination_order;
  std::vector<int> rank(static_cast<std::size_t>(n), std::numeric_limits<int>::max());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const int v = order[i];
    if (v < 0 || v >= n) throw Error(Errc::unknown_variable, "elimination order names variable #" + std::to_string(v));
    rank[static_cast<std::size_t>(v)] = std::min(rank[static_cast<std::size_t>(v)], static_cast<int>(i));
  }
  return rank;
}

PartialQTree simplify_impl(const MdpModel& model, const ActionNetwork& action, const ValueTree& value_tree,
                           std::size_t value_vars, int x, const FactorSet& label, const Context& k,
                           const RegressionOptions& options, const std::vector<int>& rank) {
  const int n = model.variable_count();
  for (const auto& [ref, value] : k) {
    if (ref.post) throw Error(Errc::invalid_argument, "leaf context may only assign pre-action variables");
  }
  SimplifyState st{model, action, value_tree, x, value_vars, label, {}, options};
  Context path = k;
  Fn f = prune(cpt_fn(action, x, k), label, path);
  std::set<int> resolved{x};

  std::vector<VarRef> evidence{post_ref(x)};
  if (options.condition_on_full_state) {
    for (VarRef r : all_pre(n)) evidence.push_back(r);
  } else {
    for (const auto& [ref, value] : k) evidence.push_back(ref);
  }
  const auto positive = positive_branch_vars(value_tree, value_vars, label, n);

  for (;;) {
    const auto pending = pending_vars(f, resolved, label);
    if (pending.empty()) break;
    const int y = *std::min_element(pending.begin(), pending.end(), [&](int a, int b) {
      const auto ra = rank[static_cast<std::size_t>(a)];
      const auto rb = rank[static_cast<std::size_t>(b)];
      return ra != rb ? ra < rb : a < b;
    });
    if (options.check_ordering) {
      for (int z : pending) {
        if (z != y && is_intra_descendant(action, y, z)) {
          throw Error(Errc::ordering_violation, "replacing " + model.ref_name(post_ref(y)) + " before its descendant " +
                                                    model.ref_name(post_ref(z)));
        }
      }
    }
    if (needed_impl(action, y, label, positive, evidence)) {
      f = product(f, cpt_fn(action, y, k), k);
      resolved.insert(y);
      st.kept.push_back(y);
    } else {
      path = k;
      f = sum_out(f, y, action, path);
    }
    path = k;
    f = prune(f, label, path);
  }

  path = k;
  return hoist(st, f, path);
}

}  // namespace

std::vector<int> value_ordering(const ValueTree& value_tree) {
  std::vector<int> order;
  auto rec = [&](auto&& self, const ValueTree& t) -> void {
    if (t.is_leaf()) return;
    if (std::find(order.begin(), order.end(), t.test().var) == order.end()) order.push_back(t.test().var);
    for (const auto& c : t.children()) self(self, c);
  };
  rec(rec, value_tree);
  return order;
}

PartialQTree regress_uncorrelated(const MdpModel& model, ActionId action_id, const ValueTree& value_tree) {
  const ActionNetwork& action = model.action(action_id);
  if (action.has_intra_arcs()) {
    throw Error(Errc::correlated_action, "action '" + action.name + "' has intra-slice arcs");
  }
  check_value_tree(model, value_tree);
  PartialQTree pq = PartialQTree::leaf(FactorSet{});
  const auto order = value_ordering(value_tree);
  for (int x : order) {
    const auto contexts = contexts_leading_to(value_tree, x);
    const auto& cpt = action.cpts.at(static_cast<std::size_t>(x)).tree;
    pq = graft(pq, [&](const Context& k, const FactorSet& label) -> PartialQTree {
      if (label.records(x) || !qualifies(label, contexts)) return PartialQTree::leaf(label);
      return graft(
          reduce(cpt, k),
          [&](const Context&, const Distribution& d) { return PartialQTree::leaf(label.with(Factor::single(x, d))); },
          k);
    });
  }
  return pq;
}

PartialQTree simplify(const MdpModel& model, ActionId action_id, const ValueTree& value_tree, int x,
                      const FactorSet& label, const Context& k, const RegressionOptions& options) {
  const ActionNetwork& action = model.action(action_id);
  check_value_tree(model, value_tree);
  if (x < 0 || x >= model.variable_count()) throw Error(Errc::unknown_variable, "no variable #" + std::to_string(x));
  if (label.records(x)) throw Error(Errc::invalid_argument, model.ref_name(post_ref(x)) + " is already recorded");
  return simplify_impl(model, action, value_tree, value_ordering(value_tree).size(), x, label, k, options,
                       elimination_rank(action, options));
}

PartialQTree regress(const MdpModel& model, ActionId action_id, const ValueTree& value_tree,
                     const RegressionOptions& options) {
  const ActionNetwork& action = model.action(action_id);
  check_value_tree(model, value_tree);
  const auto rank = elimination_rank(action, options);
  PartialQTree pq = PartialQTree::leaf(FactorSet{});
  const auto order = value_ordering(value_tree);
  for (int x : order) {
    const auto contexts = contexts_leading_to(value_tree, x);
    pq = graft(pq, [&](const Context& k, const FactorSet& label) -> PartialQTree {
      if (label.records(x) || !qualifies(label, contexts)) return PartialQTree::leaf(label);
      return simplify_impl(model, action, value_tree, order.size(), x, label, k, options, rank);
    });
  }
  return pq;
}

FactorSet eliminate(const FactorSet& fset, const Factor& child_given_target, int child, int target, bool keep_joint) {
  const int ti = fset.factor_of(target);
  if (ti < 0) throw Error(Errc::scope_error, "target variable is not recorded at this leaf");
  if (fset.records(child)) throw Error(Errc::scope_error, "child variable is already recorded at this leaf");
  if (child_given_target.scope().size() != 2 || !child_given_target.contains(child) ||
      !child_given_target.contains(target)) {
    throw Error(Errc::scope_error, "conditional must have scope {child, target}");
  }
  const Factor& tf = fset.factors()[static_cast<std::size_t>(ti)];
  const int child_arity = child_given_target.arity_of(child);

  std::vector<int> scope = tf.scope();
  scope.push_back(child);
  std::sort(scope.begin(), scope.end());
  std::vector<int> arity;
  std::size_t rows = 1;
  for (int v : scope) {
    arity.push_back(v == child ? child_arity : tf.arity_of(v));
    rows *= static_cast<std::size_t>(arity.back());
  }
  Factor shape(scope, arity, std::vector<double>(rows, 0.0));
  std::vector<double> table(rows);
  const int cpos = child_given_target.position(child);
  const int tpos = child_given_target.position(target);
  std::vector<int> sub(tf.scope().size());
  std::vector<int> pair(2);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = shape.decode(i);
    for (std::size_t j = 0; j < sub.size(); ++j) sub[j] = row[static_cast<std::size_t>(shape.position(tf.scope()[j]))];
    pair[static_cast<std::size_t>(cpos)] = row[static_cast<std::size_t>(shape.position(child))];
    pair[static_cast<std::size_t>(tpos)] = row[static_cast<std::size_t>(shape.position(target))];
    table[i] = tf.at(sub) * child_given_target.at(pair);
  }
  Factor joint(scope, arity, std::move(table));
  if (!keep_joint) joint = joint.sum_out(target);
  const int idx[] = {ti};
  return fset.without(idx).with(std::move(joint));
}

bool needed(const NeedQuery& q) {
  const ActionNetwork& action = q.model.action(q.action);
  const int n = q.model.variable_count();
  if (q.candidate < 0 || q.candidate >= n) throw Error(Errc::unknown_variable, "no candidate variable #" + std::to_string(q.candidate));
  std::vector<VarRef> evidence;
  if (q.regressed >= 0) evidence.push_back(post_ref(q.regressed));
  for (const auto& [ref, value] : q.k) evidence.push_back(ref);
  for (const auto& [ref, value] : q.k_prime) evidence.push_back(ref);
  for (int v : q.extra_evidence) evidence.push_back(post_ref(v));
  if (q.condition_on_full_state) {
    for (VarRef r : all_pre(n)) evidence.push_back(r);
  }
  return needed_impl(action, q.candidate, q.label, positive_branch_vars(q.value_tree, value_ordering(q.value_tree).size(), q.label, n), evidence);
}

double branch_probability(const FactorSet& fset, const Context& c) {
  const double p = recorded_probability(fset, c);
  if (p == 0.0) return 0.0;
  for (const auto& [ref, value] : c) {
    if (!fset.records(ref.var)) {
      throw Error(Errc::scope_error, "branch variable #" + std::to_string(ref.var) + " is not recorded at this leaf");
    }
  }
  return p;
}

namespace {

// Calls visit(leaf, p) for every value-tree branch whose probability p under
// `fset` is positive, and skip(subtree) for each subtree pruned at zero.
template <class Visit, class Skip>
void visit_branches(const FactorSet& fset, const ValueTree& value_tree, Visit&& visit, Skip&& skip) {
  // Per factor: the path assignments to its scope, and its marginal over them.
  // The branch probability is the product of the marginals.
  thread_local std::vector<std::vector<std::pair<int, int>>> fixed;
  thread_local std::vector<double> marginal;
  const std::size_t nf = fset.factors().size();
  if (fixed.size() < nf) fixed.resize(nf);
  for (std::size_t i = 0; i < nf; ++i) fixed[i].clear();
  marginal.assign(nf, 1.0);
  int unrecorded = -1;  // shallowest depth testing an unrecorded variable
  int depth = 0;
  auto rec = [&](auto&& self, const ValueTree& t) -> void {
    if (t.is_leaf()) {
      double p = 1.0;
      for (double m : marginal) p *= m;
      if (unrecorded >= 0) {
        throw Error(Errc::scope_error, "branch variable is not recorded at this leaf");
      }
      visit(t, p);
      return;
    }
    const int var = t.test().var;
    const int fi = fset.factor_of(var);
    const auto f = static_cast<std::size_t>(fi);
    const double saved = fi >= 0 ? marginal[f] : 1.0;
    if (fi < 0 && unrecorded < 0) unrecorded = depth;
    ++depth;
    for (int i = 0; i < t.arity(); ++i) {
      if (fi >= 0) {
        fixed[f].emplace_back(var, i);
        marginal[f] = fset.factors()[f].probability(fixed[f]);
      }
      if (fi < 0 || marginal[f] > 0.0) {
        self(self, t.child(i));
      } else {
        skip(t.child(i));
      }
      if (fi >= 0) fixed[f].pop_back();
    }
    --depth;
    if (unrecorded == depth) unrecorded = -1;
    if (fi >= 0) marginal[f] = saved;
  };
  rec(rec, value_tree);
}

}  // namespace

std::vector<std::pair<std::size_t, double>> branch_weights(const FactorSet& fset, const ValueTree& value_tree) {
  std::vector<std::pair<std::size_t, double>> out;
  std::size_t index = 0;
  visit_branches(
      fset, value_tree, [&](const ValueTree&, double p) { out.emplace_back(index++, p); },
      [&](const ValueTree& t) { index += leaf_count(t); });
  return out;
}

QTree finalize(const PartialQTree& pq, const ValueTree& value_tree, const DecisionTree<double>& reward, double discount) {
  const auto future = map_leaves(pq, [&](const FactorSet& label) {
    double sum = 0.0;
    visit_branches(
        label, value_tree, [&](const ValueTree& leaf, double p) { sum += p * leaf.payload(); }, [](const ValueTree&) {});
    return discount * sum;
  });
  return apply(reward, future, [](double r, double f) { return r + f; });
}

QTree q_tree(const MdpModel& model, ActionId action, const ValueTree& value_tree, const RegressionOptions& options) {
  return finalize(regress(model, action, value_tree, options), value_tree, model.reward, model.discount);
}

}  // namespace dtr
