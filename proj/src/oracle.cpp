#include "dtr/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace dtr {

namespace {

// Leaf lookup written against the raw node layout rather than the tree
// library's evaluate, so the oracle does not share code with the solver.
const Distribution& cpt_leaf(const DecisionTree<Distribution>& tree, std::span<const int> pre, std::span<const int> post) {
  const DecisionTree<Distribution>* t = &tree;
  while (!t->is_leaf()) {
    const VarRef v = t->test();
    const int value = v.post ? post[static_cast<std::size_t>(v.var)] : pre[static_cast<std::size_t>(v.var)];
    if (value < 0) throw Error(Errc::internal, "oracle reached an unassigned post-action parent");
    t = &t->children()[static_cast<std::size_t>(value)];
  }
  return t->payload();
}

double tree_value(const ValueTree& tree, std::span<const int> state) {
  const ValueTree* t = &tree;
  while (!t->is_leaf()) {
    t = &t->children()[static_cast<std::size_t>(state[static_cast<std::size_t>(t->test().var)])];
  }
  return t->payload();
}

std::vector<int> topological_order(const ActionNetwork& action) {
  const int n = action.variable_count();
  std::vector<int> order;
  std::vector<int> state(static_cast<std::size_t>(n), 0);  // 0 new, 1 on stack, 2 done
  auto visit = [&](auto&& self, int v) -> void {
    auto& st = state[static_cast<std::size_t>(v)];
    if (st == 2) return;
    if (st == 1) throw Error(Errc::cyclic_network, "intra-slice cycle");
    st = 1;
    for (VarRef p : action.cpts[static_cast<std::size_t>(v)].parents) {
      if (p.post) self(self, p.var);
    }
    st = 2;
    order.push_back(v);
  };
  for (int v = 0; v < n; ++v) visit(visit, v);
  return order;
}

double flat_threshold(double epsilon, double discount, double divisor) {
  if (discount <= 0.0) return std::numeric_limits<double>::infinity();
  return epsilon * (1.0 - discount) / (divisor * discount);
}

}  // namespace

StateSpace::StateSpace(const MdpModel& model, std::size_t limit) {
  for (const auto& v : model.variables) {
    arity_.push_back(v.arity());
    if (size_ > limit / static_cast<std::size_t>(v.arity())) {
      throw Error(Errc::state_space_too_large, "state space exceeds " + std::to_string(limit) + " states");
    }
    size_ *= static_cast<std::size_t>(v.arity());
  }
  if (size_ > limit) throw Error(Errc::state_space_too_large, "state space exceeds " + std::to_string(limit) + " states");
}

std::vector<int> StateSpace::decode(std::size_t index) const {
  std::vector<int> values(arity_.size());
  for (std::size_t i = arity_.size(); i-- > 0;) {
    const auto a = static_cast<std::size_t>(arity_[i]);
    values[i] = static_cast<int>(index % a);
    index /= a;
  }
  return values;
}

std::size_t StateSpace::encode(std::span<const int> values) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < arity_.size(); ++i) {
    index = index * static_cast<std::size_t>(arity_[i]) + static_cast<std::size_t>(values[i]);
  }
  return index;
}

Context StateSpace::context(std::size_t index) const {
  Context c;
  const auto values = decode(index);
  for (std::size_t i = 0; i < values.size(); ++i) c.assign(pre_ref(static_cast<int>(i)), values[i]);
  return c;
}

FlatDistribution flat_transition(const MdpModel& model, const ActionNetwork& action, const StateSpace& space,
                                 std::size_t state, std::span<const int> order) {
  const int n = model.variable_count();
  const std::vector<int> topo = order.empty() ? topological_order(action) : std::vector<int>(order.begin(), order.end());
  if (static_cast<int>(topo.size()) != n) throw Error(Errc::invalid_argument, "order must list every variable once");
  const auto pre = space.decode(state);
  std::vector<int> post(static_cast<std::size_t>(n), -1);
  std::map<std::size_t, double> acc;
  auto rec = [&](auto&& self, std::size_t depth, double p) -> void {
    if (depth == topo.size()) {
      acc[space.encode(post)] += p;
      return;
    }
    const int v = topo[depth];
    const Distribution& d = cpt_leaf(action.cpts[static_cast<std::size_t>(v)].tree, pre, post);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] <= 0.0) continue;
      post[static_cast<std::size_t>(v)] = static_cast<int>(i);
      self(self, depth + 1, p * d[i]);
    }
    post[static_cast<std::size_t>(v)] = -1;
  };
  rec(rec, 0, 1.0);
  return FlatDistribution(acc.begin(), acc.end());
}

FlatModel::FlatModel(const MdpModel& model, std::size_t limit) : model_(&model), space_(model, limit) {
  const std::size_t na = static_cast<std::size_t>(model.action_count());
  reward_.resize(space_.size());
  succ_.resize(space_.size() * na);
  for (std::size_t s = 0; s < space_.size(); ++s) {
    reward_[s] = tree_value(model.reward, space_.decode(s));
    for (std::size_t a = 0; a < na; ++a) succ_[s * na + a] = flat_transition(model, model.actions[a], space_, s);
  }
}

const FlatDistribution& FlatModel::successors(std::size_t s, int a) const {
  return succ_.at(s * static_cast<std::size_t>(model_->action_count()) + static_cast<std::size_t>(a));
}

double FlatModel::q(std::size_t s, int a, std::span<const double> value) const {
  double future = 0.0;
  for (const auto& [t, p] : successors(s, a)) future += p * value[t];
  return reward_[s] + model_->discount * future;
}

FlatSolution flat_value_iteration(const FlatModel& flat, double epsilon, std::size_t max_iters) {
  const std::size_t n = flat.states();
  const int na = flat.model().action_count();
  if (na == 0) throw Error(Errc::invalid_argument, "model has no actions");
  const double threshold = flat_threshold(epsilon, flat.model().discount, 2.0);
  FlatSolution out;
  out.value.resize(n);
  for (std::size_t s = 0; s < n; ++s) out.value[s] = flat.reward(s);
  out.policy.assign(n, 0);
  out.q.assign(n * static_cast<std::size_t>(na), 0.0);
  std::vector<double> next(n);
  while (out.iterations < max_iters) {
    double residual = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int a = 0; a < na; ++a) {
        const double q = flat.q(s, a, out.value);
        out.q[s * static_cast<std::size_t>(na) + static_cast<std::size_t>(a)] = q;
        if (q > best) {
          best = q;
          arg = a;
        }
      }
      next[s] = best;
      out.policy[s] = arg;
      residual = std::max(residual, std::abs(best - out.value[s]));
    }
    out.value.swap(next);
    out.residuals.push_back(residual);
    ++out.iterations;
    if (residual <= threshold) {
      out.converged = true;
      break;
    }
  }
  return out;
}

FlatSolution flat_value_iteration(const MdpModel& model, double epsilon, std::size_t max_iters) {
  return flat_value_iteration(FlatModel(model), epsilon, max_iters);
}

std::vector<double> flat_policy_value(const FlatModel& flat, std::span<const int> policy, double epsilon,
                                      std::size_t max_iters) {
  const std::size_t n = flat.states();
  if (policy.size() != n) throw Error(Errc::invalid_argument, "policy must name one action per state");
  for (int a : policy) {
    if (a < 0 || a >= flat.model().action_count()) throw Error(Errc::unknown_action, "policy names an undeclared action");
  }
  const double threshold = flat_threshold(epsilon, flat.model().discount, 1.0);
  std::vector<double> value(n);
  for (std::size_t s = 0; s < n; ++s) value[s] = flat.reward(s);
  std::vector<double> next(n);
  for (std::size_t it = 0; it < max_iters; ++it) {
    double change = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      next[s] = flat.q(s, policy[s], value);
      change = std::max(change, std::abs(next[s] - value[s]));
    }
    value.swap(next);
    if (change <= threshold) break;
  }
  return value;
}

std::vector<double> flat_q(const FlatModel& flat, int action, std::span<const double> value) {
  std::vector<double> out(flat.states());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = flat.q(s, action, value);
  return out;
}

std::vector<double> expand(const StateSpace& space, const ValueTree& tree) {
  std::vector<double> out(space.size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = tree_value(tree, space.decode(s));
  return out;
}

std::vector<int> expand(const StateSpace& space, const PolicyTree& tree) {
  std::vector<int> out(space.size());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const auto state = space.decode(s);
    const PolicyTree* t = &tree;
    while (!t->is_leaf()) t = &t->children()[static_cast<std::size_t>(state[static_cast<std::size_t>(t->test().var)])];
    out[s] = t->payload().index;
  }
  return out;
}

ComparisonReport compare(const ValueTree& value, const PolicyTree& policy, const FlatModel& flat,
                         const FlatSolution& reference, double tol) {
  ComparisonReport r;
  r.states = flat.states();
  const auto v = expand(flat.space(), value);
  const auto pi = expand(flat.space(), policy);
  const auto na = static_cast<std::size_t>(flat.model().action_count());
  r.policy_agrees.assign(r.states, false);
  for (std::size_t s = 0; s < r.states; ++s) {
    const double gap = std::abs(v[s] - reference.value[s]);
    if (gap > r.max_gap || std::isnan(gap)) {
      r.max_gap = std::isnan(gap) ? std::numeric_limits<double>::infinity() : gap;
      r.worst_state = s;
    }
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < na; ++a) best = std::max(best, reference.q[s * na + a]);
    const int chosen = pi[s];
    const bool ok = chosen >= 0 && static_cast<std::size_t>(chosen) < na &&
                    reference.q[s * na + static_cast<std::size_t>(chosen)] >= best - tol;
    r.policy_agrees[s] = ok;
    if (!ok) ++r.policy_disagreements;
  }
  r.passed = r.max_gap <= tol && r.policy_disagreements == 0;
  return r;
}

ComparisonReport compare(const ValueTree& value, const PolicyTree& policy, const MdpModel& model, double epsilon,
                         double tol, std::size_t max_iters) {
  const FlatModel flat(model);
  return compare(value, policy, flat, flat_value_iteration(flat, epsilon, max_iters), tol);
}

std::vector<double> conditional_joint(const MdpModel& model, const ActionNetwork& action, std::span<const int> post_vars,
                                      const Context& pre_context) {
  const StateSpace space(model);
  std::size_t rows = 1;
  for (int v : post_vars) rows *= static_cast<std::size_t>(model.arity(v));
  std::vector<double> out(rows, 0.0);
  std::size_t matches = 0;
  for (std::size_t s = 0; s < space.size(); ++s) {
    const auto pre = space.decode(s);
    bool ok = true;
    for (const auto& [ref, value] : pre_context) {
      if (ref.post) throw Error(Errc::invalid_argument, "pre-action context assigns a post-action variable");
      ok = ok && pre[static_cast<std::size_t>(ref.var)] == value;
    }
    if (!ok) continue;
    ++matches;
    for (const auto& [t, p] : flat_transition(model, action, space, s)) {
      const auto post = space.decode(t);
      std::size_t row = 0;
      for (int v : post_vars) row = row * static_cast<std::size_t>(model.arity(v)) + static_cast<std::size_t>(post[static_cast<std::size_t>(v)]);
      out[row] += p;
    }
  }
  if (matches == 0) throw Error(Errc::invalid_argument, "pre-action context matches no state");
  for (double& p : out) p /= static_cast<double>(matches);
  return out;
}

NetworkJoint::NetworkJoint(const MdpModel& model, const ActionNetwork& action) : n_(model.variable_count()) {
  if (2 * n_ > 12) throw Error(Errc::state_space_too_large, "network joint limited to 12 nodes");
  const StateSpace space(model);
  const double prior = 1.0 / static_cast<double>(space.size());
  std::vector<int> scope(static_cast<std::size_t>(2 * n_));
  std::vector<int> arity(scope.size());
  for (int i = 0; i < 2 * n_; ++i) {
    scope[static_cast<std::size_t>(i)] = i;
    arity[static_cast<std::size_t>(i)] = model.arity(i % n_);
  }
  // Pre-action nodes come first, so row = pre state * |S| + post state.
  std::vector<double> table(space.size() * space.size(), 0.0);
  for (std::size_t s = 0; s < space.size(); ++s) {
    for (const auto& [t, p] : flat_transition(model, action, space, s)) table[s * space.size() + t] = prior * p;
  }
  joint_ = Factor(std::move(scope), std::move(arity), std::move(table));
}

int NetworkJoint::node(VarRef ref) const {
  if (ref.var < 0 || ref.var >= n_) throw Error(Errc::unknown_variable, "variable not in network");
  return ref.post ? n_ + ref.var : ref.var;
}

bool NetworkJoint::independent(VarRef a, VarRef b, std::span<const VarRef> evidence, double tol) const {
  const int na = node(a);
  const int nb = node(b);
  if (na == nb) throw Error(Errc::invalid_argument, "independence query needs two distinct nodes");
  std::vector<int> keep{na, nb};
  for (VarRef e : evidence) {
    const int ne = node(e);
    if (ne == na || ne == nb) return true;
    keep.push_back(ne);
  }
  return independent_given_rest(joint_.marginal(keep), na, nb, tol);
}

bool independent_given_rest(const Factor& table, int a, int b, double tol) {
  const int pa = table.position(a);
  const int pb = table.position(b);
  if (pa < 0 || pb < 0 || a == b) throw Error(Errc::scope_error, "independence query needs two distinct scope variables");
  const auto& arity = table.arity();
  const std::size_t aa = static_cast<std::size_t>(arity[static_cast<std::size_t>(pa)]);
  const std::size_t ab = static_cast<std::size_t>(arity[static_cast<std::size_t>(pb)]);
  // Regroup rows as [evidence row][a][b].
  std::vector<std::size_t> stride(arity.size());
  std::size_t blocks = 1;
  for (std::size_t j = arity.size(); j-- > 0;) {
    if (j == static_cast<std::size_t>(pa)) {
      stride[j] = ab;
    } else if (j == static_cast<std::size_t>(pb)) {
      stride[j] = 1;
    } else {
      stride[j] = blocks * aa * ab;
      blocks *= static_cast<std::size_t>(arity[j]);
    }
  }
  std::vector<double> cells(table.size(), 0.0);
  std::vector<int> counter(arity.size(), 0);
  std::size_t o = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    cells[o] = table.table()[i];
    for (std::size_t j = arity.size(); j-- > 0;) {
      if (++counter[j] < arity[j]) {
        o += stride[j];
        break;
      }
      o -= stride[j] * static_cast<std::size_t>(arity[j] - 1);
      counter[j] = 0;
    }
  }

  for (std::size_t e = 0; e < blocks; ++e) {
    const double* cell = cells.data() + e * aa * ab;
    double pe = 0.0;
    for (std::size_t k = 0; k < aa * ab; ++k) pe += cell[k];
    if (pe <= 0.0) continue;
    for (std::size_t i = 0; i < aa; ++i) {
      double pa_i = 0.0;
      for (std::size_t j = 0; j < ab; ++j) pa_i += cell[i * ab + j];
      for (std::size_t j = 0; j < ab; ++j) {
        double pb_j = 0.0;
        for (std::size_t k = 0; k < aa; ++k) pb_j += cell[k * ab + j];
        if (std::abs(cell[i * ab + j] / pe - (pa_i / pe) * (pb_j / pe)) > tol) return false;
      }
    }
  }
  return true;
}

bool brute_force_ci(const MdpModel& model, const ActionNetwork& action, VarRef a, VarRef b,
                    std::span<const VarRef> evidence, double tol) {
  return NetworkJoint(model, action).independent(a, b, evidence, tol);
}

}  // namespace dtr
