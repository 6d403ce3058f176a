#include "dtr/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <set>
#include <sstream>

namespace dtr {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::missing_assignment: return "MissingAssignment";
    case Errc::cyclic_network: return "CyclicNetwork";
    case Errc::unknown_variable: return "UnknownVariable";
    case Errc::unknown_action: return "UnknownAction";
    case Errc::correlated_action: return "CorrelatedAction";
    case Errc::ordering_violation: return "OrderingViolation";
    case Errc::scope_error: return "ScopeError";
    case Errc::state_space_too_large: return "StateSpaceTooLarge";
    case Errc::syntax_error: return "SyntaxError";
    case Errc::validation_error: return "ValidationError";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::internal: return "InternalError";
  }
  return "Error";
}

std::optional<int> Variable::value_index(std::string_view value) const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == value) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::vector<int> ActionNetwork::post_parents(int var) const {
  std::vector<int> out;
  for (const auto& p : cpts.at(static_cast<std::size_t>(var)).parents) {
    if (p.post) out.push_back(p.var);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool ActionNetwork::has_intra_arcs() const {
  return std::any_of(cpts.begin(), cpts.end(), [](const Cpt& c) {
    return std::any_of(c.parents.begin(), c.parents.end(), [](VarRef p) { return p.post; });
  });
}

const ActionNetwork& MdpModel::action(ActionId a) const {
  if (a.index < 0 || a.index >= action_count()) {
    throw Error(Errc::unknown_action, "no action with index " + std::to_string(a.index));
  }
  return actions[static_cast<std::size_t>(a.index)];
}

std::optional<int> MdpModel::find_variable(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

std::optional<ActionId> MdpModel::find_action(std::string_view name) const {
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].name == name) return ActionId{static_cast<int>(i)};
  }
  return std::nullopt;
}

std::string MdpModel::ref_name(VarRef ref) const {
  std::string base = (ref.var >= 0 && ref.var < variable_count()) ? variables[static_cast<std::size_t>(ref.var)].name
                                                                  : "#" + std::to_string(ref.var);
  return ref.post ? base + "'" : base;
}

namespace {

std::string format_distribution(const Distribution& d) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < d.size(); ++i) os << (i ? ", " : "") << d[i];
  os << ')';
  return os.str();
}

template <class L, class LeafCheck>
void check_tree(const MdpModel& model, const DecisionTree<L>& tree, const std::string& where,
                const std::set<VarRef>* allowed, bool allow_post, std::vector<Diagnostic>& out, LeafCheck&& leaf_check) {
  auto rec = [&](auto&& self, const DecisionTree<L>& t) -> void {
    if (t.is_leaf()) {
      leaf_check(t.payload());
      return;
    }
    const VarRef v = t.test();
    if (v.var < 0 || v.var >= model.variable_count()) {
      out.push_back({where, "tests undeclared variable #" + std::to_string(v.var)});
      return;
    }
    if (v.post && !allow_post) out.push_back({where, "tests post-action variable " + model.ref_name(v)});
    if (allowed && !allowed->count(v)) out.push_back({where, "tests " + model.ref_name(v) + " which is not a declared parent"});
    if (t.arity() != model.arity(v.var)) {
      out.push_back({where, "node testing " + model.ref_name(v) + " has " + std::to_string(t.arity()) +
                                " children, domain has " + std::to_string(model.arity(v.var))});
    }
    for (const auto& c : t.children()) self(self, c);
  };
  rec(rec, tree);
}

}  // namespace

std::vector<Diagnostic> validate(const MdpModel& model) {
  std::vector<Diagnostic> out;
  if (!(model.discount >= 0.0 && model.discount < 1.0)) {
    out.push_back({"model", "discount must satisfy 0 <= beta < 1"});
  }

  std::set<std::string> names;
  for (const auto& var : model.variables) {
    const std::string where = "variable '" + var.name + "'";
    if (!names.insert(var.name).second) out.push_back({where, "duplicate variable name"});
    if (var.arity() < 2) out.push_back({where, "domain needs at least two values"});
    std::set<std::string> vals(var.values.begin(), var.values.end());
    if (vals.size() != var.values.size()) out.push_back({where, "duplicate domain value"});
  }

  check_tree(model, model.reward, "reward", nullptr, false, out, [&](double r) {
    if (!std::isfinite(r)) out.push_back({"reward", "non-finite leaf value"});
  });

  std::set<std::string> action_names;
  for (const auto& action : model.actions) {
    const std::string aw = "action '" + action.name + "'";
    if (!action_names.insert(action.name).second) out.push_back({aw, "duplicate action name"});
    if (action.variable_count() != model.variable_count()) {
      out.push_back({aw, "missing cpt: has " + std::to_string(action.variable_count()) + " cpts for " +
                             std::to_string(model.variable_count()) + " variables"});
      continue;
    }
    bool parents_ok = true;
    for (int x = 0; x < model.variable_count(); ++x) {
      const Cpt& cpt = action.cpts[static_cast<std::size_t>(x)];
      const std::string where = aw + ", cpt " + model.ref_name(post_ref(x));
      std::set<VarRef> parents;
      for (VarRef p : cpt.parents) {
        if (p.var < 0 || p.var >= model.variable_count()) {
          out.push_back({where, "parent refers to undeclared variable"});
          parents_ok = false;
          continue;
        }
        if (p == post_ref(x)) {
          out.push_back({where, "variable cannot be its own parent"});
          parents_ok = false;
        }
        parents.insert(p);
      }
      const int arity = model.arity(x);
      check_tree(model, cpt.tree, where, &parents, true, out, [&](const Distribution& d) {
        if (static_cast<int>(d.size()) != arity) {
          out.push_back({where, "leaf has " + std::to_string(d.size()) + " entries, domain has " + std::to_string(arity)});
          return;
        }
        double sum = 0.0;
        bool negative = false;
        for (double p : d) {
          sum += p;
          negative = negative || p < 0.0 || !std::isfinite(p);
        }
        if (negative) out.push_back({where, "negative leaf probability " + format_distribution(d)});
        if (std::abs(sum - 1.0) > 1e-9) out.push_back({where, "unnormalized leaf " + format_distribution(d)});
      });
    }
    if (parents_ok) {
      try {
        post_action_ordering(action);
      } catch (const Error&) {
        out.push_back({aw, "intra-slice cycle"});
      }
    }
  }
  return out;
}

std::vector<int> post_action_ordering(const ActionNetwork& action) {
  const int n = action.variable_count();
  // pending[x] = number of intra-slice children of x not yet placed
  std::vector<int> pending(static_cast<std::size_t>(n), 0);
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) {
    parents[static_cast<std::size_t>(x)] = action.post_parents(x);
    for (int p : parents[static_cast<std::size_t>(x)]) {
      if (p < 0 || p >= n) throw Error(Errc::unknown_variable, "intra-slice parent out of range");
      ++pending[static_cast<std::size_t>(p)];
    }
  }
  std::set<int> ready;
  for (int x = 0; x < n; ++x) {
    if (pending[static_cast<std::size_t>(x)] == 0) ready.insert(x);
  }
  std::vector<int> order;
  order.reserve(static_cast<std::size_t>(n));
  while (!ready.empty()) {
    const int x = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(x);
    for (int p : parents[static_cast<std::size_t>(x)]) {
      if (--pending[static_cast<std::size_t>(p)] == 0) ready.insert(p);
    }
  }
  if (static_cast<int>(order.size()) != n) {
    throw Error(Errc::cyclic_network, "action '" + action.name + "' has an intra-slice cycle");
  }
  return order;
}

bool is_intra_descendant(const ActionNetwork& action, int ancestor, int descendant) {
  const int n = action.variable_count();
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n));
  for (int x = 0; x < n; ++x) {
    for (int p : action.post_parents(x)) children[static_cast<std::size_t>(p)].push_back(x);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::vector<int> stack = children.at(static_cast<std::size_t>(ancestor));
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    if (x == descendant) return true;
    if (seen[static_cast<std::size_t>(x)]) continue;
    seen[static_cast<std::size_t>(x)] = 1;
    for (int c : children[static_cast<std::size_t>(x)]) stack.push_back(c);
  }
  return false;
}

bool blocked(const ActionNetwork& action, VarRef src, VarRef dst, std::span<const VarRef> evidence) {
  const int n = action.variable_count();
  auto id = [&](VarRef r) {
    if (r.var < 0 || r.var >= n) throw Error(Errc::unknown_variable, "variable #" + std::to_string(r.var) + " not in network");
    return r.post ? n + r.var : r.var;
  };
  const int total = 2 * n;
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(total));
  std::vector<std::vector<int>> children(static_cast<std::size_t>(total));
  for (int x = 0; x < n; ++x) {
    for (VarRef p : action.cpts[static_cast<std::size_t>(x)].parents) {
      const int pid = id(p);
      parents[static_cast<std::size_t>(n + x)].push_back(pid);
      children[static_cast<std::size_t>(pid)].push_back(n + x);
    }
  }

  const int s = id(src);
  const int d = id(dst);
  std::vector<char> observed(static_cast<std::size_t>(total), 0);
  for (VarRef e : evidence) observed[static_cast<std::size_t>(id(e))] = 1;
  if (observed[static_cast<std::size_t>(s)] || observed[static_cast<std::size_t>(d)]) return true;
  if (s == d) return false;

  // Ancestors of the evidence (evidence included) decide whether colliders open.
  std::vector<char> anc(static_cast<std::size_t>(total), 0);
  std::vector<int> stack;
  for (int v = 0; v < total; ++v) {
    if (observed[static_cast<std::size_t>(v)]) stack.push_back(v);
  }
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (anc[static_cast<std::size_t>(v)]) continue;
    anc[static_cast<std::size_t>(v)] = 1;
    for (int p : parents[static_cast<std::size_t>(v)]) stack.push_back(p);
  }

  // Reachability over (node, direction): up = arrived from a child, down = from a parent.
  enum Dir { up = 0, down = 1 };
  std::vector<char> visited(static_cast<std::size_t>(total) * 2, 0);
  std::deque<std::pair<int, Dir>> queue{{s, up}};
  while (!queue.empty()) {
    auto [v, dir] = queue.front();
    queue.pop_front();
    auto& mark = visited[static_cast<std::size_t>(v) * 2 + dir];
    if (mark) continue;
    mark = 1;
    const bool obs = observed[static_cast<std::size_t>(v)];
    if (!obs && v == d) return false;
    if (dir == up && !obs) {
      for (int p : parents[static_cast<std::size_t>(v)]) queue.emplace_back(p, up);
      for (int c : children[static_cast<std::size_t>(v)]) queue.emplace_back(c, down);
    } else if (dir == down) {
      if (!obs) {
        for (int c : children[static_cast<std::size_t>(v)]) queue.emplace_back(c, down);
      }
      if (anc[static_cast<std::size_t>(v)]) {
        for (int p : parents[static_cast<std::size_t>(v)]) queue.emplace_back(p, up);
      }
    }
  }
  return true;
}

}  // namespace dtr
