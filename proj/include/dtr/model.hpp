#pragma once

// Factored MDP: variables with finite domains, one two-slice network per
// action with tree-structured CPTs, a reward tree, and a discount rate.

#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtr/tree.hpp"

namespace dtr {

struct Variable {
  std::string name;
  std::vector<std::string> values;  // declared order; children of tree nodes follow it

  int arity() const { return static_cast<int>(values.size()); }
  std::optional<int> value_index(std::string_view value) const;
};

/// Probability of each value of one variable, in declared value order.
using Distribution = std::vector<double>;

struct Cpt {
  std::vector<VarRef> parents;  // Π(X'): pre-slice variables and other post-slice variables
  DecisionTree<Distribution> tree = DecisionTree<Distribution>::leaf({});
};

struct ActionNetwork {
  std::string name;
  std::vector<Cpt> cpts;  // one per model variable, indexed like MdpModel::variables

  int variable_count() const { return static_cast<int>(cpts.size()); }
  std::vector<int> post_parents(int var) const;
  bool has_intra_arcs() const;
};

struct ActionId {
  int index = 0;

  friend constexpr auto operator<=>(const ActionId&, const ActionId&) = default;
};

inline double leaf_distance(ActionId a, ActionId b) {
  return a == b ? 0.0 : std::numeric_limits<double>::infinity();
}

struct MdpModel {
  std::vector<Variable> variables;
  std::vector<ActionNetwork> actions;
  DecisionTree<double> reward = DecisionTree<double>::leaf(0.0);
  double discount = 0.0;

  int variable_count() const { return static_cast<int>(variables.size()); }
  int action_count() const { return static_cast<int>(actions.size()); }
  int arity(int var) const { return variables.at(static_cast<std::size_t>(var)).arity(); }
  const ActionNetwork& action(ActionId a) const;
  std::optional<int> find_variable(std::string_view name) const;
  std::optional<ActionId> find_action(std::string_view name) const;
  /// "X" for the pre-slice copy, "X'" for the post-slice copy.
  std::string ref_name(VarRef ref) const;
};

struct Diagnostic {
  std::string location;  // e.g. "action 'a', cpt X'"
  std::string message;   // e.g. "unnormalized leaf (0.5, 0.4)"

  std::string str() const { return location.empty() ? message : location + ": " + message; }
};

/// Empty iff the model satisfies every structural and numeric invariant.
std::vector<Diagnostic> validate(const MdpModel& model);

/// Total order over post-slice variables in which every intra-slice child
/// precedes its intra-slice parents. Ties go to declaration order.
std::vector<int> post_action_ordering(const ActionNetwork& action);

/// True when `descendant'` is reachable from `ancestor'` along intra-slice arcs.
bool is_intra_descendant(const ActionNetwork& action, int ancestor, int descendant);

/// Graph d-separation of `src` and `dst` given `evidence` in the action's
/// two-slice network. Pre-slice variables are roots.
bool blocked(const ActionNetwork& action, VarRef src, VarRef dst, std::span<const VarRef> evidence);

}  // namespace dtr
