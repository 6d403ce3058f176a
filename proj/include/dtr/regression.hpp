#pragma once

// Decision-theoretic regression: builds the Q-tree of one action from a value
// tree by regressing each value variable through the action's network.

#include <vector>

#include "dtr/factor.hpp"
#include "dtr/model.hpp"
#include "dtr/tree.hpp"

namespace dtr {

using ValueTree = DecisionTree<double>;
using QTree = DecisionTree<double>;
/// Internal nodes test pre-action variables; leaves hold the recorded factors.
using PartialQTree = DecisionTree<FactorSet>;

struct RegressionOptions {
  /// Order in which post-action variables are replaced inside simplify.
  /// Empty means the action's post-action ordering.
  std::vector<int> elimination_order;
  /// Reject replacing a variable while one of its intra-slice descendants is
  /// still pending. Disabling this exists only to demonstrate the hazard.
  bool check_ordering = true;
  /// Put every pre-action variable into the evidence of the need test. A Q
  /// value conditions on the full prior state, so this is the exact setting.
  bool condition_on_full_state = true;
};

/// Depth-first, left-to-right order of first occurrence of the value tree's variables.
std::vector<int> value_ordering(const ValueTree& value_tree);

/// Regression for actions without intra-slice arcs.
PartialQTree regress_uncorrelated(const MdpModel& model, ActionId action, const ValueTree& value_tree);

/// Regression for arbitrary action networks.
PartialQTree regress(const MdpModel& model, ActionId action, const ValueTree& value_tree,
                     const RegressionOptions& options = {});

/// Expands Tree(X', a) at one partial Q-tree leaf (label, k) into a fragment
/// over pre-action variables whose leaves extend `label` with X'.
PartialQTree simplify(const MdpModel& model, ActionId action, const ValueTree& value_tree, int x,
                      const FactorSet& label, const Context& k, const RegressionOptions& options = {});

/// Folds Pr(child | target) into the factor holding `target`. With
/// `keep_joint` the target stays in the scope, otherwise it is summed out.
/// `child_given_target` has scope {child, target}; rows for each target value sum to 1.
FactorSet eliminate(const FactorSet& fset, const Factor& child_given_target, int child, int target, bool keep_joint);

struct NeedQuery {
  const MdpModel& model;
  ActionId action;
  int candidate = -1;                 // Y' under consideration
  const FactorSet& label;             // l
  Context k;                          // pre-action context of the leaf
  Context k_prime;                    // branch through the partially replaced CPT tree
  int regressed = -1;                 // X' being regressed, or -1
  const ValueTree& value_tree;
  std::vector<int> extra_evidence;    // further post-action variables treated as observed
  bool condition_on_full_state = true;
};

/// True when the joint of the candidate with the regressed variable must be kept.
bool needed(const NeedQuery& query);

/// Pr(c) for a context over value-tree variables, as the product of each
/// factor's marginal. Branches whose recorded part has probability 0 yield 0
/// even when some of their variables were never recorded.
double branch_probability(const FactorSet& fset, const Context& c);

/// Index (in for_each_leaf order) and probability of every value-tree branch
/// with positive probability under `fset`.
std::vector<std::pair<std::size_t, double>> branch_weights(const FactorSet& fset, const ValueTree& value_tree);

/// Q-tree: reward plus discounted expected future value at each leaf.
QTree finalize(const PartialQTree& pq, const ValueTree& value_tree, const DecisionTree<double>& reward, double discount);

QTree q_tree(const MdpModel& model, ActionId action, const ValueTree& value_tree, const RegressionOptions& options = {});

}  // namespace dtr
