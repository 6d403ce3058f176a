#pragma once

// Structured dynamic programming over decision-tree value functions.

#include <cstddef>
#include <vector>

#include "dtr/model.hpp"
#include "dtr/regression.hpp"

namespace dtr {

using PolicyTree = DecisionTree<ActionId>;

struct Backup {
  ValueTree value = ValueTree::leaf(0.0);
  PolicyTree policy = PolicyTree::leaf(ActionId{});
};

/// Pointwise maximum over Q-trees; ties go to the lowest action index.
Backup max_merge(const std::vector<QTree>& q_trees);

struct SolveResult {
  ValueTree value = ValueTree::leaf(0.0);
  PolicyTree policy = PolicyTree::leaf(ActionId{});
  std::size_t iterations = 0;
  bool converged = false;
  /// Sup-norm change between consecutive iterates, one entry per iteration.
  std::vector<double> residuals;
};

/// Bellman-error threshold that guarantees an eps-optimal greedy policy.
double stopping_threshold(double epsilon, double discount);

/// Largest absolute difference between two value trees over all states.
double sup_distance(const ValueTree& a, const ValueTree& b);

SolveResult value_iteration(const MdpModel& model, double epsilon, std::size_t max_iters);

/// Applies one policy backup: the Q value of the action each region selects.
ValueTree policy_backup(const MdpModel& model, const PolicyTree& policy, const ValueTree& value);

/// Iterates policy backups from V = R until the change is at most eps(1-beta)/beta.
SolveResult successive_approximation(const MdpModel& model, const PolicyTree& policy, double epsilon,
                                     std::size_t max_iters);

struct MpiResult : SolveResult {
  std::vector<PolicyTree> policy_history;
};

/// Alternates greedy improvement with `eval_steps` policy backups.
MpiResult modified_policy_iteration(const MdpModel& model, double epsilon, std::size_t eval_steps,
                                    std::size_t max_iters);

}  // namespace dtr
