#pragma once

// Flat ground truth: enumerates states and computes exact transition
// distributions, values, and Q values directly from the networks.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dtr/factor.hpp"
#include "dtr/model.hpp"
#include "dtr/solver.hpp"

namespace dtr {

/// Mixed-radix enumeration of full assignments; variable 0 varies slowest.
class StateSpace {
 public:
  static constexpr std::size_t default_limit = std::size_t{1} << 20;

  explicit StateSpace(const MdpModel& model, std::size_t limit = default_limit);

  std::size_t size() const { return size_; }
  int variable_count() const { return static_cast<int>(arity_.size()); }
  std::vector<int> decode(std::size_t index) const;
  std::size_t encode(std::span<const int> values) const;
  /// Pre-action context of a state.
  Context context(std::size_t index) const;

 private:
  std::vector<int> arity_;
  std::size_t size_ = 1;
};

/// Sparse successor distribution: (state index, probability) with probability > 0.
using FlatDistribution = std::vector<std::pair<std::size_t, double>>;

/// Pr(t | s, a) by the chain rule over a topological order of the intra-slice
/// graph. `order` overrides that order; it must list parents before children.
FlatDistribution flat_transition(const MdpModel& model, const ActionNetwork& action, const StateSpace& space,
                                 std::size_t state, std::span<const int> order = {});

struct FlatSolution {
  std::vector<double> value;
  std::vector<int> policy;
  /// Q values of the final backup, state-major: q[s * actions + a].
  std::vector<double> q;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> residuals;
};

/// Per-action successor tables for every state.
class FlatModel {
 public:
  explicit FlatModel(const MdpModel& model, std::size_t limit = StateSpace::default_limit);

  const MdpModel& model() const { return *model_; }
  const StateSpace& space() const { return space_; }
  std::size_t states() const { return space_.size(); }
  const FlatDistribution& successors(std::size_t s, int a) const;
  double reward(std::size_t s) const { return reward_[s]; }
  /// R(s) + beta * sum_t Pr(t|s,a) V(t).
  double q(std::size_t s, int a, std::span<const double> value) const;

 private:
  const MdpModel* model_;
  StateSpace space_;
  std::vector<double> reward_;
  std::vector<FlatDistribution> succ_;  // s * actions + a
};

FlatSolution flat_value_iteration(const FlatModel& flat, double epsilon, std::size_t max_iters);
FlatSolution flat_value_iteration(const MdpModel& model, double epsilon, std::size_t max_iters);

/// Iterates the policy's fixed-point equation from V = R until the change is at most eps(1-beta)/beta.
std::vector<double> flat_policy_value(const FlatModel& flat, std::span<const int> policy, double epsilon,
                                      std::size_t max_iters = 1000000);

/// Flat Q(s, a) for every state given a value function over states.
std::vector<double> flat_q(const FlatModel& flat, int action, std::span<const double> value);

/// Evaluates a tree at every state.
std::vector<double> expand(const StateSpace& space, const ValueTree& tree);
std::vector<int> expand(const StateSpace& space, const PolicyTree& tree);

struct ComparisonReport {
  double max_gap = 0.0;
  std::size_t worst_state = 0;
  std::size_t states = 0;
  /// Per state: the structured action's flat Q is within tol of the flat max.
  std::vector<bool> policy_agrees;
  std::size_t policy_disagreements = 0;
  bool passed = false;
};

/// Compares structured results to flat value iteration run with the same epsilon.
ComparisonReport compare(const ValueTree& value, const PolicyTree& policy, const MdpModel& model, double epsilon,
                         double tol, std::size_t max_iters = 100000);
ComparisonReport compare(const ValueTree& value, const PolicyTree& policy, const FlatModel& flat,
                         const FlatSolution& reference, double tol);

/// Joint distribution over `post_vars` (scope order) given a pre-action context,
/// averaged uniformly over the pre-action variables the context leaves free.
std::vector<double> conditional_joint(const MdpModel& model, const ActionNetwork& action, std::span<const int> post_vars,
                                      const Context& pre_context);

/// Full joint of an action's two-slice network under a uniform prior over
/// pre-action states. Node i is pre-action variable i; node n + i is its
/// post-action copy. Limited to 12 nodes.
class NetworkJoint {
 public:
  NetworkJoint(const MdpModel& model, const ActionNetwork& action);
  int node(VarRef ref) const;
  int node_count() const { return 2 * n_; }
  /// Table over nodes 0 .. node_count() - 1.
  const Factor& joint() const { return joint_; }
  bool independent(VarRef a, VarRef b, std::span<const VarRef> evidence, double tol = 1e-9) const;

 private:
  int n_;
  Factor joint_;
};

/// True when scope variables `a` and `b` of `table` are independent given
/// every positive-probability assignment of the rest of its scope.
bool independent_given_rest(const Factor& table, int a, int b, double tol = 1e-9);

/// Numeric conditional independence of `a` and `b` given `evidence` in the
/// action's two-slice network, using a uniform prior over pre-action variables.
bool brute_force_ci(const MdpModel& model, const ActionNetwork& action, VarRef a, VarRef b,
                    std::span<const VarRef> evidence, double tol = 1e-9);

}  // namespace dtr
