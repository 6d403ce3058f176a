#include "dtr/solver.hpp"

#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>

namespace dtr {

namespace {

struct Choice {
  double value = 0.0;
  ActionId action;

  friend bool operator==(const Choice&, const Choice&) = default;
};

std::vector<QTree> all_q_trees(const MdpModel& model, const ValueTree& value) {
  std::vector<QTree> qs;
  qs.reserve(static_cast<std::size_t>(model.action_count()));
  for (int a = 0; a < model.action_count(); ++a) qs.push_back(q_tree(model, ActionId{a}, value));
  return qs;
}

}  // namespace

Backup max_merge(const std::vector<QTree>& q_trees) {
  if (q_trees.empty()) throw Error(Errc::invalid_argument, "max_merge needs at least one Q-tree");
  const auto merged = merge(q_trees, [](const std::vector<double>& qs) {
    Choice best{qs[0], ActionId{0}};
    for (std::size_t i = 1; i < qs.size(); ++i) {
      if (qs[i] > best.value) best = Choice{qs[i], ActionId{static_cast<int>(i)}};
    }
    return best;
  });
  return Backup{map_leaves(merged, [](const Choice& c) { return c.value; }),
                map_leaves(merged, [](const Choice& c) { return c.action; })};
}

double stopping_threshold(double epsilon, double discount) {
  if (discount <= 0.0) return std::numeric_limits<double>::infinity();
  return epsilon * (1.0 - discount) / (2.0 * discount);
}

double sup_distance(const ValueTree& a, const ValueTree& b) { return max_distance(a, b); }

SolveResult value_iteration(const MdpModel& model, double epsilon, std::size_t max_iters) {
  if (model.action_count() == 0) throw Error(Errc::invalid_argument, "model has no actions");
  const double threshold = stopping_threshold(epsilon, model.discount);
  SolveResult out;
  out.value = model.reward;
  while (out.iterations < max_iters) {
    Backup b = max_merge(all_q_trees(model, out.value));
    const double residual = sup_distance(b.value, out.value);
    out.residuals.push_back(residual);
    out.value = std::move(b.value);
    out.policy = std::move(b.policy);
    ++out.iterations;
    if (residual <= threshold) {
      out.converged = true;
      break;
    }
  }
  return out;
}

ValueTree policy_backup(const MdpModel& model, const PolicyTree& policy, const ValueTree& value) {
  std::set<int> used;
  for_each_leaf(policy, [&](const Context&, ActionId a) {
    if (a.index < 0 || a.index >= model.action_count()) {
      throw Error(Errc::unknown_action, "policy names undeclared action #" + std::to_string(a.index));
    }
    used.insert(a.index);
  });
  std::vector<std::optional<QTree>> qs(static_cast<std::size_t>(model.action_count()));
  for (int a : used) qs[static_cast<std::size_t>(a)] = q_tree(model, ActionId{a}, value);
  return graft(policy, [&](const Context&, ActionId a) { return *qs[static_cast<std::size_t>(a.index)]; });
}

SolveResult successive_approximation(const MdpModel& model, const PolicyTree& policy, double epsilon,
                                     std::size_t max_iters) {
  const double threshold =
      model.discount <= 0.0 ? std::numeric_limits<double>::infinity() : epsilon * (1.0 - model.discount) / model.discount;
  SolveResult out;
  out.policy = policy;
  out.value = model.reward;
  while (out.iterations < max_iters) {
    ValueTree next = policy_backup(model, policy, out.value);
    const double residual = sup_distance(next, out.value);
    out.residuals.push_back(residual);
    out.value = std::move(next);
    ++out.iterations;
    if (residual <= threshold) {
      out.converged = true;
      break;
    }
  }
  return out;
}

MpiResult modified_policy_iteration(const MdpModel& model, double epsilon, std::size_t eval_steps,
                                    std::size_t max_iters) {
  if (model.action_count() == 0) throw Error(Errc::invalid_argument, "model has no actions");
  const double threshold = stopping_threshold(epsilon, model.discount);
  MpiResult out;
  out.value = model.reward;
  while (out.iterations < max_iters) {
    Backup b = max_merge(all_q_trees(model, out.value));
    const double residual = sup_distance(b.value, out.value);
    const bool unchanged = !out.policy_history.empty() && semantic_eq(b.policy, out.policy_history.back(), 0.0);
    out.residuals.push_back(residual);
    out.policy_history.push_back(b.policy);
    out.value = std::move(b.value);
    out.policy = std::move(b.policy);
    ++out.iterations;
    if ((unchanged || model.discount == 0.0) && residual <= threshold) {
      out.converged = true;
      break;
    }
    for (std::size_t i = 0; i < eval_steps; ++i) out.value = policy_backup(model, out.policy, out.value);
  }
  return out;
}

}  // namespace dtr
