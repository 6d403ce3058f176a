#pragma once

// Local joint distributions over clusters of post-action variables.

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dtr/error.hpp"

namespace dtr {

/// Joint table over a set of post-action variables. Scope is sorted by variable
/// index; the table is row-major with the last scope variable varying fastest.
class Factor {
 public:
  Factor() = default;
  Factor(std::vector<int> scope, std::vector<int> arity, std::vector<double> table);

  static Factor single(int var, std::vector<double> distribution);

  const std::vector<int>& scope() const { return scope_; }
  const std::vector<int>& arity() const { return arity_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t size() const { return table_.size(); }

  bool contains(int var) const;
  int arity_of(int var) const;
  /// Position of `var` in the scope, or -1.
  int position(int var) const;

  /// Scope values of the table row `index`.
  std::vector<int> decode(std::size_t index) const;
  std::size_t encode(std::span<const int> values) const;
  double at(std::span<const int> values) const { return table_[encode(values)]; }

  /// Total mass of rows agreeing with every (var, value) pair whose var is in scope.
  double probability(std::span<const std::pair<int, int>> fixed) const;

  Factor sum_out(int var) const;
  Factor marginal(std::span<const int> keep) const;
  /// Product of factors with disjoint scopes.
  static Factor product(const Factor& a, const Factor& b);

  double total() const;

  friend bool operator==(const Factor&, const Factor&) = default;

 private:
  std::vector<int> scope_;
  std::vector<int> arity_;
  std::vector<double> table_;
};

/// Largest table difference; infinite when the scopes differ.
double leaf_distance(const Factor& a, const Factor& b);

/// Leaf label of a partial Q-tree: factors with pairwise disjoint scopes,
/// kept sorted by their smallest variable.
class FactorSet {
 public:
  FactorSet() = default;
  explicit FactorSet(std::vector<Factor> factors);

  const std::vector<Factor>& factors() const { return factors_; }
  bool empty() const { return factors_.empty(); }
  std::size_t size() const { return factors_.size(); }

  bool records(int var) const { return factor_of(var) >= 0; }
  /// Index of the factor whose scope holds `var`, or -1.
  int factor_of(int var) const;
  std::vector<int> recorded() const;

  FactorSet with(Factor f) const;
  FactorSet without(std::span<const int> factor_indices) const;

  friend bool operator==(const FactorSet&, const FactorSet&) = default;

 private:
  void normalize_order();

  std::vector<Factor> factors_;
  std::vector<int> owner_;  // factor index per variable, -1 when unrecorded
};

double leaf_distance(const FactorSet& a, const FactorSet& b);

std::string format_factor_set(const FactorSet& fs, const std::vector<std::string>& names, int precision = 6);

}  // namespace dtr
