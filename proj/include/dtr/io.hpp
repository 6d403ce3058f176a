#pragma once

// Model documents, tree text and DOT rendering, and seeded model generation.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dtr/model.hpp"
#include "dtr/regression.hpp"
#include "dtr/solver.hpp"

namespace dtr {

class SyntaxError : public Error {
 public:
  SyntaxError(int line, int column, const std::string& message);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// Parses without validating. Throws SyntaxError.
MdpModel parse_model_unchecked(std::string_view text);
/// Parses and validates. Throws SyntaxError or ValidationError.
MdpModel parse_model(std::string_view text);

std::string serialize_model(const MdpModel& model);

/// Value tree over the model's pre-action variables, in the tree grammar.
ValueTree parse_value_tree(const MdpModel& model, std::string_view text);

std::string format_tree(const MdpModel& model, const ValueTree& tree);
std::string format_tree(const MdpModel& model, const PolicyTree& tree);
std::string format_tree(const MdpModel& model, const PartialQTree& tree);

std::string export_dot(const MdpModel& model, const ValueTree& tree, std::string_view name = "tree");
std::string export_dot(const MdpModel& model, const PolicyTree& tree, std::string_view name = "policy");
std::string export_dot(const MdpModel& model, const PartialQTree& tree, std::string_view name = "regression");

struct GenParams {
  int n_vars = 6;
  int n_actions = 3;
  int max_parents = 3;
  int max_intra_arcs = 2;
  int reward_vars = 3;
  std::uint64_t seed = 1;
  double discount = 0.9;
};

/// Deterministic for a given parameter set; binary variables, CPT
/// probabilities on a grid of eighths that includes 0 and 1.
MdpModel random_model(const GenParams& params);

/// Random value tree over the model's variables with integer leaves in [0, 20].
ValueTree random_value_tree(const MdpModel& model, std::uint64_t seed, int max_depth = 4);

/// Reward on k variables; every action touches only those k variables.
/// The remaining n - k variables persist unchanged under every action.
MdpModel k_of_n_model(int n, int k, std::uint64_t seed, double discount = 0.9);

}  // namespace dtr
