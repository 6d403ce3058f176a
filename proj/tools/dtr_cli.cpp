// Command-line front end. Talks to the solver only through the C interface.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "dtr/dtr.h"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid = 1;
constexpr int exit_compare_failed = 2;
constexpr int exit_usage = 64;

struct Freer {
  void operator()(char* s) const { dtr_string_free(s); }
  void operator()(dtr_model* m) const { dtr_model_free(m); }
  void operator()(dtr_tree* t) const { dtr_tree_free(t); }
  void operator()(dtr_solution* s) const { dtr_solution_free(s); }
};

using String = std::unique_ptr<char, Freer>;
using Model = std::unique_ptr<dtr_model, Freer>;

bool read_file(const std::string& path, std::string& text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  return true;
}

int report_error(dtr_status status) {
  std::cerr << "error: " << dtr_last_error() << "\n";
  switch (status) {
    case DTR_ERR_UNKNOWN_ACTION:
    case DTR_ERR_INVALID_ARGUMENT: return exit_usage;
    default: return exit_invalid;
  }
}

int load(const std::string& path, Model& model) {
  dtr_model* raw = nullptr;
  const dtr_status st = dtr_model_load(path.c_str(), &raw);
  if (st != DTR_OK) {
    std::cerr << "error: " << dtr_last_error() << "\n";
    return exit_invalid;
  }
  model.reset(raw);
  return exit_ok;
}

std::string take(char* s) { return String(s).get(); }

int cmd_validate(const std::string& file) {
  std::string text;
  if (!read_file(file, text)) {
    std::cerr << "error: cannot read " << file << "\n";
    return exit_invalid;
  }
  char* report = nullptr;
  const dtr_status st = dtr_validate_document(text.c_str(), &report);
  const std::string lines = report ? take(report) : std::string();
  if (st == DTR_OK) {
    std::cout << "ok\n";
    return exit_ok;
  }
  std::cerr << lines;
  return exit_invalid;
}

int cmd_regress(const std::string& file, const std::string& action, const std::string& value_file) {
  Model model;
  if (int rc = load(file, model)) return rc;
  std::string value_text;
  if (!value_file.empty() && !read_file(value_file, value_text)) {
    std::cerr << "error: cannot read " << value_file << "\n";
    return exit_invalid;
  }
  dtr_tree* q = nullptr;
  const dtr_status st = dtr_regress(model.get(), action.c_str(), value_file.empty() ? nullptr : value_text.c_str(), &q);
  if (st != DTR_OK) return st == DTR_ERR_SYNTAX ? exit_invalid : report_error(st);
  std::unique_ptr<dtr_tree, Freer> guard(q);
  char* text = nullptr;
  if (dtr_tree_format(q, &text) != DTR_OK) return report_error(DTR_ERR_INTERNAL);
  std::cout << take(text) << "\n";
  return exit_ok;
}

bool write_dot(const dtr_tree* tree, const std::string& name, const std::filesystem::path& dir) {
  char* text = nullptr;
  if (dtr_tree_to_dot(tree, name.c_str(), &text) != DTR_OK) return false;
  std::ofstream out(dir / (name + ".dot"));
  out << take(text);
  return static_cast<bool>(out);
}

int cmd_solve(const std::string& file, const dtr_solve_options& opts, bool flat, const std::string& dot_dir) {
  Model model;
  if (int rc = load(file, model)) return rc;
  if (flat) {
    char* report = nullptr;
    const dtr_status st = dtr_solve_flat(model.get(), &opts, &report);
    if (st != DTR_OK) return report_error(st);
    std::cout << take(report);
    return exit_ok;
  }
  dtr_solution* raw = nullptr;
  const dtr_status st = dtr_solve(model.get(), &opts, &raw);
  if (st != DTR_OK) return report_error(st);
  std::unique_ptr<dtr_solution, Freer> sol(raw);
  char* value = nullptr;
  char* policy = nullptr;
  dtr_tree_format(dtr_solution_value(raw), &value);
  dtr_tree_format(dtr_solution_policy(raw), &policy);
  std::cout << "iterations " << dtr_solution_iterations(raw) << "\n"
            << "converged " << (dtr_solution_converged(raw) ? "true" : "false") << "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", dtr_solution_residual(raw));
  std::cout << "residual " << buf << "\n"
            << "value leaves " << dtr_tree_leaf_count(dtr_solution_value(raw)) << "\n"
            << take(value) << "\n"
            << "policy leaves " << dtr_tree_leaf_count(dtr_solution_policy(raw)) << "\n"
            << take(policy) << "\n";
  if (!dot_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dot_dir, ec);
    if (!write_dot(dtr_solution_value(raw), "value", dot_dir) || !write_dot(dtr_solution_policy(raw), "policy", dot_dir)) {
      std::cerr << "error: cannot write DOT files to " << dot_dir << "\n";
      return exit_invalid;
    }
  }
  return exit_ok;
}

int cmd_compare(const std::string& file, double epsilon, double tol) {
  Model model;
  if (int rc = load(file, model)) return rc;
  dtr_comparison r{};
  const dtr_status st = dtr_compare(model.get(), epsilon, tol, &r);
  if (st != DTR_OK) return report_error(st);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", r.max_gap);
  std::cout << "states " << r.states << "\n"
            << "max_gap " << buf << "\n"
            << "worst_state " << r.worst_state << "\n"
            << "policy_disagreements " << r.policy_disagreements << "\n"
            << "result " << (r.passed ? "pass" : "fail") << "\n";
  return r.passed ? exit_ok : exit_compare_failed;
}

int cmd_gen(const dtr_gen_params& params) {
  char* doc = nullptr;
  const dtr_status st = dtr_generate(&params, &doc);
  if (st != DTR_OK) return report_error(st);
  std::cout << take(doc);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factored MDP solver with decision-theoretic regression"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dtr_version()));

  std::string file;
  auto* validate = app.add_subcommand("validate", "Parse and validate a model document");
  validate->add_option("file", file, "Model document")->required();

  std::string action;
  std::string value_file;
  auto* regress = app.add_subcommand("regress", "Print the Q-tree of one action");
  regress->add_option("file", file, "Model document")->required();
  regress->add_option("--action", action, "Action name")->required();
  regress->add_option("--value", value_file, "Value tree file (default: the reward tree)");

  dtr_solve_options opts;
  dtr_solve_options_init(&opts);
  bool flat = false;
  bool mpi = false;
  std::string dot_dir;
  auto* solve = app.add_subcommand("solve", "Solve by structured value iteration");
  solve->add_option("file", file, "Model document")->required();
  solve->add_option("--epsilon", opts.epsilon, "Optimality tolerance")->check(CLI::NonNegativeNumber);
  solve->add_option("--max-iters", opts.max_iters, "Iteration limit")->check(CLI::PositiveNumber);
  solve->add_flag("--mpi", mpi, "Use modified policy iteration");
  solve->add_option("--eval-steps", opts.eval_steps, "Policy backups per improvement step");
  solve->add_option("--dot", dot_dir, "Write value.dot and policy.dot to this directory");
  solve->add_flag("--flat", flat, "Solve by state enumeration instead");

  double epsilon = 1e-4;
  double tol = 1e-4;
  auto* compare = app.add_subcommand("compare", "Check the structured solution against state enumeration");
  compare->add_option("file", file, "Model document")->required();
  compare->add_option("--epsilon", epsilon, "Optimality tolerance")->check(CLI::PositiveNumber);
  compare->add_option("--tol", tol, "Allowed value gap")->check(CLI::NonNegativeNumber);

  dtr_gen_params gp;
  dtr_gen_params_init(&gp);
  int reward_vars = -1;
  auto* gen = app.add_subcommand("gen", "Emit a seeded random model document");
  gen->add_option("--vars", gp.n_vars, "Number of variables")->required()->check(CLI::PositiveNumber);
  gen->add_option("--actions", gp.n_actions, "Number of actions")->required()->check(CLI::PositiveNumber);
  gen->add_option("--intra-arcs", gp.max_intra_arcs, "Maximum intra-slice arcs per action")->required()->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gp.seed, "Random seed")->required();
  gen->add_option("--max-parents", gp.max_parents, "Maximum pre-action parents per variable")->check(CLI::NonNegativeNumber);
  gen->add_option("--reward-vars", reward_vars, "Variables in the reward tree")->check(CLI::PositiveNumber);
  gen->add_option("--discount", gp.discount, "Discount rate in [0, 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  if (*validate) return cmd_validate(file);
  if (*regress) return cmd_regress(file, action, value_file);
  if (*solve) {
    opts.use_mpi = mpi ? 1 : 0;
    return cmd_solve(file, opts, flat, dot_dir);
  }
  if (*compare) return cmd_compare(file, epsilon, tol);
  if (*gen) {
    gp.reward_vars = reward_vars > 0 ? reward_vars : std::min(3, gp.n_vars);
    return cmd_gen(gp);
  }
  return exit_usage;
}
