#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <variant>

#include "dtr/dtr.h"
#include "dtr/io.hpp"
#include "dtr/oracle.hpp"
#include "dtr/solver.hpp"

struct dtr_model {
  std::shared_ptr<const dtr::MdpModel> model;
};

struct dtr_tree {
  std::shared_ptr<const dtr::MdpModel> model;
  std::variant<dtr::ValueTree, dtr::PolicyTree> tree;
};

struct dtr_solution {
  std::shared_ptr<const dtr::MdpModel> model;
  dtr::SolveResult result;
  dtr_tree value;
  dtr_tree policy;
};

namespace {

thread_local std::string last_error;

dtr_status status_of(dtr::Errc code) {
  switch (code) {
    case dtr::Errc::syntax_error: return DTR_ERR_SYNTAX;
    case dtr::Errc::validation_error: return DTR_ERR_VALIDATION;
    case dtr::Errc::unknown_action: return DTR_ERR_UNKNOWN_ACTION;
    case dtr::Errc::unknown_variable: return DTR_ERR_UNKNOWN_VARIABLE;
    case dtr::Errc::state_space_too_large: return DTR_ERR_STATE_SPACE_TOO_LARGE;
    case dtr::Errc::invalid_argument:
    case dtr::Errc::missing_assignment:
    case dtr::Errc::cyclic_network:
    case dtr::Errc::correlated_action: return DTR_ERR_INVALID_ARGUMENT;
    default: return DTR_ERR_INTERNAL;
  }
}

dtr_status fail(dtr_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
dtr_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const dtr::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(DTR_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DTR_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

bool read_file(const char* path, std::string& text) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  return true;
}

}  // namespace

extern "C" {

const char* dtr_version(void) { return "1.0.0"; }

const char* dtr_last_error(void) { return last_error.c_str(); }

void dtr_string_free(char* s) { std::free(s); }

void dtr_solve_options_init(dtr_solve_options* options) {
  if (!options) return;
  options->epsilon = 1e-4;
  options->max_iters = 10000;
  options->use_mpi = 0;
  options->eval_steps = 5;
}

void dtr_gen_params_init(dtr_gen_params* params) {
  if (!params) return;
  const dtr::GenParams d;
  params->n_vars = d.n_vars;
  params->n_actions = d.n_actions;
  params->max_parents = d.max_parents;
  params->max_intra_arcs = d.max_intra_arcs;
  params->reward_vars = d.reward_vars;
  params->seed = d.seed;
  params->discount = d.discount;
}

dtr_status dtr_model_parse(const char* text, dtr_model** out) {
  return guarded([&] {
    if (!text || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    auto m = std::make_shared<const dtr::MdpModel>(dtr::parse_model(text));
    *out = new dtr_model{std::move(m)};
    return DTR_OK;
  });
}

dtr_status dtr_model_load(const char* path, dtr_model** out) {
  return guarded([&] {
    if (!path || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    std::string text;
    if (!read_file(path, text)) return fail(DTR_ERR_IO, std::string("cannot read ") + path);
    return dtr_model_parse(text.c_str(), out);
  });
}

void dtr_model_free(dtr_model* model) { delete model; }

dtr_status dtr_model_serialize(const dtr_model* model, char** out) {
  return guarded([&] {
    if (!model || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    *out = copy_string(dtr::serialize_model(*model->model));
    return DTR_OK;
  });
}

size_t dtr_model_variable_count(const dtr_model* model) {
  return model ? static_cast<size_t>(model->model->variable_count()) : 0;
}

size_t dtr_model_action_count(const dtr_model* model) {
  return model ? static_cast<size_t>(model->model->action_count()) : 0;
}

dtr_status dtr_validate_document(const char* text, char** report) {
  return guarded([&] {
    if (!text) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    if (report) *report = nullptr;
    try {
      dtr::parse_model(text);
    } catch (const dtr::ValidationError& e) {
      std::string lines;
      for (const auto& d : e.diagnostics()) lines += d.str() + "\n";
      if (report) *report = copy_string(lines);
      return fail(DTR_ERR_VALIDATION, e.what());
    } catch (const dtr::SyntaxError& e) {
      if (report) *report = copy_string(std::string(e.what()) + "\n");
      return fail(DTR_ERR_SYNTAX, e.what());
    }
    if (report) *report = copy_string("");
    return DTR_OK;
  });
}

dtr_status dtr_regress(const dtr_model* model, const char* action, const char* value_tree, dtr_tree** out) {
  return guarded([&] {
    if (!model || !action || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    const auto& m = *model->model;
    const auto a = m.find_action(action);
    if (!a) return fail(DTR_ERR_UNKNOWN_ACTION, std::string("unknown action '") + action + "'");
    const dtr::ValueTree v = value_tree ? dtr::parse_value_tree(m, value_tree) : m.reward;
    *out = new dtr_tree{model->model, dtr::q_tree(m, *a, v)};
    return DTR_OK;
  });
}

dtr_status dtr_solve(const dtr_model* model, const dtr_solve_options* options, dtr_solution** out) {
  return guarded([&] {
    if (!model || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    *out = nullptr;
    dtr_solve_options opts;
    dtr_solve_options_init(&opts);
    if (options) opts = *options;
    if (!(opts.epsilon >= 0.0)) return fail(DTR_ERR_INVALID_ARGUMENT, "epsilon must be non-negative");
    const auto& m = *model->model;
    dtr::SolveResult r = opts.use_mpi ? dtr::modified_policy_iteration(m, opts.epsilon, opts.eval_steps, opts.max_iters)
                                      : dtr::value_iteration(m, opts.epsilon, opts.max_iters);
    auto* s = new dtr_solution{model->model, r, dtr_tree{model->model, r.value}, dtr_tree{model->model, r.policy}};
    *out = s;
    return DTR_OK;
  });
}

dtr_status dtr_solve_flat(const dtr_model* model, const dtr_solve_options* options, char** report) {
  return guarded([&] {
    if (!model || !report) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    *report = nullptr;
    dtr_solve_options opts;
    dtr_solve_options_init(&opts);
    if (options) opts = *options;
    const auto& m = *model->model;
    const dtr::FlatModel flat(m);
    const auto sol = dtr::flat_value_iteration(flat, opts.epsilon, opts.max_iters);
    std::ostringstream os;
    os.precision(17);
    os << "states " << flat.states() << "\niterations " << sol.iterations << "\nconverged "
       << (sol.converged ? "true" : "false") << "\n";
    for (std::size_t s = 0; s < flat.states(); ++s) {
      const auto values = flat.space().decode(s);
      for (std::size_t v = 0; v < values.size(); ++v) {
        os << (v ? " " : "") << m.variables[v].name << "=" << m.variables[v].values[static_cast<std::size_t>(values[v])];
      }
      os << " : " << sol.value[s] << " " << m.actions[static_cast<std::size_t>(sol.policy[s])].name << "\n";
    }
    *report = copy_string(os.str());
    return DTR_OK;
  });
}

void dtr_solution_free(dtr_solution* solution) { delete solution; }

size_t dtr_solution_iterations(const dtr_solution* solution) { return solution ? solution->result.iterations : 0; }

int dtr_solution_converged(const dtr_solution* solution) { return solution && solution->result.converged ? 1 : 0; }

double dtr_solution_residual(const dtr_solution* solution) {
  if (!solution || solution->result.residuals.empty()) return 0.0;
  return solution->result.residuals.back();
}

const dtr_tree* dtr_solution_value(const dtr_solution* solution) { return solution ? &solution->value : nullptr; }

const dtr_tree* dtr_solution_policy(const dtr_solution* solution) { return solution ? &solution->policy : nullptr; }

dtr_status dtr_solution_evaluate(const dtr_solution* solution, const int* state, size_t n, double* value) {
  return guarded([&] {
    if (!solution || (!state && n > 0) || !value) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    const auto& m = *solution->model;
    if (n != static_cast<size_t>(m.variable_count())) return fail(DTR_ERR_INVALID_ARGUMENT, "state needs one value per variable");
    dtr::Context c;
    for (size_t i = 0; i < n; ++i) {
      if (state[i] < 0 || state[i] >= m.arity(static_cast<int>(i))) return fail(DTR_ERR_INVALID_ARGUMENT, "state value out of range");
      c.assign(dtr::pre_ref(static_cast<int>(i)), state[i]);
    }
    *value = dtr::evaluate(solution->result.value, c);
    return DTR_OK;
  });
}

dtr_status dtr_tree_format(const dtr_tree* tree, char** out) {
  return guarded([&] {
    if (!tree || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    *out = copy_string(std::visit([&](const auto& t) { return dtr::format_tree(*tree->model, t); }, tree->tree));
    return DTR_OK;
  });
}

dtr_status dtr_tree_to_dot(const dtr_tree* tree, const char* name, char** out) {
  return guarded([&] {
    if (!tree || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    const std::string n = name ? name : "tree";
    *out = copy_string(std::visit([&](const auto& t) { return dtr::export_dot(*tree->model, t, n); }, tree->tree));
    return DTR_OK;
  });
}

size_t dtr_tree_leaf_count(const dtr_tree* tree) {
  if (!tree) return 0;
  return std::visit([](const auto& t) { return dtr::leaf_count(t); }, tree->tree);
}

void dtr_tree_free(dtr_tree* tree) { delete tree; }

dtr_status dtr_compare(const dtr_model* model, double epsilon, double tol, dtr_comparison* out) {
  return guarded([&] {
    if (!model || !out) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    const auto& m = *model->model;
    const dtr::FlatModel flat(m);
    const auto structured = dtr::value_iteration(m, epsilon, 100000);
    const auto reference = dtr::flat_value_iteration(flat, epsilon, 100000);
    const auto r = dtr::compare(structured.value, structured.policy, flat, reference, tol);
    out->max_gap = r.max_gap;
    out->worst_state = r.worst_state;
    out->states = r.states;
    out->policy_disagreements = r.policy_disagreements;
    out->passed = r.passed ? 1 : 0;
    return DTR_OK;
  });
}

dtr_status dtr_generate(const dtr_gen_params* params, char** document) {
  return guarded([&] {
    if (!params || !document) return fail(DTR_ERR_INVALID_ARGUMENT, "null argument");
    dtr::GenParams p;
    p.n_vars = params->n_vars;
    p.n_actions = params->n_actions;
    p.max_parents = params->max_parents;
    p.max_intra_arcs = params->max_intra_arcs;
    p.reward_vars = params->reward_vars;
    p.seed = params->seed;
    p.discount = params->discount;
    *document = copy_string(dtr::serialize_model(dtr::random_model(p)));
    return DTR_OK;
  });
}

}  // extern "C"
