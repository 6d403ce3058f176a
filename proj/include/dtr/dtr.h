#ifndef DTR_H
#define DTR_H

/* C interface to the factored MDP solver. All handles are opaque. Functions
 * returning dtr_status leave a message for dtr_last_error() on failure.
 * Strings returned through char** are owned by the caller and released with
 * dtr_string_free(). */

#include <stddef.h>

#if defined(_WIN32)
#  if defined(DTR_BUILDING_LIBRARY)
#    define DTR_API __declspec(dllexport)
#  else
#    define DTR_API __declspec(dllimport)
#  endif
#else
#  define DTR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dtr_status {
  DTR_OK = 0,
  DTR_ERR_SYNTAX = 1,
  DTR_ERR_VALIDATION = 2,
  DTR_ERR_UNKNOWN_ACTION = 3,
  DTR_ERR_UNKNOWN_VARIABLE = 4,
  DTR_ERR_INVALID_ARGUMENT = 5,
  DTR_ERR_STATE_SPACE_TOO_LARGE = 6,
  DTR_ERR_IO = 7,
  DTR_ERR_INTERNAL = 8
} dtr_status;

typedef struct dtr_model dtr_model;
typedef struct dtr_tree dtr_tree;
typedef struct dtr_solution dtr_solution;

typedef struct dtr_solve_options {
  double epsilon;    /* default 1e-4 */
  size_t max_iters;  /* default 10000 */
  int use_mpi;       /* 0: value iteration, 1: modified policy iteration */
  size_t eval_steps; /* policy backups per improvement step, default 5 */
} dtr_solve_options;

typedef struct dtr_gen_params {
  int n_vars;
  int n_actions;
  int max_parents;
  int max_intra_arcs;
  int reward_vars;
  unsigned long long seed;
  double discount;
} dtr_gen_params;

typedef struct dtr_comparison {
  double max_gap;
  size_t worst_state;
  size_t states;
  size_t policy_disagreements;
  int passed;
} dtr_comparison;

DTR_API const char* dtr_version(void);
/* Message of the last failure on the calling thread; empty when none. */
DTR_API const char* dtr_last_error(void);
DTR_API void dtr_string_free(char* s);

DTR_API void dtr_solve_options_init(dtr_solve_options* options);
DTR_API void dtr_gen_params_init(dtr_gen_params* params);

DTR_API dtr_status dtr_model_parse(const char* text, dtr_model** out);
DTR_API dtr_status dtr_model_load(const char* path, dtr_model** out);
DTR_API void dtr_model_free(dtr_model* model);
DTR_API dtr_status dtr_model_serialize(const dtr_model* model, char** out);
DTR_API size_t dtr_model_variable_count(const dtr_model* model);
DTR_API size_t dtr_model_action_count(const dtr_model* model);

/* Parses and validates; diagnostics (one per line) go to *report, which may be NULL. */
DTR_API dtr_status dtr_validate_document(const char* text, char** report);

/* Q-tree of `action` for the given value tree text; NULL value means the reward tree. */
DTR_API dtr_status dtr_regress(const dtr_model* model, const char* action, const char* value_tree, dtr_tree** out);

DTR_API dtr_status dtr_solve(const dtr_model* model, const dtr_solve_options* options, dtr_solution** out);
DTR_API dtr_status dtr_solve_flat(const dtr_model* model, const dtr_solve_options* options, char** report);
DTR_API void dtr_solution_free(dtr_solution* solution);
DTR_API size_t dtr_solution_iterations(const dtr_solution* solution);
DTR_API int dtr_solution_converged(const dtr_solution* solution);
DTR_API double dtr_solution_residual(const dtr_solution* solution);
/* Borrowed handles, valid until the solution is freed. */
DTR_API const dtr_tree* dtr_solution_value(const dtr_solution* solution);
DTR_API const dtr_tree* dtr_solution_policy(const dtr_solution* solution);
/* Value at a full state given as one value index per variable, in declaration
 * order. `state` may be NULL when the model has no variables. */
DTR_API dtr_status dtr_solution_evaluate(const dtr_solution* solution, const int* state, size_t n, double* value);

DTR_API dtr_status dtr_tree_format(const dtr_tree* tree, char** out);
DTR_API dtr_status dtr_tree_to_dot(const dtr_tree* tree, const char* name, char** out);
DTR_API size_t dtr_tree_leaf_count(const dtr_tree* tree);
DTR_API void dtr_tree_free(dtr_tree* tree);

/* Solves structurally and compares every state against flat value iteration. */
DTR_API dtr_status dtr_compare(const dtr_model* model, double epsilon, double tol, dtr_comparison* out);

DTR_API dtr_status dtr_generate(const dtr_gen_params* params, char** document);

#ifdef __cplusplus
}
#endif

#endif
