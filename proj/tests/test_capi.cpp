#include "doctest.h"

#include <cstring>
#include <string>

#include "dtr/dtr.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  dtr_string_free(s);
  return out;
}

const std::string kFixtures = DTR_FIXTURES;

}  // namespace

TEST_CASE("version and defaults") {
  CHECK(std::strlen(dtr_version()) > 0);
  dtr_solve_options o;
  dtr_solve_options_init(&o);
  CHECK(o.epsilon == 1e-4);
  CHECK(o.eval_steps == 5);
  CHECK(o.use_mpi == 0);
  dtr_gen_params g;
  dtr_gen_params_init(&g);
  CHECK(g.discount == 0.9);
  CHECK(g.n_vars > 0);
}

TEST_CASE("load, inspect and serialize a model") {
  dtr_model* m = nullptr;
  REQUIRE(dtr_model_load((kFixtures + "/fig1.mdp").c_str(), &m) == DTR_OK);
  CHECK(dtr_model_variable_count(m) == 4);
  CHECK(dtr_model_action_count(m) == 2);
  char* text = nullptr;
  REQUIRE(dtr_model_serialize(m, &text) == DTR_OK);
  const std::string doc = take(text);
  dtr_model* again = nullptr;
  CHECK(dtr_model_parse(doc.c_str(), &again) == DTR_OK);
  dtr_model_free(again);
  dtr_model_free(m);
}

TEST_CASE("errors map to status codes with a message") {
  dtr_model* m = nullptr;
  CHECK(dtr_model_parse("discount 0.5\nvar X {", &m) == DTR_ERR_SYNTAX);
  CHECK(m == nullptr);
  CHECK(std::string(dtr_last_error()).size() > 0);
  CHECK(dtr_model_load((kFixtures + "/bad_discount.mdp").c_str(), &m) == DTR_ERR_VALIDATION);
  CHECK(dtr_model_load((kFixtures + "/does_not_exist.mdp").c_str(), &m) == DTR_ERR_IO);
  CHECK(dtr_model_parse(nullptr, &m) == DTR_ERR_INVALID_ARGUMENT);
}

TEST_CASE("validate a document") {
  char* report = nullptr;
  CHECK(dtr_validate_document("discount 0.5\nvar X { t f }\nreward (leaf 1)\naction a {\n  cpt X' [parents: X] (test X (t (leaf 0.5 0.4)) (f (leaf 0 1)))\n}\n", &report) ==
        DTR_ERR_VALIDATION);
  CHECK(take(report).find("unnormalized leaf") != std::string::npos);
  CHECK(dtr_validate_document("discount 0.5\nreward (leaf 1)\n", nullptr) == DTR_OK);
}

TEST_CASE("regress through the C interface") {
  dtr_model* m = nullptr;
  REQUIRE(dtr_model_load((kFixtures + "/fig1.mdp").c_str(), &m) == DTR_OK);
  dtr_tree* q = nullptr;
  REQUIRE(dtr_regress(m, "b", nullptr, &q) == DTR_OK);
  CHECK(dtr_tree_leaf_count(q) == 5);
  char* text = nullptr;
  REQUIRE(dtr_tree_format(q, &text) == DTR_OK);
  CHECK(take(text).rfind("(test Y", 0) == 0);
  char* dot = nullptr;
  REQUIRE(dtr_tree_to_dot(q, "q", &dot) == DTR_OK);
  CHECK(take(dot).rfind("digraph", 0) == 0);
  dtr_tree_free(q);
  CHECK(dtr_regress(m, "nope", nullptr, &q) == DTR_ERR_UNKNOWN_ACTION);
  CHECK(dtr_regress(m, "a", "(test Q (t (leaf 1)) (f (leaf 0)))", &q) == DTR_ERR_SYNTAX);
  dtr_model_free(m);
}

TEST_CASE("solve and evaluate") {
  dtr_model* m = nullptr;
  REQUIRE(dtr_model_load((kFixtures + "/selfloop.mdp").c_str(), &m) == DTR_OK);
  dtr_solve_options o;
  dtr_solve_options_init(&o);
  o.epsilon = 1e-6;
  dtr_solution* s = nullptr;
  REQUIRE(dtr_solve(m, &o, &s) == DTR_OK);
  CHECK(dtr_solution_converged(s) == 1);
  CHECK(dtr_solution_iterations(s) > 0);
  CHECK(dtr_solution_residual(s) >= 0.0);
  double v = 0;
  REQUIRE(dtr_solution_evaluate(s, nullptr, 0, &v) == DTR_OK);
  CHECK(std::abs(v - 10.0) < 1e-6);
  CHECK(dtr_tree_leaf_count(dtr_solution_value(s)) == 1);
  CHECK(dtr_tree_leaf_count(dtr_solution_policy(s)) == 1);
  dtr_solution_free(s);
  dtr_model_free(m);

  REQUIRE(dtr_model_load((kFixtures + "/fig1.mdp").c_str(), &m) == DTR_OK);
  o.use_mpi = 1;
  REQUIRE(dtr_solve(m, &o, &s) == DTR_OK);
  const int state[] = {0, 0, 0, 0};
  CHECK(dtr_solution_evaluate(s, state, 4, &v) == DTR_OK);
  CHECK(dtr_solution_evaluate(s, state, 3, &v) == DTR_ERR_INVALID_ARGUMENT);
  dtr_solution_free(s);
  char* report = nullptr;
  CHECK(dtr_solve_flat(m, &o, &report) == DTR_OK);
  CHECK(take(report).size() > 0);
  dtr_model_free(m);
}

TEST_CASE("generate and compare") {
  dtr_gen_params g;
  dtr_gen_params_init(&g);
  g.n_vars = 6;
  g.seed = 12;
  char* doc = nullptr;
  REQUIRE(dtr_generate(&g, &doc) == DTR_OK);
  const std::string text = take(doc);
  char* doc2 = nullptr;
  REQUIRE(dtr_generate(&g, &doc2) == DTR_OK);
  CHECK(take(doc2) == text);
  dtr_model* m = nullptr;
  REQUIRE(dtr_model_parse(text.c_str(), &m) == DTR_OK);
  dtr_comparison c;
  REQUIRE(dtr_compare(m, 1e-4, 1e-4, &c) == DTR_OK);
  CHECK(c.passed == 1);
  CHECK(c.states == 64);
  CHECK(c.max_gap <= 1e-4);
  dtr_model_free(m);
  g.n_vars = 0;
  CHECK(dtr_generate(&g, &doc) == DTR_ERR_INVALID_ARGUMENT);
}
