#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with the given arguments; stderr is merged into the output.
Run run(const std::string& args) {
  const std::string cmd = std::string("\"") + DTR_CLI + "\" " + args + " 2>&1";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string fixture(const std::string& name) { return std::string("\"") + DTR_FIXTURES + "/" + name + "\""; }

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("dtr_cli_test_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("validate exit codes") {
  CHECK(run("validate " + fixture("fig1.mdp")).code == 0);
  auto syntax = run("validate " + fixture("syntax_error.mdp"));
  CHECK(syntax.code == 1);
  CHECK(syntax.out.find("7:1") != std::string::npos);
  auto cycle = run("validate " + fixture("cycle.mdp"));
  CHECK(cycle.code == 1);
  CHECK(cycle.out.find("intra-slice cycle") != std::string::npos);
  CHECK(run("validate " + fixture("bad_discount.mdp")).code == 1);
}

TEST_CASE("usage errors") {
  CHECK(run("").code == 64);
  CHECK(run("frobnicate").code == 64);
  CHECK(run("regress " + fixture("fig1.mdp")).code == 64);
  CHECK(run("regress " + fixture("fig1.mdp") + " --action zz").code == 64);
  CHECK(run("solve " + fixture("fig1.mdp") + " --epsilon -1").code == 64);
}

TEST_CASE("regress prints the Q-tree of the first backup") {
  auto r = run("regress " + fixture("fig3c.mdp") + " --action b");
  REQUIRE(r.code == 0);
  CHECK(r.out ==
        "(test Y\n"
        "  (t (test W\n"
        "    (t (leaf 19))\n"
        "    (f (leaf 15.2))))\n"
        "  (f (test X\n"
        "    (t (test W\n"
        "      (t (leaf 9))\n"
        "      (f (leaf 7.2))))\n"
        "    (f (leaf 0)))))\n");
}

TEST_CASE("regress with an explicit value tree") {
  const auto dir = scratch_dir();
  const auto value = dir / "v.tree";
  std::ofstream(value) << "(test X (t (leaf 1)) (f (leaf 0)))\n";
  auto r = run("regress " + fixture("fig1.mdp") + " --action b --value \"" + value.string() + "\"");
  CHECK(r.code == 0);
  CHECK(r.out.find("(leaf 0.81)") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("compare on a generated model passes") {
  const auto dir = scratch_dir();
  const auto model = dir / "g.mdp";
  auto gen = run("gen --vars 6 --actions 3 --intra-arcs 2 --seed 5");
  REQUIRE(gen.code == 0);
  std::ofstream(model) << gen.out;
  auto r = run("compare \"" + model.string() + "\"");
  CHECK(r.code == 0);
  CHECK(r.out.find("result pass") != std::string::npos);
  std::istringstream lines(r.out);
  std::string key;
  double gap = 1;
  while (lines >> key) {
    if (key == "max_gap") lines >> gap;
  }
  CHECK(gap <= 1e-4);
  auto strict = run("compare \"" + model.string() + "\" --epsilon 5 --tol 0");
  CHECK(strict.code == 2);
  CHECK(strict.out.find("result fail") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("solve reports a timeout without failing") {
  auto r = run("solve " + fixture("fig1.mdp") + " --epsilon 0 --max-iters 3");
  CHECK(r.code == 0);
  CHECK(r.out.find("iterations 3\nconverged false\n") == 0);
}

TEST_CASE("solve variants") {
  auto vi = run("solve " + fixture("fig1.mdp"));
  CHECK(vi.code == 0);
  CHECK(vi.out.find("converged true") != std::string::npos);
  auto mpi = run("solve " + fixture("fig1.mdp") + " --mpi --eval-steps 3");
  CHECK(mpi.code == 0);
  CHECK(mpi.out.find("converged true") != std::string::npos);
  auto flat = run("solve " + fixture("fig1.mdp") + " --flat");
  CHECK(flat.code == 0);
  CHECK(flat.out.find("states 16") != std::string::npos);

  const auto dir = scratch_dir();
  CHECK(run("solve " + fixture("fig1.mdp") + " --dot \"" + dir.string() + "\"").code == 0);
  CHECK(std::filesystem::exists(dir / "value.dot"));
  CHECK(std::filesystem::exists(dir / "policy.dot"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("output is identical across runs") {
  const std::string gen = "gen --vars 7 --actions 2 --intra-arcs 3 --seed 99";
  CHECK(run(gen).out == run(gen).out);
  const std::string solve = "solve " + fixture("fig5.mdp");
  CHECK(run(solve).out == run(solve).out);
}
