#pragma once

// Shared helpers for the test binaries.

#include <cstddef>
#include <string>
#include <vector>

#include "dtr/io.hpp"
#include "dtr/model.hpp"
#include "dtr/oracle.hpp"
#include "dtr/regression.hpp"

namespace dtr::test {

std::string read_text(const std::string& path);
std::string fixture_path(const std::string& name);
MdpModel load_fixture(const std::string& name);

/// Generator settings used by the randomized suites: binary variables,
/// at most 4 actions and 3 intra-slice arcs per action.
GenParams small_params(std::uint64_t seed, int n_vars, int max_intra_arcs);

int var(const MdpModel& m, const std::string& name);
ActionId act(const MdpModel& m, const std::string& name);
VarRef pre(const MdpModel& m, const std::string& name);
VarRef post(const MdpModel& m, const std::string& name);
Context ctx(const MdpModel& m, std::initializer_list<std::pair<const char*, const char*>> assignments);

/// Largest gap between a tree and a per-state table.
double gap(const StateSpace& space, const ValueTree& tree, const std::vector<double>& table);

/// Largest gap between each factor at each leaf of `pq` and the oracle's
/// conditional joint for the leaf's context.
double marginal_gap(const MdpModel& model, ActionId action, const PartialQTree& pq);

}  // namespace dtr::test
