#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dtr::test {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixture_path(const std::string& name) { return std::string(DTR_FIXTURES) + "/" + name; }

MdpModel load_fixture(const std::string& name) { return parse_model(read_text(fixture_path(name))); }

GenParams small_params(std::uint64_t seed, int n_vars, int max_intra_arcs) {
  GenParams p;
  p.seed = seed;
  p.n_vars = n_vars;
  p.n_actions = 1 + static_cast<int>(seed % 4);
  p.max_parents = 3;
  p.max_intra_arcs = max_intra_arcs;
  p.reward_vars = std::min(3, n_vars);
  p.discount = 0.9;
  return p;
}

int var(const MdpModel& m, const std::string& name) {
  auto v = m.find_variable(name);
  if (!v) throw std::runtime_error("no variable " + name);
  return *v;
}

ActionId act(const MdpModel& m, const std::string& name) {
  auto a = m.find_action(name);
  if (!a) throw std::runtime_error("no action " + name);
  return *a;
}

VarRef pre(const MdpModel& m, const std::string& name) { return pre_ref(var(m, name)); }
VarRef post(const MdpModel& m, const std::string& name) { return post_ref(var(m, name)); }

Context ctx(const MdpModel& m, std::initializer_list<std::pair<const char*, const char*>> assignments) {
  Context c;
  for (const auto& [name, value] : assignments) {
    std::string n = name;
    bool primed = !n.empty() && n.back() == '\'';
    if (primed) n.pop_back();
    const int v = var(m, n);
    auto idx = m.variables[static_cast<std::size_t>(v)].value_index(value);
    if (!idx) throw std::runtime_error("no value " + std::string(value));
    c.assign(VarRef{v, primed}, *idx);
  }
  return c;
}

double gap(const StateSpace& space, const ValueTree& tree, const std::vector<double>& table) {
  const auto expanded = expand(space, tree);
  double worst = 0.0;
  for (std::size_t s = 0; s < table.size(); ++s) worst = std::max(worst, std::abs(expanded[s] - table[s]));
  return worst;
}

double marginal_gap(const MdpModel& model, ActionId action, const PartialQTree& pq) {
  double worst = 0.0;
  for_each_leaf(pq, [&](const Context& k, const FactorSet& fs) {
    for (const auto& f : fs.factors()) {
      const auto truth = conditional_joint(model, model.action(action), f.scope(), k);
      for (std::size_t i = 0; i < truth.size(); ++i) worst = std::max(worst, std::abs(truth[i] - f.table()[i]));
    }
  });
  return worst;
}

}  // namespace dtr::test
