#include <charconv>
#include <cstdio>
#include <map>

#include "dtr/io.hpp"

namespace dtr {

namespace {

std::string number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

std::string short_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string distribution(const Distribution& d) {
  std::string out;
  for (std::size_t i = 0; i < d.size(); ++i) out += (i ? " " : "") + number(d[i]);
  return out;
}

std::vector<std::string> variable_names(const MdpModel& model) {
  std::vector<std::string> names;
  for (const auto& v : model.variables) names.push_back(v.name);
  return names;
}

template <class L, class LeafText>
void write_tree(const MdpModel& model, const DecisionTree<L>& t, int indent, std::string& out, LeafText&& leaf) {
  if (t.is_leaf()) {
    out += "(leaf " + leaf(t.payload()) + ")";
    return;
  }
  const Variable& var = model.variables.at(static_cast<std::size_t>(t.test().var));
  out += "(test " + model.ref_name(t.test());
  for (int i = 0; i < t.arity(); ++i) {
    out += "\n" + std::string(static_cast<std::size_t>(indent + 2), ' ') + "(" + var.values[static_cast<std::size_t>(i)] + " ";
    write_tree(model, t.child(i), indent + 2, out, leaf);
    out += ")";
  }
  out += ")";
}

template <class L, class LeafText>
std::string tree_text(const MdpModel& model, const DecisionTree<L>& t, int indent, LeafText&& leaf) {
  std::string out;
  write_tree(model, t, indent, out, leaf);
  return out;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

template <class L, class LeafText>
std::string dot(const MdpModel& model, const DecisionTree<L>& tree, std::string_view name, LeafText&& leaf) {
  std::string out = "digraph \"" + dot_escape(std::string(name)) + "\" {\n";
  int next_id = 0;
  auto rec = [&](auto&& self, const DecisionTree<L>& t) -> int {
    const int id = next_id++;
    if (t.is_leaf()) {
      out += "  n" + std::to_string(id) + " [shape=box, label=\"" + dot_escape(leaf(t.payload())) + "\"];\n";
      return id;
    }
    out += "  n" + std::to_string(id) + " [shape=ellipse, label=\"" + dot_escape(model.ref_name(t.test())) + "\"];\n";
    const Variable& var = model.variables.at(static_cast<std::size_t>(t.test().var));
    for (int i = 0; i < t.arity(); ++i) {
      const int child = self(self, t.child(i));
      out += "  n" + std::to_string(id) + " -> n" + std::to_string(child) + " [label=\"" +
             dot_escape(var.values[static_cast<std::size_t>(i)]) + "\"];\n";
    }
    return id;
  };
  rec(rec, tree);
  return out + "}\n";
}

}  // namespace

std::string serialize_model(const MdpModel& model) {
  std::string out = "discount " + number(model.discount) + "\n\n";
  for (const auto& v : model.variables) {
    out += "var " + v.name + " {";
    for (const auto& val : v.values) out += " " + val;
    out += " }\n";
  }
  out += "\nreward " + tree_text(model, model.reward, 0, [](double v) { return number(v); }) + "\n";
  for (const auto& action : model.actions) {
    out += "\naction " + action.name + " {\n";
    for (std::size_t x = 0; x < action.cpts.size(); ++x) {
      const Cpt& cpt = action.cpts[x];
      out += "  cpt " + model.ref_name(post_ref(static_cast<int>(x))) + " [parents:";
      for (VarRef p : cpt.parents) out += " " + model.ref_name(p);
      out += "] " + tree_text(model, cpt.tree, 2, [](const Distribution& d) { return distribution(d); }) + "\n";
    }
    out += "}\n";
  }
  return out;
}

std::string format_tree(const MdpModel& model, const ValueTree& tree) {
  return tree_text(model, tree, 0, [](double v) { return number(v); });
}

std::string format_tree(const MdpModel& model, const PolicyTree& tree) {
  return tree_text(model, tree, 0, [&](ActionId a) { return model.action(a).name; });
}

std::string format_tree(const MdpModel& model, const PartialQTree& tree) {
  const auto names = variable_names(model);
  return tree_text(model, tree, 0, [&](const FactorSet& fs) { return format_factor_set(fs, names); });
}

std::string export_dot(const MdpModel& model, const ValueTree& tree, std::string_view name) {
  return dot(model, tree, name, [](double v) { return short_number(v); });
}

std::string export_dot(const MdpModel& model, const PolicyTree& tree, std::string_view name) {
  return dot(model, tree, name, [&](ActionId a) { return model.action(a).name; });
}

std::string export_dot(const MdpModel& model, const PartialQTree& tree, std::string_view name) {
  const auto names = variable_names(model);
  return dot(model, tree, name, [&](const FactorSet& fs) { return format_factor_set(fs, names, 6); });
}

}  // namespace dtr
