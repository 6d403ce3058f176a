#include <cctype>
#include <charconv>
#include <optional>
#include <set>

#include "dtr/io.hpp"

namespace dtr {

SyntaxError::SyntaxError(int line, int column, const std::string& message)
    : Error(Errc::syntax_error, std::to_string(line) + ":" + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diagnostics) {
  std::string out = "model is invalid";
  for (const auto& d : diagnostics) out += "\n  " + d.str();
  return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(Errc::validation_error, join_diagnostics(diagnostics)), diagnostics_(std::move(diagnostics)) {}

namespace {

struct Token {
  enum Kind { word, punct, end } kind = end;
  std::string text;
  int line = 1;
  int column = 1;
};

bool is_punct(char c) { return c == '(' || c == ')' || c == '{' || c == '}' || c == '[' || c == ']' || c == ':'; }

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  int line = 1;
  int column = 1;
  std::size_t i = 0;
  auto advance = [&] {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
    ++i;
  };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '#') {
      while (i < text.size() && text[i] != '\n') advance();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    Token t;
    t.line = line;
    t.column = column;
    if (is_punct(c)) {
      t.kind = Token::punct;
      t.text = std::string(1, c);
      advance();
    } else {
      t.kind = Token::word;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && !is_punct(text[i]) && text[i] != '#') {
        t.text += text[i];
        advance();
      }
    }
    out.push_back(std::move(t));
  }
  Token e;
  e.line = line;
  e.column = column;
  out.push_back(e);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (t.kind != Token::end) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Token::end; }

  [[noreturn]] void fail(const Token& at, const std::string& message) const {
    throw SyntaxError(at.line, at.column, message);
  }

  bool accept(std::string_view punct) {
    if (peek().kind == Token::punct && peek().text == punct) {
      next();
      return true;
    }
    return false;
  }

  void expect(std::string_view punct) {
    const Token& t = peek();
    if (!accept(punct)) fail(t, "expected '" + std::string(punct) + "', found " + describe(t));
  }

  const Token& word(std::string_view what) {
    const Token& t = next();
    if (t.kind != Token::word) fail(t, "expected " + std::string(what) + ", found " + describe(t));
    return t;
  }

  void keyword(std::string_view kw) {
    const Token& t = word("'" + std::string(kw) + "'");
    if (t.text != kw) fail(t, "expected '" + std::string(kw) + "', found '" + t.text + "'");
  }

  double number() {
    const Token& t = word("a number");
    double v = 0.0;
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) fail(t, "expected a number, found '" + t.text + "'");
    return v;
  }

  static std::string describe(const Token& t) {
    if (t.kind == Token::end) return "end of input";
    return "'" + t.text + "'";
  }

  VarRef ref(const MdpModel& model, const Token& t) const {
    std::string name = t.text;
    bool post = false;
    if (!name.empty() && name.back() == '\'') {
      post = true;
      name.pop_back();
    }
    auto v = model.find_variable(name);
    if (!v) fail(t, "unknown variable '" + name + "'");
    return VarRef{*v, post};
  }

  // tree := "(" "leaf" payload ")" | "(" "test" ref ("(" value tree ")")+ ")"
  template <class L, class LeafFn>
  DecisionTree<L> tree(const MdpModel& model, LeafFn&& leaf) {
    expect("(");
    const Token& head = word("'leaf' or 'test'");
    if (head.text == "leaf") {
      L payload = leaf();
      expect(")");
      return DecisionTree<L>::leaf(std::move(payload));
    }
    if (head.text != "test") fail(head, "expected 'leaf' or 'test', found '" + head.text + "'");
    const Token& vt = word("a variable");
    const VarRef r = ref(model, vt);
    const Variable& var = model.variables[static_cast<std::size_t>(r.var)];
    std::vector<std::optional<DecisionTree<L>>> kids(var.values.size());
    int seen = 0;
    while (accept("(")) {
      const Token& val = word("a value");
      auto idx = var.value_index(val.text);
      if (!idx) fail(val, "'" + val.text + "' is not a value of " + var.name);
      if (kids[static_cast<std::size_t>(*idx)]) fail(val, "value '" + val.text + "' repeated");
      kids[static_cast<std::size_t>(*idx)] = tree<L>(model, leaf);
      ++seen;
      expect(")");
    }
    if (seen != var.arity()) {
      for (std::size_t i = 0; i < kids.size(); ++i) {
        if (!kids[i]) fail(peek(), "test of " + vt.text + " has no branch for value '" + var.values[i] + "'");
      }
    }
    expect(")");
    std::vector<DecisionTree<L>> children;
    for (auto& k : kids) children.push_back(std::move(*k));
    return DecisionTree<L>::node(r, std::move(children));
  }

  double leaf_number() {
    const double v = number();
    if (peek().kind == Token::word) fail(peek(), "value leaf takes exactly one number");
    return v;
  }

  Distribution leaf_distribution() {
    Distribution d;
    while (peek().kind == Token::word) d.push_back(number());
    if (d.empty()) fail(peek(), "distribution leaf needs at least one probability");
    return d;
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

struct Parsed {
  MdpModel model;
  std::vector<Diagnostic> missing;
};

Parsed parse_document(std::string_view text) {
  Parser p(text);
  Parsed out;
  MdpModel& model = out.model;
  bool have_discount = false;
  bool have_reward = false;
  std::vector<std::vector<bool>> present;
  while (!p.at_end()) {
    const Token& kw = p.word("a section keyword");
    if (kw.text == "discount") {
      if (have_discount) p.fail(kw, "discount declared twice");
      model.discount = p.number();
      have_discount = true;
    } else if (kw.text == "var") {
      if (!model.actions.empty() || have_reward) p.fail(kw, "variables must be declared before reward and actions");
      const Token& name = p.word("a variable name");
      if (name.text.find('\'') != std::string::npos) p.fail(name, "variable names may not contain an apostrophe");
      if (model.find_variable(name.text)) p.fail(name, "variable '" + name.text + "' declared twice");
      Variable v{name.text, {}};
      p.expect("{");
      while (!p.accept("}")) {
        const Token& val = p.word("a value name or '}'");
        if (v.value_index(val.text)) p.fail(val, "value '" + val.text + "' repeated");
        v.values.push_back(val.text);
      }
      if (v.values.size() < 2) p.fail(name, "variable '" + name.text + "' needs at least two values");
      model.variables.push_back(std::move(v));
    } else if (kw.text == "reward") {
      if (have_reward) p.fail(kw, "reward declared twice");
      model.reward = reduce(p.tree<double>(model, [&] { return p.leaf_number(); }));
      have_reward = true;
    } else if (kw.text == "action") {
      const Token& name = p.word("an action name");
      if (model.find_action(name.text)) p.fail(name, "action '" + name.text + "' declared twice");
      ActionNetwork action;
      action.name = name.text;
      action.cpts.resize(model.variables.size());
      std::vector<bool> have(model.variables.size(), false);
      p.expect("{");
      while (!p.accept("}")) {
        p.keyword("cpt");
        const Token& target = p.word("a post-action variable");
        const VarRef r = p.ref(model, target);
        if (!r.post) p.fail(target, "cpt target must be primed, as in " + target.text + "'");
        if (have[static_cast<std::size_t>(r.var)]) p.fail(target, "second cpt for " + target.text);
        Cpt cpt;
        bool explicit_parents = false;
        if (p.accept("[")) {
          p.keyword("parents");
          p.expect(":");
          explicit_parents = true;
          while (!p.accept("]")) {
            const Token& pt = p.word("a parent or ']'");
            cpt.parents.push_back(p.ref(model, pt));
          }
        }
        cpt.tree = reduce(p.tree<Distribution>(model, [&] { return p.leaf_distribution(); }));
        if (!explicit_parents) {
          for (VarRef t : tested_variables(cpt.tree)) cpt.parents.push_back(t);
        }
        action.cpts[static_cast<std::size_t>(r.var)] = std::move(cpt);
        have[static_cast<std::size_t>(r.var)] = true;
      }
      for (std::size_t v = 0; v < have.size(); ++v) {
        if (!have[v]) {
          out.missing.push_back({"action '" + action.name + "'", "missing cpt for " + model.variables[v].name + "'"});
        }
      }
      model.actions.push_back(std::move(action));
    } else {
      p.fail(kw, "unknown section '" + kw.text + "'");
    }
  }
  return out;
}

}  // namespace

MdpModel parse_model_unchecked(std::string_view text) { return parse_document(text).model; }

MdpModel parse_model(std::string_view text) {
  Parsed parsed = parse_document(text);
  std::vector<Diagnostic> diagnostics = parsed.missing;
  if (diagnostics.empty()) diagnostics = validate(parsed.model);
  if (!diagnostics.empty()) throw ValidationError(std::move(diagnostics));
  return std::move(parsed.model);
}

ValueTree parse_value_tree(const MdpModel& model, std::string_view text) {
  Parser p(text);
  ValueTree t = reduce(p.tree<double>(model, [&] { return p.leaf_number(); }));
  if (!p.at_end()) p.fail(p.peek(), "unexpected text after tree");
  for (VarRef r : tested_variables(t)) {
    if (r.post) throw Error(Errc::invalid_argument, "value tree may only test pre-action variables");
  }
  return t;
}

}  // namespace dtr
