#include "dtr/factor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace dtr {

Factor::Factor(std::vector<int> scope, std::vector<int> arity, std::vector<double> table)
    : scope_(std::move(scope)), arity_(std::move(arity)), table_(std::move(table)) {
  if (scope_.size() != arity_.size()) throw Error(Errc::scope_error, "factor scope and arity sizes differ");
  if (!std::is_sorted(scope_.begin(), scope_.end()) ||
      std::adjacent_find(scope_.begin(), scope_.end()) != scope_.end()) {
    throw Error(Errc::scope_error, "factor scope must be sorted and duplicate-free");
  }
  std::size_t n = 1;
  for (int a : arity_) {
    if (a < 1) throw Error(Errc::scope_error, "factor arity must be positive");
    n *= static_cast<std::size_t>(a);
  }
  if (table_.size() != n) throw Error(Errc::scope_error, "factor table size does not match its scope");
}

Factor Factor::single(int var, std::vector<double> distribution) {
  const int a = static_cast<int>(distribution.size());
  return Factor({var}, {a}, std::move(distribution));
}

int Factor::position(int var) const {
  auto it = std::lower_bound(scope_.begin(), scope_.end(), var);
  return (it != scope_.end() && *it == var) ? static_cast<int>(it - scope_.begin()) : -1;
}

bool Factor::contains(int var) const { return position(var) >= 0; }

int Factor::arity_of(int var) const {
  const int p = position(var);
  if (p < 0) throw Error(Errc::scope_error, "variable not in factor scope");
  return arity_[static_cast<std::size_t>(p)];
}

std::vector<int> Factor::decode(std::size_t index) const {
  std::vector<int> values(scope_.size());
  for (std::size_t i = scope_.size(); i-- > 0;) {
    const auto a = static_cast<std::size_t>(arity_[i]);
    values[i] = static_cast<int>(index % a);
    index /= a;
  }
  return values;
}

std::size_t Factor::encode(std::span<const int> values) const {
  if (values.size() != scope_.size()) throw Error(Errc::scope_error, "factor row needs one value per scope variable");
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (values[i] < 0 || values[i] >= arity_[i]) throw Error(Errc::scope_error, "factor row value out of range");
    index = index * static_cast<std::size_t>(arity_[i]) + static_cast<std::size_t>(values[i]);
  }
  return index;
}

double Factor::probability(std::span<const std::pair<int, int>> fixed) const {
  const std::size_t n = scope_.size();
  if (fixed.size() == n) {
    // Fully assigned: one table entry, provided `fixed` covers the scope.
    std::size_t index = 0;
    std::size_t matched = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int var = scope_[i];
      const auto it = std::find_if(fixed.begin(), fixed.end(), [&](const auto& e) { return e.first == var; });
      if (it == fixed.end()) break;
      index = index * static_cast<std::size_t>(arity_[i]) + static_cast<std::size_t>(it->second);
      ++matched;
    }
    if (matched == n) return table_[index];
  }
  // Walks only the rows that agree with `fixed`, odometer style.
  thread_local std::vector<std::size_t> stride;
  thread_local std::vector<int> want;
  thread_local std::vector<int> counter;
  stride.assign(n, 1);
  for (std::size_t i = n; i-- > 1;) stride[i - 1] = stride[i] * static_cast<std::size_t>(arity_[i]);
  want.assign(n, -1);
  std::size_t base = 0;
  for (const auto& [var, value] : fixed) {
    const int p = position(var);
    if (p < 0) continue;
    want[static_cast<std::size_t>(p)] = value;
    base += static_cast<std::size_t>(value) * stride[static_cast<std::size_t>(p)];
  }
  counter.assign(n, 0);
  double sum = 0.0;
  std::size_t index = base;
  for (;;) {
    sum += table_[index];
    std::size_t j = n;
    while (j-- > 0) {
      if (want[j] >= 0) continue;
      if (++counter[j] < arity_[j]) {
        index += stride[j];
        break;
      }
      index -= stride[j] * static_cast<std::size_t>(counter[j] - 1);
      counter[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return sum;
}

Factor Factor::marginal(std::span<const int> keep) const {
  std::vector<int> scope;
  std::vector<int> arity;
  std::vector<std::size_t> src;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (std::find(keep.begin(), keep.end(), scope_[i]) != keep.end()) {
      scope.push_back(scope_[i]);
      arity.push_back(arity_[i]);
      src.push_back(i);
    }
  }
  if (scope.empty()) throw Error(Errc::scope_error, "marginal would leave an empty scope");
  std::size_t n = 1;
  for (int a : arity) n *= static_cast<std::size_t>(a);
  Factor out(scope, arity, std::vector<double>(n, 0.0));
  // Walk the rows in order, tracking the output row through per-position strides.
  std::vector<std::size_t> out_stride(scope_.size(), 0);
  std::size_t stride = 1;
  for (std::size_t j = scope.size(); j-- > 0;) {
    out_stride[src[j]] = stride;
    stride *= static_cast<std::size_t>(arity[j]);
  }
  std::vector<int> counter(scope_.size(), 0);
  std::size_t o = 0;
  for (std::size_t i = 0; i < table_.size(); ++i) {
    out.table_[o] += table_[i];
    for (std::size_t j = scope_.size(); j-- > 0;) {
      if (++counter[j] < arity_[j]) {
        o += out_stride[j];
        break;
      }
      o -= out_stride[j] * static_cast<std::size_t>(arity_[j] - 1);
      counter[j] = 0;
    }
  }
  return out;
}

Factor Factor::sum_out(int var) const {
  if (!contains(var)) throw Error(Errc::scope_error, "cannot sum out a variable outside the scope");
  std::vector<int> keep;
  for (int v : scope_) {
    if (v != var) keep.push_back(v);
  }
  return marginal(keep);
}

Factor Factor::product(const Factor& a, const Factor& b) {
  std::vector<int> scope;
  std::vector<int> arity;
  for (std::size_t i = 0; i < a.scope_.size(); ++i) {
    scope.push_back(a.scope_[i]);
    arity.push_back(a.arity_[i]);
  }
  for (std::size_t i = 0; i < b.scope_.size(); ++i) {
    if (a.contains(b.scope_[i])) throw Error(Errc::scope_error, "product of factors with overlapping scopes");
    scope.push_back(b.scope_[i]);
    arity.push_back(b.arity_[i]);
  }
  std::vector<std::size_t> perm(scope.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](std::size_t x, std::size_t y) { return scope[x] < scope[y]; });
  std::vector<int> sorted_scope;
  std::vector<int> sorted_arity;
  for (auto p : perm) {
    sorted_scope.push_back(scope[p]);
    sorted_arity.push_back(arity[p]);
  }
  Factor out(sorted_scope, sorted_arity, std::vector<double>(a.size() * b.size(), 0.0));
  std::vector<int> av(a.scope_.size());
  std::vector<int> bv(b.scope_.size());
  for (std::size_t i = 0; i < out.table_.size(); ++i) {
    const auto row = out.decode(i);
    for (std::size_t j = 0; j < av.size(); ++j) av[j] = row[static_cast<std::size_t>(out.position(a.scope_[j]))];
    for (std::size_t j = 0; j < bv.size(); ++j) bv[j] = row[static_cast<std::size_t>(out.position(b.scope_[j]))];
    out.table_[i] = a.at(av) * b.at(bv);
  }
  return out;
}

double Factor::total() const { return std::accumulate(table_.begin(), table_.end(), 0.0); }

double leaf_distance(const Factor& a, const Factor& b) {
  if (a.scope() != b.scope() || a.arity() != b.arity()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.table()[i] - b.table()[i]));
  return worst;
}

FactorSet::FactorSet(std::vector<Factor> factors) : factors_(std::move(factors)) {
  std::vector<int> seen;
  for (const auto& f : factors_) {
    if (f.scope().empty()) throw Error(Errc::scope_error, "factor with empty scope");
    for (int v : f.scope()) seen.push_back(v);
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) {
    throw Error(Errc::scope_error, "factor scopes overlap");
  }
  normalize_order();
}

void FactorSet::normalize_order() {
  std::sort(factors_.begin(), factors_.end(),
            [](const Factor& a, const Factor& b) { return a.scope().front() < b.scope().front(); });
  owner_.clear();
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    for (int v : factors_[i].scope()) {
      if (v < 0) throw Error(Errc::scope_error, "negative variable index in factor scope");
      if (owner_.size() <= static_cast<std::size_t>(v)) owner_.resize(static_cast<std::size_t>(v) + 1, -1);
      owner_[static_cast<std::size_t>(v)] = static_cast<int>(i);
    }
  }
}

int FactorSet::factor_of(int var) const {
  if (var < 0 || static_cast<std::size_t>(var) >= owner_.size()) return -1;
  return owner_[static_cast<std::size_t>(var)];
}

std::vector<int> FactorSet::recorded() const {
  std::vector<int> out;
  for (const auto& f : factors_) out.insert(out.end(), f.scope().begin(), f.scope().end());
  std::sort(out.begin(), out.end());
  return out;
}

FactorSet FactorSet::with(Factor f) const {
  auto fs = factors_;
  fs.push_back(std::move(f));
  return FactorSet(std::move(fs));
}

FactorSet FactorSet::without(std::span<const int> factor_indices) const {
  std::vector<Factor> fs;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (std::find(factor_indices.begin(), factor_indices.end(), static_cast<int>(i)) == factor_indices.end()) {
      fs.push_back(factors_[i]);
    }
  }
  return FactorSet(std::move(fs));
}

double leaf_distance(const FactorSet& a, const FactorSet& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, leaf_distance(a.factors()[i], b.factors()[i]));
  return worst;
}

std::string format_factor_set(const FactorSet& fs, const std::vector<std::string>& names, int precision) {
  std::string out = "{";
  char buf[64];
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const Factor& f = fs.factors()[i];
    if (i) out += "; ";
    out += "Pr(";
    for (std::size_t j = 0; j < f.scope().size(); ++j) {
      if (j) out += ",";
      const auto v = static_cast<std::size_t>(f.scope()[j]);
      out += (v < names.size() ? names[v] : "#" + std::to_string(v)) + "'";
    }
    out += ")=[";
    for (std::size_t j = 0; j < f.size(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.*g", j ? " " : "", precision, f.table()[j]);
      out += buf;
    }
    out += "]";
  }
  return out + "}";
}

}  // namespace dtr
