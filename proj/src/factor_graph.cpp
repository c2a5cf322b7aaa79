#include "steinmp/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace steinmp {

namespace {

// Scratch for factor evaluation; scopes are small, so keep one buffer per
// thread instead of allocating in the hot path.
struct Scratch {
  std::vector<double> x;
  std::vector<double> grad;
};

Scratch& scratch() {
  thread_local Scratch s;
  return s;
}

}  // namespace

FactorGraph::FactorGraph(int dimension, std::vector<Factor> factors)
    : dimension_(dimension), factors_(std::move(factors)) {
  if (dimension_ < 1) {
    throw std::invalid_argument("FactorGraph: dimension must be >= 1");
  }
  std::vector<std::set<NodeId>> blanket_sets(dimension_);
  std::vector<std::vector<int>> node_factors(dimension_);
  for (std::size_t f = 0; f < factors_.size(); ++f) {
    const auto& scope = factors_[f].scope;
    if (scope.empty()) {
      throw std::invalid_argument("FactorGraph: empty factor scope");
    }
    std::set<NodeId> seen;
    for (NodeId d : scope) {
      if (d < 0 || d >= dimension_) {
        throw std::invalid_argument("FactorGraph: scope index " +
                                    std::to_string(d) + " out of range");
      }
      if (!seen.insert(d).second) {
        throw std::invalid_argument("FactorGraph: duplicate node " +
                                    std::to_string(d) + " in factor scope");
      }
    }
    for (NodeId d : scope) {
      node_factors[d].push_back(static_cast<int>(f));
      for (NodeId t : scope) {
        if (t != d) blanket_sets[d].insert(t);
      }
    }
  }

  locality_.resize(dimension_);
  for (NodeId d = 0; d < dimension_; ++d) {
    NodeLocality& loc = locality_[d];
    loc.blanket.assign(blanket_sets[d].begin(), blanket_sets[d].end());
    loc.closure = loc.blanket;
    loc.closure.insert(
        std::lower_bound(loc.closure.begin(), loc.closure.end(), d), d);
    loc.self_pos = static_cast<int>(
        std::lower_bound(loc.closure.begin(), loc.closure.end(), d) -
        loc.closure.begin());
    loc.factors = node_factors[d];
    for (int f : loc.factors) {
      const auto& scope = factors_[f].scope;
      std::vector<int> pos(scope.size());
      int self = 0;
      for (std::size_t i = 0; i < scope.size(); ++i) {
        pos[i] = static_cast<int>(
            std::lower_bound(loc.closure.begin(), loc.closure.end(),
                             scope[i]) -
            loc.closure.begin());
        if (scope[i] == d) self = static_cast<int>(i);
      }
      loc.scope_pos_in_closure.push_back(std::move(pos));
      loc.self_pos_in_factor.push_back(self);
    }
  }
}

const NodeLocality& FactorGraph::locality(NodeId d) const {
  check_node(d);
  return locality_[d];
}

void FactorGraph::check_node(NodeId d) const {
  if (d < 0 || d >= dimension_) {
    throw std::invalid_argument("FactorGraph: node " + std::to_string(d) +
                                " out of range");
  }
}

double FactorGraph::log_density(const VecView& x) const {
  if (x.size() != dimension_) {
    throw std::invalid_argument("FactorGraph: input length != dimension");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("FactorGraph: non-finite input");
  }
  Scratch& s = scratch();
  double total = 0.0;
  for (const Factor& f : factors_) {
    const std::size_t n = f.scope.size();
    s.x.resize(n);
    s.grad.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) s.x[i] = x[f.scope[i]];
    total += f.log_potential(s.x, s.grad);
  }
  return total;
}

Eigen::VectorXd FactorGraph::grad_log_density(const VecView& x) const {
  if (x.size() != dimension_) {
    throw std::invalid_argument("FactorGraph: input length != dimension");
  }
  if (!x.allFinite()) {
    throw std::invalid_argument("FactorGraph: non-finite input");
  }
  Scratch& s = scratch();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(dimension_);
  for (const Factor& f : factors_) {
    const std::size_t n = f.scope.size();
    s.x.resize(n);
    s.grad.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) s.x[i] = x[f.scope[i]];
    f.log_potential(s.x, s.grad);
    for (std::size_t i = 0; i < n; ++i) g[f.scope[i]] += s.grad[i];
  }
  return g;
}

double FactorGraph::conditional_grad(const VecView& x, NodeId d) const {
  check_node(d);
  Scratch& s = scratch();
  const NodeLocality& loc = locality_[d];
  double g = 0.0;
  for (std::size_t k = 0; k < loc.factors.size(); ++k) {
    const Factor& f = factors_[loc.factors[k]];
    const std::size_t n = f.scope.size();
    s.x.resize(n);
    s.grad.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double v = x[f.scope[i]];
      if (!std::isfinite(v)) {
        throw std::invalid_argument("FactorGraph: non-finite input");
      }
      s.x[i] = v;
    }
    f.log_potential(s.x, s.grad);
    g += s.grad[loc.self_pos_in_factor[k]];
  }
  return g;
}

}  // namespace steinmp
