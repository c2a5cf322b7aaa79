#pragma once

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace steinmp {

// Index of a variable node, in [0, D) of the owning graph.
using NodeId = int;

// Read-only vector view that also binds matrix rows without copying.
using VecView = Eigen::Ref<const Eigen::VectorXd, 0, Eigen::InnerStride<>>;

// Differentiable log-potential over a factor's scope. Receives the
// scope-ordered values x_F, writes d(log psi)/dx_F into `grad` (same length
// as the scope) and returns log psi(x_F). Must be pure: no mutation
// observable across calls.
using LogPotential =
    std::function<double(std::span<const double> x_f, std::span<double> grad)>;

struct Factor {
  std::vector<NodeId> scope;  // distinct node ids, order fixes the argument order
  LogPotential log_potential;
};

// Precomputed Markov-blanket view of one node. `closure` is S_d = {d} u Gamma_d
// in ascending order; `blanket` is Gamma_d. For every incident factor the
// positions of its scope inside `closure` and the position of d inside the
// factor's scope are cached, since the message-passing engine needs them for
// every particle pair on every sweep.
struct NodeLocality {
  std::vector<NodeId> closure;                         // S_d, sorted
  std::vector<NodeId> blanket;                         // Gamma_d, sorted
  int self_pos = 0;                                    // index of d in closure
  std::vector<int> factors;                            // incident factor indices
  std::vector<std::vector<int>> scope_pos_in_closure;  // per incident factor
  std::vector<int> self_pos_in_factor;                 // per incident factor
};

// Factorized unnormalized density p(x) ~ prod_F psi_F(x_F) over D continuous
// variables. Immutable after construction and safe to share across threads.
class FactorGraph {
 public:
  // Validates scopes (in range, no duplicates within a factor) and precomputes
  // node->factor lists and Markov blankets. Throws std::invalid_argument on
  // malformed input.
  FactorGraph(int dimension, std::vector<Factor> factors);

  int dimension() const { return dimension_; }
  const std::vector<Factor>& factors() const { return factors_; }
  const NodeLocality& locality(NodeId d) const;
  const std::vector<int>& node_factors(NodeId d) const {
    return locality(d).factors;
  }
  const std::vector<NodeId>& blanket(NodeId d) const {
    return locality(d).blanket;
  }
  const std::vector<NodeId>& closure(NodeId d) const {
    return locality(d).closure;
  }

  // Unnormalized log density sum_F log psi_F(x_F).
  double log_density(const VecView& x) const;

  // Full score: component d is sum_{F containing d} d(log psi_F)/dx_d.
  Eigen::VectorXd grad_log_density(const VecView& x) const;

  // Score of the conditional p(x_d | x_{Gamma_d}); identical to
  // grad_log_density(x)[d] but touches only the factors incident to d.
  double conditional_grad(const VecView& x, NodeId d) const;

 private:
  void check_node(NodeId d) const;

  int dimension_;
  std::vector<Factor> factors_;
  std::vector<NodeLocality> locality_;
};

inline FactorGraph build_graph(int dimension, std::vector<Factor> factors) {
  return FactorGraph(dimension, std::move(factors));
}

}  // namespace steinmp
