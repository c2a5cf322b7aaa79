#pragma once

#include <Eigen/Dense>

#include <span>

#include "steinmp/factor_graph.hpp"

namespace steinmp {

// Both families share the profile form k(x,y) = f(z) with
// z = ||x-y||^2 / (2h): RBF uses f(z) = exp(-z), IMQ uses f(z) = 1/sqrt(1+z).
enum class KernelFamily { Rbf, Imq };

// Bandwidth selection. The median heuristic yields h = k^(alpha-1) * med^2
// where k is the number of coordinates the kernel acts on and med is the
// median pairwise distance among the current particles restricted to those
// coordinates; alpha = 1 is the plain heuristic.
struct BandwidthPolicy {
  enum class Kind { MedianHeuristic, Fixed };
  Kind kind = Kind::MedianHeuristic;
  double exponent = 1.0;  // alpha, MedianHeuristic only
  double value = 1.0;     // h, Fixed only

  static BandwidthPolicy median_heuristic(double alpha = 1.0) {
    return {Kind::MedianHeuristic, alpha, 1.0};
  }
  static BandwidthPolicy fixed(double h) {
    return {Kind::Fixed, 1.0, h};
  }
};

enum class KernelLocality { Global, SingleKernel, MultiKernel };

struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  BandwidthPolicy bandwidth{};
  KernelLocality locality = KernelLocality::Global;
};

// f(z) and f'(z) for the chosen family.
double kernel_profile(KernelFamily family, double z);
double kernel_profile_deriv(KernelFamily family, double z);

// M x M matrix of squared distances between rows, diagonal exactly zero.
Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& rows);

// h = k^(alpha-1) * med^2 over the M(M-1)/2 pairwise distances of the rows of
// `particles` (self-pairs excluded; even pair counts average the two central
// distances). Falls back to 1e-12 when the particles have collapsed.
// Throws for M < 2.
double median_bandwidth(const Eigen::MatrixXd& particles, double exponent);

// Same heuristic fed from a precomputed pairwise squared-distance matrix
// (upper triangle used); `coord_count` supplies the k in k^(alpha-1).
double median_bandwidth_from_sq(const Eigen::MatrixXd& sq_dists,
                                Eigen::Index coord_count, double exponent);

// Policy resolution against a particle snapshot. Fixed policies ignore the
// particles; the median heuristic returns 1.0 when fewer than two particles
// exist (the kernel value is then irrelevant).
double resolve_bandwidth(const BandwidthPolicy& policy,
                         const Eigen::MatrixXd& particles);

// Resolution reusing a squared-distance matrix the caller already has.
double resolve_bandwidth_from_sq(const BandwidthPolicy& policy,
                                 const Eigen::MatrixXd& sq_dists,
                                 Eigen::Index coord_count);

double kernel_eval(KernelFamily family, double h, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y);

// Gradient with respect to the second argument: -f'(z) * (x - y) / h.
Eigen::VectorXd kernel_grad_y(KernelFamily family, double h,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y);

struct LocalKernelValue {
  double value = 0.0;
  double grad_d = 0.0;  // d/dy_d of the local kernel
};

// Markov-blanket local kernel for node d evaluated on closure-ordered vectors
// x_S, y_S (indexed like graph.closure(d)).
//
// SingleKernel: f(||x_S - y_S||^2 / (2 h)) with `bandwidths` = {h}.
// MultiKernel:  (1/K) sum over incident factors F of
//               f(||x_F - y_F||^2 / (2 h_F)), one bandwidth per factor in
//               graph.node_factors(d) order.
LocalKernelValue local_kernel_eval(const KernelSpec& spec,
                                   const FactorGraph& graph, NodeId d,
                                   const Eigen::VectorXd& x_closure,
                                   const Eigen::VectorXd& y_closure,
                                   std::span<const double> bandwidths);

}  // namespace steinmp
