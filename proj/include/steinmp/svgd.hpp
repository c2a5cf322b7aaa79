#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "steinmp/factor_graph.hpp"
#include "steinmp/kernels.hpp"
#include "steinmp/metrics.hpp"

namespace steinmp {

struct AdagradConfig {
  double step0 = 1.0;   // initial step size
  double fudge = 1e-6;  // added to sqrt of the accumulator
};

struct SvgdConfig {
  int iterations = 0;
  KernelSpec kernel{};  // locality must be Global
  AdagradConfig step{};
  std::uint64_t seed = 0;
};

// Empirical optimal transform split into the kernel smoothed gradient G and
// the repulsive force R; the applied update is G + R elementwise.
struct UpdateDecomposition {
  Eigen::MatrixXd smoothed_grad;  // G, M x D
  Eigen::MatrixXd repulsive;      // R, M x D
  Eigen::MatrixXd phi() const { return smoothed_grad + repulsive; }
};

// G[i] = (1/M) sum_j k(x_i, x_j) grad log p(x_j)
// R[i] = (1/M) sum_j grad_{x_j} k(x_i, x_j)
// The j == i term is included in both sums (its repulsive part is zero).
// Bandwidth is resolved from the given particle snapshot. Throws on
// non-finite gradients, naming the offending particle.
UpdateDecomposition compute_phi(const Eigen::MatrixXd& particles,
                                const FactorGraph& graph,
                                const KernelSpec& kernel);

// Per-element Adagrad: accum += phi^2; move = step0 * phi / (fudge +
// sqrt(accum)). The accumulator persists across calls.
class AdagradState {
 public:
  AdagradState(Eigen::Index particles, Eigen::Index dimension)
      : accum_(Eigen::MatrixXd::Zero(particles, dimension)) {}

  // Applies the update in place and returns max |move|.
  double apply(Eigen::MatrixXd& particles, const Eigen::MatrixXd& phi,
               const AdagradConfig& cfg);

  // Same recurrence restricted to one coordinate column.
  double apply_column(Eigen::MatrixXd& particles, NodeId d,
                      const Eigen::VectorXd& phi_d, const AdagradConfig& cfg);

  const Eigen::MatrixXd& accumulator() const { return accum_; }

 private:
  Eigen::MatrixXd accum_;
};

// Runs `iterations` SVGD steps. Emits a DiagnosticsRecord before the first
// step (iteration 0) and after every step; deterministic given (config, init).
Eigen::MatrixXd run_svgd(const SvgdConfig& config, const FactorGraph& graph,
                         Eigen::MatrixXd particles,
                         const DiagnosticsSink& sink = {});

}  // namespace steinmp
