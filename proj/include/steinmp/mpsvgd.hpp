#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "steinmp/factor_graph.hpp"
#include "steinmp/kernels.hpp"
#include "steinmp/metrics.hpp"
#include "steinmp/svgd.hpp"

namespace steinmp {

// Sequential mirrors the nested per-node loop: node d's update is computed
// from particle values that already include this sweep's updates of nodes
// < d. Jacobi computes every node update from the sweep-start snapshot and
// applies them together.
enum class SweepMode { Sequential, Jacobi };

struct MpSvgdConfig {
  int iterations = 0;
  KernelSpec kernel{};  // locality must be SingleKernel or MultiKernel
  AdagradConfig step{};
  SweepMode sweep = SweepMode::Sequential;
  std::uint64_t seed = 0;
};

// One-dimensional transform for node d, phi = G_d + R_d elementwise.
struct NodeUpdate {
  NodeId node = 0;
  Eigen::VectorXd phi;            // per particle
  Eigen::VectorXd smoothed_grad;  // G_d
  Eigen::VectorXd repulsive;      // R_d
};

// G_d[i] = (1/M) sum_j k_d(x_i|S_d, x_j|S_d) * conditional_grad(x_j, d)
// R_d[i] = (1/M) sum_j d/dy_d k_d(x_i|S_d, y|S_d) at y = x_j
// Bandwidths are resolved from the given particles restricted to the node's
// closure (SingleKernel) or to each incident factor's scope (MultiKernel).
NodeUpdate compute_local_phi(const Eigen::MatrixXd& particles,
                             const FactorGraph& graph, NodeId d,
                             const KernelSpec& kernel);

struct SweepMeasurement {
  Eigen::MatrixXd local_smoothed_grad;  // column d = G_d
  Eigen::MatrixXd local_repulsive;      // column d = R_d
  double max_abs_move = 0.0;
};

// Message-passing engine; owns the per-(particle, coordinate) Adagrad
// accumulators, which persist across sweeps.
class MpSvgdEngine {
 public:
  MpSvgdEngine(const MpSvgdConfig& config, const FactorGraph& graph,
               Eigen::Index num_particles);

  // One full sweep over all nodes, updating `particles` in place. Returns the
  // local G/R matrices gathered while sweeping.
  SweepMeasurement sweep(Eigen::MatrixXd& particles);

  // Node updates of a frozen snapshot without applying them (max_abs_move 0).
  SweepMeasurement measure(const Eigen::MatrixXd& particles) const;

  const AdagradState& adagrad() const { return adagrad_; }

 private:
  const MpSvgdConfig config_;
  const FactorGraph& graph_;
  AdagradState adagrad_;
};

// Runs `iterations` sweeps with per-sweep diagnostics (record 0 is measured
// on the initial particles before any update). Deterministic given
// (config, init).
Eigen::MatrixXd run_mpsvgd(const MpSvgdConfig& config, const FactorGraph& graph,
                           Eigen::MatrixXd particles,
                           const DiagnosticsSink& sink = {});

}  // namespace steinmp
