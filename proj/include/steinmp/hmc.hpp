#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

#include "steinmp/factor_graph.hpp"

namespace steinmp {

struct HmcConfig {
  int chains = 4;
  int samples_per_chain = 10000;
  int burn_in = 1000;
  int leapfrog_steps = 10;       // L, identity mass matrix
  double target_accept = 0.8;    // dual-averaging target during burn-in
  double initial_step_size = 0.1;
  std::uint64_t seed = 0;
};

struct SampleBank {
  Eigen::MatrixXd samples;  // (chains * samples_per_chain) x D
  double acceptance_rate = 0.0;
};

// L leapfrog steps of Hamiltonian dynamics for H(x, r) = -log p(x) + ||r||^2/2.
// Bails out early if the state goes non-finite (the caller treats that as a
// rejected trajectory).
std::pair<Eigen::VectorXd, Eigen::VectorXd> leapfrog(const FactorGraph& graph,
                                                     Eigen::VectorXd position,
                                                     Eigen::VectorXd momentum,
                                                     double step_size,
                                                     int steps);

// Runs `chains` independent chains (one RNG substream each, derived from
// (seed, chain index)); dual averaging adapts the step size toward
// target_accept during burn-in and freezes it afterwards. Chains run in
// parallel when STEINMP_THREADS allows; results are identical either way.
SampleBank sample_hmc(const HmcConfig& config, const FactorGraph& graph,
                      const Eigen::MatrixXd& init_per_chain);

// Worker count for parallel sections: hardware concurrency capped by the
// STEINMP_THREADS environment variable.
int worker_count();

}  // namespace steinmp
