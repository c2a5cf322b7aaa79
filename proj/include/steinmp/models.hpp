#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "steinmp/factor_graph.hpp"

namespace steinmp {

// Isotropic-Gaussian toy target p = N(0, I_D); particles are conventionally
// initialized from N(0, init_std^2 I).
struct GaussianToySpec {
  int dimension = 1;
  double init_std = 5.0;
};

// D unary factors with log psi_d(x_d) = -x_d^2 / 2.
FactorGraph build_gaussian_toy(int dimension);

// Pairwise grid MRF: unary mixture of a Gaussian and a Gumbel over x_d - y_d,
// Laplace coupling on 4-neighborhood edges. Mixture components use normalized
// densities so the mixture weights keep their meaning.
struct GridMrfSpec {
  int rows = 3;
  int cols = 3;
  double mix_gauss = 0.6;    // alpha_1
  double mix_gumbel = 0.4;   // alpha_2
  double obs_shift = 2.0;    // shift applied when sampling observations
  double gauss_mean = -2.0;
  double gauss_var = 1.0;
  double gumbel_loc = 2.0;
  double gumbel_scale = 1.3;
  double laplace_scale = 2.0;
  Eigen::MatrixXd observations;  // rows x cols
};

// y_d = shift + (Gaussian draw) with prob alpha_1, else shift + (Gumbel draw
// via inverse CDF). Deterministic in the seed.
Eigen::MatrixXd sample_grid_observations(const GridMrfSpec& spec,
                                         std::uint64_t seed);

// Node ids are row-major (d = r * cols + c); unary factors come first, then
// right/down edges in row-major order.
FactorGraph build_grid_mrf(const GridMrfSpec& spec);

// Fields-of-Experts denoising posterior with Gaussian-scale-mixture experts
// over pairwise filter responses:
//   log p(x|y) = -ridge ||x||^2/2
//                + sum_edges sum_i log sum_j w_ij N(J_i^T x_F | 0, sigma_i^2/s_j)
//                + sum_d -(y_d - x_d)^2 / (2 noise_sigma^2)   (+ const)
struct GsmFoeSpec {
  std::vector<Eigen::VectorXd> filters;  // length-2 filters, default [1, -1]
  std::vector<Eigen::VectorXd> weights;  // per filter: J simplex weights
  std::vector<double> base_variance;     // sigma_i^2 per filter
  Eigen::VectorXd scales;                // s_j, shared across filters
  double ridge = 1e-4;                   // epsilon
  double noise_sigma = 10.0;             // sigma_n
  Eigen::MatrixXd observed;              // H x W image in [0, 255]
};

// Bundled default prior: a hand-constructed heavy-tailed 15-component GSM
// (log-spaced scales, geometrically decaying weights). These are NOT learned
// parameters; they exist so the pipeline runs end to end.
GsmFoeSpec default_gsm_foe_spec();

// JSON schema: {filters: [[...]], weights: [[...]], sigma2: [...],
// scales: [...], epsilon, noise_sigma}. Throws std::runtime_error on schema
// violations.
GsmFoeSpec load_gsm_foe_spec(const std::string& json_path);

// Pixels are row-major nodes over the real line; one unary factor per pixel
// (likelihood + ridge), one expert factor per horizontal/vertical neighbor
// pair, non-periodic boundaries.
FactorGraph build_foe_denoiser(const GsmFoeSpec& spec);

}  // namespace steinmp
