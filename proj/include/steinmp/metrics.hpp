#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>

#include "steinmp/kernels.hpp"
#include "steinmp/rng.hpp"

namespace steinmp {

// Per-iteration diagnostics emitted by the engines. PAMRF/PAKSG are the
// particle-averaged magnitudes of the repulsive force and the kernel smoothed
// gradient; the iteration-0 record is measured before any update.
struct DiagnosticsRecord {
  int iteration = 0;
  double pamrf_inf = 0.0;
  double pamrf_2 = 0.0;
  double paksg_inf = 0.0;
  double paksg_2 = 0.0;
  double marginal_mean_avg = 0.0;
  double marginal_var_avg = 0.0;
  double max_abs_move = 0.0;
};

using DiagnosticsSink = std::function<void(const DiagnosticsRecord&)>;

// CSV row schema: iteration,pamrf_inf,pamrf_2,paksg_inf,paksg_2,mean_avg,
// var_avg,max_abs_move. Doubles use 17 significant digits.
std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const DiagnosticsRecord& rec);

enum class NormOrder { L2, LInf };

// (1/M) sum_i ||rows[i]||_r. Serves both PAMRF (rows = R) and PAKSG (rows = G).
double particle_averaged_magnitude(const Eigen::MatrixXd& rows, NormOrder r);

struct MarginalStats {
  Eigen::VectorXd mean;      // per dimension
  Eigen::VectorXd variance;  // per dimension, 1/M population convention
  double mean_avg = 0.0;
  double variance_avg = 0.0;
};

// Per-dimension moments of the empirical measure. Throws for M < 2.
MarginalStats marginal_stats(const Eigen::MatrixXd& particles);

// Test functions for expectation MSE: f(x) = x, x^2, 1/(1+exp(w*x+b)) and
// cos(w*x+b), applied elementwise.
struct TestFunctionSpec {
  enum class Kind { Identity, Square, Sigmoid, Cosine };
  Kind kind = Kind::Identity;
  Eigen::VectorXd omega;   // w, used by Sigmoid/Cosine
  Eigen::VectorXd offset;  // b, used by Sigmoid/Cosine

  // w_d ~ N(0,1), b_d ~ Uniform[0, 2pi).
  static TestFunctionSpec randomized(Kind kind, int dim, Rng& rng);
};

// E_particles[f(x)] per dimension.
Eigen::VectorXd expectation(const Eigen::MatrixXd& samples,
                            const TestFunctionSpec& fn);

// (1/D) sum_d (E_particles[f]_d - E_truth[f]_d)^2.
double mse_expectation(const Eigen::MatrixXd& particles,
                       const Eigen::MatrixXd& truth_samples,
                       const TestFunctionSpec& fn);

// Exact E_{y~N(mu,Sigma)}[grad_y k_RBF(x,y)]:
//   h^{D/2} exp(-d(x,mu)/2) / sqrt(det(Sigma + hI)) * (Sigma+hI)^{-1} (x-mu)
// with d(x,mu) = (x-mu)^T (Sigma+hI)^{-1} (x-mu). Throws if Sigma is not SPD.
Eigen::VectorXd gaussian_repulsive_closed_form(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& mu,
                                               const Eigen::MatrixXd& sigma,
                                               double h);

// Upper bound on ||R(x; N(mu,Sigma))||_inf valid for every bandwidth:
//   sqrt(D) / (lambda_min(Sigma) (D/2+1) (1+2/D)^{D/2}) * ||x-mu||_inf.
double gaussian_repulsive_bound(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& sigma);

// Bandwidth-free bound on the empirical repulsive force magnitude:
//   (1/M) sum over particles != x of c * ||x-y||_inf / ||x-y||_2^2,
// c = 2/e for RBF and 2/3^{3/2} for IMQ. Coincident particles contribute 0;
// throws if every particle coincides with x.
double eq5_bound_rhs(const Eigen::VectorXd& x, const Eigen::MatrixXd& particles,
                     KernelFamily family = KernelFamily::Rbf);

// 10 log10(max_val^2 / MSE), capped at 99.0 dB for identical images.
double psnr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
            double max_val = 255.0);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// L=255, averaged over positions where the window fits entirely.
double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace steinmp
