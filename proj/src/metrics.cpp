#include "steinmp/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace steinmp {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string diagnostics_csv_header() {
  return "iteration,pamrf_inf,pamrf_2,paksg_inf,paksg_2,mean_avg,var_avg,"
         "max_abs_move";
}

std::string diagnostics_csv_row(const DiagnosticsRecord& rec) {
  std::string row = std::to_string(rec.iteration);
  for (double v : {rec.pamrf_inf, rec.pamrf_2, rec.paksg_inf, rec.paksg_2,
                   rec.marginal_mean_avg, rec.marginal_var_avg,
                   rec.max_abs_move}) {
    row += ',';
    row += fmt(v);
  }
  return row;
}

double particle_averaged_magnitude(const Eigen::MatrixXd& rows, NormOrder r) {
  if (rows.rows() == 0 || rows.cols() == 0) {
    throw std::invalid_argument("particle_averaged_magnitude: empty matrix");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    total += (r == NormOrder::L2) ? rows.row(i).norm()
                                  : rows.row(i).cwiseAbs().maxCoeff();
  }
  return total / static_cast<double>(rows.rows());
}

MarginalStats marginal_stats(const Eigen::MatrixXd& particles) {
  const Eigen::Index m = particles.rows();
  if (m < 2) {
    throw std::invalid_argument("marginal_stats: need at least 2 particles");
  }
  MarginalStats out;
  out.mean = particles.colwise().mean();
  out.variance = (particles.rowwise() - out.mean.transpose())
                     .array()
                     .square()
                     .colwise()
                     .mean();
  out.mean_avg = out.mean.mean();
  out.variance_avg = out.variance.mean();
  return out;
}

TestFunctionSpec TestFunctionSpec::randomized(Kind kind, int dim, Rng& rng) {
  TestFunctionSpec spec;
  spec.kind = kind;
  spec.omega.resize(dim);
  spec.offset.resize(dim);
  for (int d = 0; d < dim; ++d) spec.omega[d] = rng.normal();
  for (int d = 0; d < dim; ++d) spec.offset[d] = rng.uniform(0.0, 2.0 * M_PI);
  return spec;
}

Eigen::VectorXd expectation(const Eigen::MatrixXd& samples,
                            const TestFunctionSpec& fn) {
  switch (fn.kind) {
    case TestFunctionSpec::Kind::Identity:
      return samples.colwise().mean();
    case TestFunctionSpec::Kind::Square:
      return samples.array().square().colwise().mean();
    case TestFunctionSpec::Kind::Sigmoid: {
      Eigen::ArrayXXd t = (samples.array().rowwise() *
                           fn.omega.transpose().array())
                              .rowwise() +
                          fn.offset.transpose().array();
      return (1.0 / (1.0 + t.exp())).colwise().mean();
    }
    case TestFunctionSpec::Kind::Cosine: {
      Eigen::ArrayXXd t = (samples.array().rowwise() *
                           fn.omega.transpose().array())
                              .rowwise() +
                          fn.offset.transpose().array();
      return t.cos().colwise().mean();
    }
  }
  return Eigen::VectorXd();
}

double mse_expectation(const Eigen::MatrixXd& particles,
                       const Eigen::MatrixXd& truth_samples,
                       const TestFunctionSpec& fn) {
  if (particles.cols() != truth_samples.cols()) {
    throw std::invalid_argument("mse_expectation: dimension mismatch");
  }
  Eigen::VectorXd a = expectation(particles, fn);
  Eigen::VectorXd b = expectation(truth_samples, fn);
  return (a - b).squaredNorm() / static_cast<double>(particles.cols());
}

Eigen::VectorXd gaussian_repulsive_closed_form(const Eigen::VectorXd& x,
                                               const Eigen::VectorXd& mu,
                                               const Eigen::MatrixXd& sigma,
                                               double h) {
  const Eigen::Index dim = x.size();
  if (sigma.rows() != dim || sigma.cols() != dim || mu.size() != dim) {
    throw std::invalid_argument(
        "gaussian_repulsive_closed_form: shape mismatch");
  }
  if (h <= 0.0) {
    throw std::invalid_argument("gaussian_repulsive_closed_form: h <= 0");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-10)) {
    throw std::invalid_argument(
        "gaussian_repulsive_closed_form: Sigma not symmetric");
  }
  Eigen::MatrixXd shifted = sigma + h * Eigen::MatrixXd::Identity(dim, dim);
  Eigen::LLT<Eigen::MatrixXd> llt(shifted);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian_repulsive_closed_form: Sigma not SPD");
  }
  // Require Sigma itself SPD, not just Sigma + hI.
  Eigen::LLT<Eigen::MatrixXd> llt_sigma(sigma);
  if (llt_sigma.info() != Eigen::Success) {
    throw std::invalid_argument("gaussian_repulsive_closed_form: Sigma not SPD");
  }
  Eigen::VectorXd diff = x - mu;
  Eigen::VectorXd solved = llt.solve(diff);
  double mahal = diff.dot(solved);
  // h^{D/2} / sqrt(det(Sigma+hI)) in log space to stay finite for large D.
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < dim; ++i) {
    log_det += 2.0 * std::log(llt.matrixL()(i, i));
  }
  double scale =
      std::exp(0.5 * dim * std::log(h) - 0.5 * log_det - 0.5 * mahal);
  return scale * solved;
}

double gaussian_repulsive_bound(const Eigen::VectorXd& x,
                                const Eigen::VectorXd& mu,
                                const Eigen::MatrixXd& sigma) {
  const double dim = static_cast<double>(x.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
  double lambda_min = es.eigenvalues().minCoeff();
  if (lambda_min <= 0.0) {
    throw std::invalid_argument("gaussian_repulsive_bound: Sigma not SPD");
  }
  double denom = lambda_min * (dim / 2.0 + 1.0) *
                 std::pow(1.0 + 2.0 / dim, dim / 2.0);
  return std::sqrt(dim) / denom * (x - mu).cwiseAbs().maxCoeff();
}

double eq5_bound_rhs(const Eigen::VectorXd& x, const Eigen::MatrixXd& particles,
                     KernelFamily family) {
  const Eigen::Index m = particles.rows();
  if (m == 0 || particles.cols() != x.size()) {
    throw std::invalid_argument("eq5_bound_rhs: shape mismatch");
  }
  const double c = (family == KernelFamily::Rbf) ? 2.0 / M_E
                                                 : 2.0 / std::pow(3.0, 1.5);
  double total = 0.0;
  Eigen::Index contributing = 0;
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd diff = x - particles.row(j).transpose();
    double sq = diff.squaredNorm();
    if (sq == 0.0) continue;  // coincident particle: exact contribution is 0
    total += c * diff.cwiseAbs().maxCoeff() / sq;
    ++contributing;
  }
  if (contributing == 0) {
    throw std::invalid_argument("eq5_bound_rhs: all particles coincide with x");
  }
  return total / static_cast<double>(m);
}

double psnr(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
            double max_val) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("psnr: dimension mismatch");
  }
  double mse = (a - b).array().square().mean();
  if (mse == 0.0) return 99.0;
  return std::min(99.0, 10.0 * std::log10(max_val * max_val / mse));
}

double ssim(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  constexpr int kWindow = 11;
  constexpr double kSigma = 1.5;
  constexpr double kL = 255.0;
  constexpr double kC1 = (0.01 * kL) * (0.01 * kL);
  constexpr double kC2 = (0.03 * kL) * (0.03 * kL);

  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("ssim: dimension mismatch");
  }
  if (a.rows() < kWindow || a.cols() < kWindow) {
    throw std::invalid_argument("ssim: image smaller than 11x11 window");
  }

  Eigen::MatrixXd w(kWindow, kWindow);
  for (int i = 0; i < kWindow; ++i) {
    for (int j = 0; j < kWindow; ++j) {
      double di = i - (kWindow - 1) / 2.0;
      double dj = j - (kWindow - 1) / 2.0;
      w(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
    }
  }
  w /= w.sum();

  double total = 0.0;
  long count = 0;
  for (Eigen::Index r = 0; r + kWindow <= a.rows(); ++r) {
    for (Eigen::Index c = 0; c + kWindow <= a.cols(); ++c) {
      auto pa = a.block(r, c, kWindow, kWindow).array();
      auto pb = b.block(r, c, kWindow, kWindow).array();
      double mu1 = (w.array() * pa).sum();
      double mu2 = (w.array() * pb).sum();
      double var1 = (w.array() * (pa - mu1).square()).sum();
      double var2 = (w.array() * (pb - mu2).square()).sum();
      double cov = (w.array() * (pa - mu1) * (pb - mu2)).sum();
      double num = (2.0 * mu1 * mu2 + kC1) * (2.0 * cov + kC2);
      double den = (mu1 * mu1 + mu2 * mu2 + kC1) * (var1 + var2 + kC2);
      total += num / den;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace steinmp
