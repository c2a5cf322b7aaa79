#include "steinmp/svgd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace steinmp {

namespace {

DiagnosticsRecord make_record(int iteration, const UpdateDecomposition& dec,
                              const Eigen::MatrixXd& particles,
                              double max_abs_move) {
  DiagnosticsRecord rec;
  rec.iteration = iteration;
  rec.pamrf_inf = particle_averaged_magnitude(dec.repulsive, NormOrder::LInf);
  rec.pamrf_2 = particle_averaged_magnitude(dec.repulsive, NormOrder::L2);
  rec.paksg_inf =
      particle_averaged_magnitude(dec.smoothed_grad, NormOrder::LInf);
  rec.paksg_2 = particle_averaged_magnitude(dec.smoothed_grad, NormOrder::L2);
  if (particles.rows() >= 2) {
    MarginalStats stats = marginal_stats(particles);
    rec.marginal_mean_avg = stats.mean_avg;
    rec.marginal_var_avg = stats.variance_avg;
  } else {
    rec.marginal_mean_avg = particles.row(0).mean();
    rec.marginal_var_avg = 0.0;
  }
  rec.max_abs_move = max_abs_move;
  return rec;
}

}  // namespace

UpdateDecomposition compute_phi(const Eigen::MatrixXd& particles,
                                const FactorGraph& graph,
                                const KernelSpec& kernel) {
  if (kernel.locality != KernelLocality::Global) {
    throw std::invalid_argument("compute_phi: kernel locality must be Global");
  }
  const Eigen::Index m = particles.rows();
  const Eigen::Index dim = particles.cols();
  if (m < 1 || dim != graph.dimension()) {
    throw std::invalid_argument("compute_phi: particle shape mismatch");
  }

  Eigen::MatrixXd grads(m, dim);
  for (Eigen::Index i = 0; i < m; ++i) {
    grads.row(i) = graph.grad_log_density(particles.row(i).transpose());
    if (!grads.row(i).allFinite()) {
      throw std::runtime_error("compute_phi: non-finite gradient at particle " +
                               std::to_string(i));
    }
  }

  Eigen::MatrixXd sq = pairwise_squared_distances(particles);
  const double h = resolve_bandwidth_from_sq(kernel.bandwidth, sq, dim);
  Eigen::MatrixXd z = sq / (2.0 * h);

  Eigen::MatrixXd kmat(m, m);
  Eigen::MatrixXd wmat(m, m);  // -f'(z), nonnegative for both families
  if (kernel.family == KernelFamily::Rbf) {
    kmat = (-z.array()).exp();
    wmat = kmat;
  } else {
    kmat = (1.0 + z.array()).rsqrt();
    wmat = 0.5 * (1.0 + z.array()).pow(-1.5);
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  UpdateDecomposition dec;
  dec.smoothed_grad.noalias() = inv_m * (kmat * grads);
  dec.repulsive.noalias() =
      (inv_m / h) *
      (wmat.rowwise().sum().asDiagonal() * particles - wmat * particles);
  return dec;
}

double AdagradState::apply(Eigen::MatrixXd& particles,
                           const Eigen::MatrixXd& phi,
                           const AdagradConfig& cfg) {
  if (phi.rows() != accum_.rows() || phi.cols() != accum_.cols()) {
    throw std::invalid_argument("AdagradState: shape mismatch");
  }
  accum_.array() += phi.array().square();
  Eigen::MatrixXd move =
      cfg.step0 * (phi.array() / (cfg.fudge + accum_.array().sqrt())).matrix();
  particles += move;
  return move.cwiseAbs().maxCoeff();
}

double AdagradState::apply_column(Eigen::MatrixXd& particles, NodeId d,
                                  const Eigen::VectorXd& phi_d,
                                  const AdagradConfig& cfg) {
  if (phi_d.size() != accum_.rows() || d < 0 || d >= accum_.cols()) {
    throw std::invalid_argument("AdagradState: column shape mismatch");
  }
  accum_.col(d).array() += phi_d.array().square();
  Eigen::VectorXd move =
      cfg.step0 *
      (phi_d.array() / (cfg.fudge + accum_.col(d).array().sqrt())).matrix();
  particles.col(d) += move;
  return move.cwiseAbs().maxCoeff();
}

Eigen::MatrixXd run_svgd(const SvgdConfig& config, const FactorGraph& graph,
                         Eigen::MatrixXd particles,
                         const DiagnosticsSink& sink) {
  if (config.iterations < 0) {
    throw std::invalid_argument("run_svgd: iterations must be >= 0");
  }
  if (particles.cols() != graph.dimension()) {
    throw std::invalid_argument("run_svgd: particle dimension != graph");
  }
  AdagradState adagrad(particles.rows(), particles.cols());
  UpdateDecomposition dec;
  try {
    dec = compute_phi(particles, graph, config.kernel);
  } catch (const std::exception& e) {
    throw std::runtime_error("run_svgd: iteration 0: " + std::string(e.what()));
  }
  if (sink) sink(make_record(0, dec, particles, 0.0));

  for (int t = 1; t <= config.iterations; ++t) {
    try {
      double moved = adagrad.apply(particles, dec.phi(), config.step);
      dec = compute_phi(particles, graph, config.kernel);
      if (sink) sink(make_record(t, dec, particles, moved));
    } catch (const std::exception& e) {
      throw std::runtime_error("run_svgd: iteration " + std::to_string(t) +
                               ": " + e.what());
    }
  }
  return particles;
}

}  // namespace steinmp
