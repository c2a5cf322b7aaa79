#include "steinmp/mpsvgd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace steinmp {

namespace {

void check_local(const KernelSpec& kernel) {
  if (kernel.locality == KernelLocality::Global) {
    throw std::invalid_argument("mpsvgd: kernel locality must not be Global");
  }
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& particles,
                               const std::vector<NodeId>& cols) {
  Eigen::MatrixXd out(particles.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    out.col(static_cast<Eigen::Index>(c)) = particles.col(cols[c]);
  }
  return out;
}

// Accumulates f(z) into `ksum` and -f'(z) * (x_i,d - x_j,d) / h into `dksum`.
void accumulate_term(KernelFamily family, const Eigen::MatrixXd& sq, double h,
                     const Eigen::MatrixXd& self_diff, Eigen::MatrixXd& ksum,
                     Eigen::MatrixXd& dksum) {
  Eigen::ArrayXXd z = sq.array() / (2.0 * h);
  if (family == KernelFamily::Rbf) {
    Eigen::ArrayXXd f = (-z).exp();
    ksum.array() += f;
    dksum.array() += f * self_diff.array() / h;
  } else {
    ksum.array() += (1.0 + z).rsqrt();
    dksum.array() += 0.5 * (1.0 + z).pow(-1.5) * self_diff.array() / h;
  }
}

}  // namespace

NodeUpdate compute_local_phi(const Eigen::MatrixXd& particles,
                             const FactorGraph& graph, NodeId d,
                             const KernelSpec& kernel) {
  check_local(kernel);
  const Eigen::Index m = particles.rows();
  if (m < 1 || particles.cols() != graph.dimension()) {
    throw std::invalid_argument("compute_local_phi: particle shape mismatch");
  }
  const NodeLocality& loc = graph.locality(d);

  Eigen::VectorXd cond_grad(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    cond_grad[i] = graph.conditional_grad(particles.row(i).transpose(), d);
    if (!std::isfinite(cond_grad[i])) {
      throw std::runtime_error("compute_local_phi: non-finite gradient at "
                               "particle " +
                               std::to_string(i));
    }
  }

  NodeUpdate update;
  update.node = d;
  if (m == 1) {
    update.smoothed_grad = cond_grad;
    update.repulsive = Eigen::VectorXd::Zero(1);
    update.phi = cond_grad;
    return update;
  }

  Eigen::VectorXd self = particles.col(d);
  Eigen::MatrixXd self_diff =
      self.replicate(1, m) - self.transpose().replicate(m, 1);

  Eigen::MatrixXd ksum = Eigen::MatrixXd::Zero(m, m);
  Eigen::MatrixXd dksum = Eigen::MatrixXd::Zero(m, m);
  if (kernel.locality == KernelLocality::SingleKernel) {
    Eigen::MatrixXd sub = gather_columns(particles, loc.closure);
    Eigen::MatrixXd sq = pairwise_squared_distances(sub);
    double h = resolve_bandwidth_from_sq(kernel.bandwidth, sq, sub.cols());
    accumulate_term(kernel.family, sq, h, self_diff, ksum, dksum);
  } else {
    if (loc.factors.empty()) {
      throw std::invalid_argument(
          "compute_local_phi: MultiKernel needs at least one incident factor");
    }
    for (int f : loc.factors) {
      Eigen::MatrixXd sub = gather_columns(particles, graph.factors()[f].scope);
      Eigen::MatrixXd sq = pairwise_squared_distances(sub);
      double h = resolve_bandwidth_from_sq(kernel.bandwidth, sq, sub.cols());
      accumulate_term(kernel.family, sq, h, self_diff, ksum, dksum);
    }
    double inv_k = 1.0 / static_cast<double>(loc.factors.size());
    ksum *= inv_k;
    dksum *= inv_k;
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  update.smoothed_grad.noalias() = inv_m * (ksum * cond_grad);
  update.repulsive = inv_m * dksum.rowwise().sum();
  update.phi = update.smoothed_grad + update.repulsive;
  return update;
}

MpSvgdEngine::MpSvgdEngine(const MpSvgdConfig& config, const FactorGraph& graph,
                           Eigen::Index num_particles)
    : config_(config), graph_(graph), adagrad_(num_particles,
                                               graph.dimension()) {
  check_local(config.kernel);
  if (config.iterations < 0) {
    throw std::invalid_argument("mpsvgd: iterations must be >= 0");
  }
}

SweepMeasurement MpSvgdEngine::sweep(Eigen::MatrixXd& particles) {
  const Eigen::Index dim = graph_.dimension();
  SweepMeasurement out;
  out.local_smoothed_grad.resize(particles.rows(), dim);
  out.local_repulsive.resize(particles.rows(), dim);

  if (config_.sweep == SweepMode::Sequential) {
    for (NodeId d = 0; d < dim; ++d) {
      try {
        NodeUpdate u = compute_local_phi(particles, graph_, d, config_.kernel);
        out.local_smoothed_grad.col(d) = u.smoothed_grad;
        out.local_repulsive.col(d) = u.repulsive;
        double moved = adagrad_.apply_column(particles, d, u.phi, config_.step);
        out.max_abs_move = std::max(out.max_abs_move, moved);
      } catch (const std::exception& e) {
        throw std::runtime_error("node " + std::to_string(d) + ": " + e.what());
      }
    }
    return out;
  }

  std::vector<NodeUpdate> updates;
  updates.reserve(static_cast<std::size_t>(dim));
  for (NodeId d = 0; d < dim; ++d) {
    try {
      updates.push_back(compute_local_phi(particles, graph_, d, config_.kernel));
    } catch (const std::exception& e) {
      throw std::runtime_error("node " + std::to_string(d) + ": " + e.what());
    }
  }
  for (NodeId d = 0; d < dim; ++d) {
    out.local_smoothed_grad.col(d) = updates[d].smoothed_grad;
    out.local_repulsive.col(d) = updates[d].repulsive;
    double moved =
        adagrad_.apply_column(particles, d, updates[d].phi, config_.step);
    out.max_abs_move = std::max(out.max_abs_move, moved);
  }
  return out;
}

SweepMeasurement MpSvgdEngine::measure(const Eigen::MatrixXd& particles) const {
  const Eigen::Index dim = graph_.dimension();
  SweepMeasurement out;
  out.local_smoothed_grad.resize(particles.rows(), dim);
  out.local_repulsive.resize(particles.rows(), dim);
  for (NodeId d = 0; d < dim; ++d) {
    NodeUpdate u = compute_local_phi(particles, graph_, d, config_.kernel);
    out.local_smoothed_grad.col(d) = u.smoothed_grad;
    out.local_repulsive.col(d) = u.repulsive;
  }
  return out;
}

namespace {

DiagnosticsRecord sweep_record(int iteration, const SweepMeasurement& meas,
                               const Eigen::MatrixXd& particles) {
  DiagnosticsRecord rec;
  rec.iteration = iteration;
  rec.pamrf_inf =
      particle_averaged_magnitude(meas.local_repulsive, NormOrder::LInf);
  rec.pamrf_2 = particle_averaged_magnitude(meas.local_repulsive, NormOrder::L2);
  rec.paksg_inf =
      particle_averaged_magnitude(meas.local_smoothed_grad, NormOrder::LInf);
  rec.paksg_2 =
      particle_averaged_magnitude(meas.local_smoothed_grad, NormOrder::L2);
  if (particles.rows() >= 2) {
    MarginalStats stats = marginal_stats(particles);
    rec.marginal_mean_avg = stats.mean_avg;
    rec.marginal_var_avg = stats.variance_avg;
  } else {
    rec.marginal_mean_avg = particles.row(0).mean();
    rec.marginal_var_avg = 0.0;
  }
  rec.max_abs_move = meas.max_abs_move;
  return rec;
}

}  // namespace

Eigen::MatrixXd run_mpsvgd(const MpSvgdConfig& config, const FactorGraph& graph,
                           Eigen::MatrixXd particles,
                           const DiagnosticsSink& sink) {
  if (particles.cols() != graph.dimension()) {
    throw std::invalid_argument("run_mpsvgd: particle dimension != graph");
  }
  MpSvgdEngine engine(config, graph, particles.rows());
  if (sink) {
    SweepMeasurement init;
    try {
      init = engine.measure(particles);
    } catch (const std::exception& e) {
      throw std::runtime_error("run_mpsvgd: iteration 0: " +
                               std::string(e.what()));
    }
    sink(sweep_record(0, init, particles));
  }
  for (int t = 1; t <= config.iterations; ++t) {
    try {
      SweepMeasurement meas = engine.sweep(particles);
      if (sink) sink(sweep_record(t, meas, particles));
    } catch (const std::exception& e) {
      throw std::runtime_error("run_mpsvgd: iteration " + std::to_string(t) +
                               ": " + e.what());
    }
  }
  return particles;
}

}  // namespace steinmp
