#include "steinmp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace steinmp {

double kernel_profile(KernelFamily family, double z) {
  switch (family) {
    case KernelFamily::Rbf:
      return std::exp(-z);
    case KernelFamily::Imq:
      return 1.0 / std::sqrt(1.0 + z);
  }
  return 0.0;
}

double kernel_profile_deriv(KernelFamily family, double z) {
  switch (family) {
    case KernelFamily::Rbf:
      return -std::exp(-z);
    case KernelFamily::Imq:
      return -0.5 * std::pow(1.0 + z, -1.5);
  }
  return 0.0;
}

Eigen::MatrixXd pairwise_squared_distances(const Eigen::MatrixXd& rows) {
  const Eigen::Index m = rows.rows();
  Eigen::VectorXd sq = rows.rowwise().squaredNorm();
  Eigen::MatrixXd dist = sq.replicate(1, m);
  dist += sq.transpose().replicate(m, 1);
  dist.noalias() -= 2.0 * rows * rows.transpose();
  dist = dist.cwiseMax(0.0);
  dist.diagonal().setZero();
  return dist;
}

namespace {

// Median of the pairwise distances given their squares; even pair counts
// average the two central order statistics of the distances themselves.
double scaled_median(std::vector<double>& sq, Eigen::Index coord_count,
                     double exponent) {
  const std::size_t n = sq.size();
  double med;
  if (n % 2 == 1) {
    auto mid = sq.begin() + n / 2;
    std::nth_element(sq.begin(), mid, sq.end());
    med = std::sqrt(*mid);
  } else {
    auto hi = sq.begin() + n / 2;
    std::nth_element(sq.begin(), hi, sq.end());
    auto lo = std::max_element(sq.begin(), hi);
    med = 0.5 * (std::sqrt(*lo) + std::sqrt(*hi));
  }
  double med2 = med * med;
  if (med2 < 1e-12) return 1e-12;  // collapsed particles
  return std::pow(static_cast<double>(coord_count), exponent - 1.0) * med2;
}

}  // namespace

double median_bandwidth(const Eigen::MatrixXd& particles, double exponent) {
  const Eigen::Index m = particles.rows();
  if (m < 2) {
    throw std::invalid_argument("median_bandwidth: need at least 2 particles");
  }
  const Eigen::Index cols = particles.cols();
  std::vector<double> sq;
  sq.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      double total = 0.0;
      for (Eigen::Index c = 0; c < cols; ++c) {
        double diff = particles(i, c) - particles(j, c);
        total += diff * diff;
      }
      sq.push_back(total);
    }
  }
  return scaled_median(sq, cols, exponent);
}

double median_bandwidth_from_sq(const Eigen::MatrixXd& sq_dists,
                                Eigen::Index coord_count, double exponent) {
  const Eigen::Index m = sq_dists.rows();
  if (m < 2 || sq_dists.cols() != m) {
    throw std::invalid_argument("median_bandwidth_from_sq: bad matrix");
  }
  thread_local std::vector<double> sq;
  sq.clear();
  sq.reserve(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      sq.push_back(sq_dists(i, j));
    }
  }
  return scaled_median(sq, coord_count, exponent);
}

double resolve_bandwidth(const BandwidthPolicy& policy,
                         const Eigen::MatrixXd& particles) {
  if (policy.kind == BandwidthPolicy::Kind::Fixed) {
    if (policy.value <= 0.0) {
      throw std::invalid_argument("resolve_bandwidth: fixed h must be > 0");
    }
    return policy.value;
  }
  if (particles.rows() < 2) return 1.0;
  return median_bandwidth(particles, policy.exponent);
}

double resolve_bandwidth_from_sq(const BandwidthPolicy& policy,
                                 const Eigen::MatrixXd& sq_dists,
                                 Eigen::Index coord_count) {
  if (policy.kind == BandwidthPolicy::Kind::Fixed) {
    if (policy.value <= 0.0) {
      throw std::invalid_argument("resolve_bandwidth: fixed h must be > 0");
    }
    return policy.value;
  }
  if (sq_dists.rows() < 2) return 1.0;
  return median_bandwidth_from_sq(sq_dists, coord_count, policy.exponent);
}

namespace {

void check_h(double h) {
  if (h <= 0.0) {
    throw std::invalid_argument("kernel: bandwidth must be > 0");
  }
}

}  // namespace

double kernel_eval(KernelFamily family, double h, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& y) {
  check_h(h);
  return kernel_profile(family, (x - y).squaredNorm() / (2.0 * h));
}

Eigen::VectorXd kernel_grad_y(KernelFamily family, double h,
                              const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y) {
  check_h(h);
  Eigen::VectorXd diff = x - y;
  double z = diff.squaredNorm() / (2.0 * h);
  return (-kernel_profile_deriv(family, z) / h) * diff;
}

LocalKernelValue local_kernel_eval(const KernelSpec& spec,
                                   const FactorGraph& graph, NodeId d,
                                   const Eigen::VectorXd& x_closure,
                                   const Eigen::VectorXd& y_closure,
                                   std::span<const double> bandwidths) {
  const NodeLocality& loc = graph.locality(d);
  const auto size = static_cast<Eigen::Index>(loc.closure.size());
  if (x_closure.size() != size || y_closure.size() != size) {
    throw std::invalid_argument("local_kernel_eval: vector length != |S_d|");
  }

  if (spec.locality == KernelLocality::SingleKernel) {
    if (bandwidths.size() != 1) {
      throw std::invalid_argument(
          "local_kernel_eval: SingleKernel takes one bandwidth");
    }
    const double h = bandwidths[0];
    check_h(h);
    double z = (x_closure - y_closure).squaredNorm() / (2.0 * h);
    double fp = kernel_profile_deriv(spec.family, z);
    double diff_d = x_closure[loc.self_pos] - y_closure[loc.self_pos];
    return {kernel_profile(spec.family, z), -fp * diff_d / h};
  }

  if (spec.locality != KernelLocality::MultiKernel) {
    throw std::invalid_argument("local_kernel_eval: locality must be local");
  }
  const std::size_t k = loc.factors.size();
  if (bandwidths.size() != k) {
    throw std::invalid_argument(
        "local_kernel_eval: MultiKernel needs one bandwidth per incident "
        "factor");
  }
  if (k == 0) {
    throw std::invalid_argument("local_kernel_eval: node has no factors");
  }
  double value = 0.0;
  double grad = 0.0;
  for (std::size_t f = 0; f < k; ++f) {
    const double h = bandwidths[f];
    check_h(h);
    const auto& pos = loc.scope_pos_in_closure[f];
    double sq = 0.0;
    for (int p : pos) {
      double diff = x_closure[p] - y_closure[p];
      sq += diff * diff;
    }
    double z = sq / (2.0 * h);
    value += kernel_profile(spec.family, z);
    double diff_d = x_closure[loc.self_pos] - y_closure[loc.self_pos];
    grad += -kernel_profile_deriv(spec.family, z) * diff_d / h;
  }
  double inv_k = 1.0 / static_cast<double>(k);
  return {value * inv_k, grad * inv_k};
}

}  // namespace steinmp
