#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>

#include "steinmp/factor_graph.hpp"
#include "steinmp/rng.hpp"

namespace testutil {

// Central finite differences; the oracle side of every gradient check.
inline Eigen::VectorXd finite_diff_grad(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, double step = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index d = 0; d < x.size(); ++d) {
    Eigen::VectorXd hi = x;
    Eigen::VectorXd lo = x;
    hi[d] += step;
    lo[d] -= step;
    g[d] = (f(hi) - f(lo)) / (2.0 * step);
  }
  return g;
}

// |a - b| <= tol * max(1, |a|, |b|)
inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool close_rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                      double tol) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!close_rel(a[i], b[i], tol)) return false;
  }
  return true;
}

inline Eigen::MatrixXd random_spd(int dim, steinmp::Rng& rng,
                                  double ridge = 0.3) {
  Eigen::MatrixXd a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) a(i, j) = rng.normal();
  }
  return a * a.transpose() / dim + ridge * Eigen::MatrixXd::Identity(dim, dim);
}

inline Eigen::VectorXd random_vector(int dim, steinmp::Rng& rng,
                                     double scale = 1.0) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, steinmp::Rng& rng,
                                     double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
  }
  return m;
}

// Gaussian factor over an explicit scope: log psi = -0.5 (v-m)^T P (v-m).
inline steinmp::Factor gaussian_factor(std::vector<steinmp::NodeId> scope,
                                       Eigen::VectorXd mean,
                                       Eigen::MatrixXd precision) {
  return steinmp::Factor{
      std::move(scope),
      [mean = std::move(mean), precision = std::move(precision)](
          std::span<const double> x, std::span<double> grad) {
        Eigen::Map<const Eigen::VectorXd> v(x.data(),
                                            static_cast<Eigen::Index>(x.size()));
        Eigen::VectorXd r = v - mean;
        Eigen::VectorXd g = -(precision * r);
        for (std::size_t i = 0; i < x.size(); ++i) grad[i] = g[i];
        return -0.5 * r.dot(precision * r);
      }};
}

}  // namespace testutil
