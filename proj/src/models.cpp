#include "steinmp/models.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>

#include "json.hpp"
#include "steinmp/rng.hpp"

namespace steinmp {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double sign_subgradient(double z) {
  if (z > 0.0) return 1.0;
  if (z < 0.0) return -1.0;
  return 0.0;  // symmetric element of the subdifferential
}

// log density and d/dv of N(v | mean, var).
void gaussian_logpdf(double v, double mean, double var, double& logp,
                     double& dlogp) {
  double r = v - mean;
  logp = -0.5 * r * r / var - 0.5 * (kLog2Pi + std::log(var));
  dlogp = -r / var;
}

// log density and d/dv of Gumbel(v | loc, scale).
void gumbel_logpdf(double v, double loc, double scale, double& logp,
                   double& dlogp) {
  double u = (v - loc) / scale;
  double eu = std::exp(-u);
  logp = -u - eu - std::log(scale);
  dlogp = (-1.0 + eu) / scale;
}

// log(sum_c exp(lw_c)) and sum_c softmax_c * dl_c, skipping components whose
// responsibility underflows to zero (their dl_c may be huge in the far tail).
void mixture_log_grad(std::span<const double> lw, std::span<const double> dl,
                      double& logp, double& dlogp) {
  double peak = lw[0];
  for (double v : lw) peak = std::max(peak, v);
  double total = 0.0;
  for (double v : lw) total += std::exp(v - peak);
  logp = peak + std::log(total);
  dlogp = 0.0;
  for (std::size_t c = 0; c < lw.size(); ++c) {
    double w = std::exp(lw[c] - logp);
    if (w > 0.0) dlogp += w * dl[c];
  }
}

}  // namespace

FactorGraph build_gaussian_toy(int dimension) {
  if (dimension < 1) {
    throw std::invalid_argument("build_gaussian_toy: dimension must be >= 1");
  }
  std::vector<Factor> factors;
  factors.reserve(dimension);
  for (NodeId d = 0; d < dimension; ++d) {
    factors.push_back(Factor{
        {d},
        [](std::span<const double> x, std::span<double> grad) {
          grad[0] = -x[0];
          return -0.5 * x[0] * x[0];
        }});
  }
  return FactorGraph(dimension, std::move(factors));
}

Eigen::MatrixXd sample_grid_observations(const GridMrfSpec& spec,
                                         std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd y(spec.rows, spec.cols);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      if (rng.uniform() < spec.mix_gauss) {
        y(r, c) = spec.obs_shift + spec.gauss_mean +
                  std::sqrt(spec.gauss_var) * rng.normal();
      } else {
        double u = rng.uniform();
        y(r, c) = spec.obs_shift + spec.gumbel_loc -
                  spec.gumbel_scale * std::log(-std::log1p(-u));
      }
    }
  }
  return y;
}

FactorGraph build_grid_mrf(const GridMrfSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1) {
    throw std::invalid_argument("build_grid_mrf: grid dims must be >= 1");
  }
  if (spec.observations.rows() != spec.rows ||
      spec.observations.cols() != spec.cols ||
      !spec.observations.allFinite()) {
    throw std::invalid_argument("build_grid_mrf: bad observations matrix");
  }
  if (std::abs(spec.mix_gauss + spec.mix_gumbel - 1.0) > 1e-12) {
    throw std::invalid_argument("build_grid_mrf: mixture weights must sum to 1");
  }

  const int dim = spec.rows * spec.cols;
  std::vector<Factor> factors;
  factors.reserve(static_cast<std::size_t>(dim) * 3);

  const double log_a1 = std::log(spec.mix_gauss);
  const double log_a2 = std::log(spec.mix_gumbel);
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const NodeId d = r * spec.cols + c;
      const double obs = spec.observations(r, c);
      factors.push_back(Factor{
          {d},
          [spec, obs, log_a1, log_a2](std::span<const double> x,
                                      std::span<double> grad) {
            double v = x[0] - obs;
            double lg, dlg, lu, dlu;
            gaussian_logpdf(v, spec.gauss_mean, spec.gauss_var, lg, dlg);
            gumbel_logpdf(v, spec.gumbel_loc, spec.gumbel_scale, lu, dlu);
            double lw[2] = {log_a1 + lg, log_a2 + lu};
            double dl[2] = {dlg, dlu};
            double logp, dlogp;
            mixture_log_grad(lw, dl, logp, dlogp);
            grad[0] = dlogp;
            return logp;
          }});
    }
  }

  const double inv_beta = 1.0 / spec.laplace_scale;
  auto edge_potential = [inv_beta](std::span<const double> x,
                                   std::span<double> grad) {
    double v = x[0] - x[1];
    double s = sign_subgradient(v);
    grad[0] = -s * inv_beta;
    grad[1] = s * inv_beta;
    return -std::abs(v) * inv_beta;
  };
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      const NodeId d = r * spec.cols + c;
      if (c + 1 < spec.cols) {
        factors.push_back(Factor{{d, d + 1}, edge_potential});
      }
      if (r + 1 < spec.rows) {
        factors.push_back(Factor{{d, d + spec.cols}, edge_potential});
      }
    }
  }
  return FactorGraph(dim, std::move(factors));
}

GsmFoeSpec default_gsm_foe_spec() {
  GsmFoeSpec spec;
  spec.filters = {Eigen::Vector2d(1.0, -1.0)};
  constexpr int kComponents = 15;
  spec.scales.resize(kComponents);
  Eigen::VectorXd weights(kComponents);
  for (int j = 0; j < kComponents; ++j) {
    // scales log-spaced over [1e-3, 1e2]; weight mass concentrated on the
    // sharpest components with a geometric tail toward the flat ones
    spec.scales[j] = std::pow(10.0, -3.0 + 5.0 * j / (kComponents - 1.0));
    weights[j] = std::pow(0.65, kComponents - 1.0 - j);
  }
  weights /= weights.sum();
  spec.weights = {weights};
  spec.base_variance = {500.0};
  spec.ridge = 1e-4;
  spec.noise_sigma = 10.0;
  return spec;
}

namespace {

void validate_gsm(const GsmFoeSpec& spec) {
  if (spec.filters.empty() || spec.filters.size() != spec.weights.size() ||
      spec.filters.size() != spec.base_variance.size()) {
    throw std::runtime_error("GsmFoeSpec: filters/weights/sigma2 sizes differ");
  }
  if (spec.scales.size() < 1) {
    throw std::runtime_error("GsmFoeSpec: need at least one scale");
  }
  for (Eigen::Index j = 0; j < spec.scales.size(); ++j) {
    if (!(spec.scales[j] > 0.0)) {
      throw std::runtime_error("GsmFoeSpec: scales must be > 0");
    }
  }
  for (std::size_t i = 0; i < spec.filters.size(); ++i) {
    if (spec.filters[i].size() != 2) {
      throw std::runtime_error("GsmFoeSpec: only pairwise (length-2) filters "
                               "are supported");
    }
    if (spec.weights[i].size() != spec.scales.size()) {
      throw std::runtime_error("GsmFoeSpec: weights row length != scales");
    }
    if (spec.weights[i].minCoeff() < 0.0 ||
        std::abs(spec.weights[i].sum() - 1.0) > 1e-8) {
      throw std::runtime_error("GsmFoeSpec: weights must form a simplex");
    }
    if (!(spec.base_variance[i] > 0.0)) {
      throw std::runtime_error("GsmFoeSpec: sigma2 must be > 0");
    }
  }
  if (!(spec.ridge > 0.0) || !(spec.noise_sigma > 0.0)) {
    throw std::runtime_error("GsmFoeSpec: epsilon and noise_sigma must be > 0");
  }
}

}  // namespace

GsmFoeSpec load_gsm_foe_spec(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) {
    throw std::runtime_error("load_gsm_foe_spec: cannot open " + json_path);
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_gsm_foe_spec: " + std::string(e.what()));
  }
  GsmFoeSpec spec;
  try {
    for (const auto& f : j.at("filters")) {
      Eigen::VectorXd filter(f.size());
      for (std::size_t i = 0; i < f.size(); ++i) filter[i] = f[i].get<double>();
      spec.filters.push_back(filter);
    }
    for (const auto& w : j.at("weights")) {
      Eigen::VectorXd row(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) row[i] = w[i].get<double>();
      spec.weights.push_back(row);
    }
    spec.base_variance = j.at("sigma2").get<std::vector<double>>();
    const auto& s = j.at("scales");
    spec.scales.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) spec.scales[i] = s[i].get<double>();
    spec.ridge = j.at("epsilon").get<double>();
    spec.noise_sigma = j.at("noise_sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_gsm_foe_spec: " + std::string(e.what()));
  }
  validate_gsm(spec);
  return spec;
}

FactorGraph build_foe_denoiser(const GsmFoeSpec& spec) {
  validate_gsm(spec);
  const Eigen::Index height = spec.observed.rows();
  const Eigen::Index width = spec.observed.cols();
  if (height < 2 || width < 2) {
    throw std::invalid_argument("build_foe_denoiser: image must be >= 2x2");
  }
  if (!spec.observed.allFinite()) {
    throw std::invalid_argument("build_foe_denoiser: non-finite image");
  }

  const int dim = static_cast<int>(height * width);
  std::vector<Factor> factors;
  factors.reserve(static_cast<std::size_t>(dim) * 3);

  const double inv_noise_var = 1.0 / (spec.noise_sigma * spec.noise_sigma);
  const double ridge = spec.ridge;
  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const NodeId d = static_cast<NodeId>(r * width + c);
      const double obs = spec.observed(r, c);
      factors.push_back(Factor{
          {d},
          [obs, ridge, inv_noise_var](std::span<const double> x,
                                      std::span<double> grad) {
            double v = x[0];
            double resid = v - obs;
            grad[0] = -ridge * v - resid * inv_noise_var;
            return -0.5 * ridge * v * v - 0.5 * resid * resid * inv_noise_var;
          }});
    }
  }

  // One expert term per filter; gradient via mixture responsibilities.
  struct ExpertBank {
    std::vector<Eigen::VectorXd> filters;
    std::vector<Eigen::VectorXd> log_norm;  // log w_ij + log N(0 | 0, var_ij)
    std::vector<Eigen::VectorXd> inv_vars;  // s_j / sigma_i^2
  };
  auto bank = std::make_shared<ExpertBank>();
  for (std::size_t i = 0; i < spec.filters.size(); ++i) {
    bank->filters.push_back(spec.filters[i]);
    Eigen::VectorXd ln(spec.scales.size());
    Eigen::VectorXd iv(spec.scales.size());
    for (Eigen::Index sj = 0; sj < spec.scales.size(); ++sj) {
      double w = spec.weights[i][sj];
      iv[sj] = spec.scales[sj] / spec.base_variance[i];
      double lw =
          w > 0.0 ? std::log(w) : -std::numeric_limits<double>::infinity();
      ln[sj] = lw - 0.5 * (kLog2Pi - std::log(iv[sj]));
    }
    bank->log_norm.push_back(ln);
    bank->inv_vars.push_back(iv);
  }

  auto expert_potential = [bank](std::span<const double> x,
                                 std::span<double> grad) {
    thread_local std::vector<double> comp;
    thread_local std::vector<double> ex;
    double total = 0.0;
    grad[0] = 0.0;
    grad[1] = 0.0;
    for (std::size_t i = 0; i < bank->filters.size(); ++i) {
      const Eigen::VectorXd& filt = bank->filters[i];
      double v = filt[0] * x[0] + filt[1] * x[1];
      const Eigen::VectorXd& ln = bank->log_norm[i];
      const Eigen::VectorXd& iv = bank->inv_vars[i];
      const std::size_t n = static_cast<std::size_t>(ln.size());
      comp.resize(n);
      ex.resize(n);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t sj = 0; sj < n; ++sj) {
        comp[sj] = ln[sj] - 0.5 * v * v * iv[sj];
        peak = std::max(peak, comp[sj]);
      }
      double sum = 0.0;
      for (std::size_t sj = 0; sj < n; ++sj) {
        ex[sj] = std::exp(comp[sj] - peak);
        sum += ex[sj];
      }
      double dv = 0.0;
      for (std::size_t sj = 0; sj < n; ++sj) {
        if (ex[sj] > 0.0) dv += ex[sj] / sum * (-v * iv[sj]);
      }
      total += peak + std::log(sum);
      grad[0] += dv * filt[0];
      grad[1] += dv * filt[1];
    }
    return total;
  };

  for (Eigen::Index r = 0; r < height; ++r) {
    for (Eigen::Index c = 0; c < width; ++c) {
      const NodeId d = static_cast<NodeId>(r * width + c);
      if (c + 1 < width) {
        factors.push_back(Factor{{d, d + 1}, expert_potential});
      }
      if (r + 1 < height) {
        factors.push_back(
            Factor{{d, static_cast<NodeId>(d + width)}, expert_potential});
      }
    }
  }
  return FactorGraph(dim, std::move(factors));
}

}  // namespace steinmp
