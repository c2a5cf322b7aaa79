#include "steinmp/hmc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "steinmp/rng.hpp"

namespace steinmp {

int worker_count() {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  if (const char* env = std::getenv("STEINMP_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) workers = std::min(workers, cap);
  }
  return workers;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> leapfrog(const FactorGraph& graph,
                                                     Eigen::VectorXd position,
                                                     Eigen::VectorXd momentum,
                                                     double step_size,
                                                     int steps) {
  if (step_size <= 0.0) {
    throw std::invalid_argument("leapfrog: step_size must be > 0");
  }
  if (steps < 1) {
    throw std::invalid_argument("leapfrog: steps must be >= 1");
  }
  auto finite = [](const Eigen::VectorXd& v) { return v.allFinite(); };
  if (!finite(position) || !finite(momentum)) return {position, momentum};

  Eigen::VectorXd grad = graph.grad_log_density(position);
  momentum += 0.5 * step_size * grad;
  for (int s = 0; s < steps; ++s) {
    position += step_size * momentum;
    if (!finite(position)) return {position, momentum};
    try {
      grad = graph.grad_log_density(position);
    } catch (const std::invalid_argument&) {
      return {position, momentum};
    }
    if (!finite(grad)) return {position, momentum};
    momentum += (s + 1 == steps ? 0.5 : 1.0) * step_size * grad;
  }
  return {position, momentum};
}

namespace {

struct ChainResult {
  Eigen::MatrixXd samples;
  long accepted = 0;
  long proposed = 0;
};

ChainResult run_chain(const HmcConfig& config, const FactorGraph& graph,
                      Eigen::VectorXd x, std::uint64_t chain_seed) {
  Rng rng(chain_seed);
  const Eigen::Index dim = x.size();

  ChainResult result;
  result.samples.resize(config.samples_per_chain, dim);

  double log_p = graph.log_density(x);

  // Dual averaging state (Nesterov-style primal-dual, burn-in only).
  double eps = config.initial_step_size;
  const double mu = std::log(10.0 * eps);
  double h_bar = 0.0;
  double log_eps_bar = 0.0;
  constexpr double kGamma = 0.05;
  constexpr double kT0 = 10.0;
  constexpr double kKappa = 0.75;

  const int total = config.burn_in + config.samples_per_chain;
  for (int iter = 0; iter < total; ++iter) {
    Eigen::VectorXd momentum(dim);
    for (Eigen::Index d = 0; d < dim; ++d) momentum[d] = rng.normal();

    const double h0 = -log_p + 0.5 * momentum.squaredNorm();
    auto [x_new, r_new] =
        leapfrog(graph, x, momentum, eps, config.leapfrog_steps);

    double accept_prob = 0.0;
    double log_p_new = 0.0;
    if (x_new.allFinite() && r_new.allFinite()) {
      log_p_new = graph.log_density(x_new);
      double h1 = -log_p_new + 0.5 * r_new.squaredNorm();
      if (std::isfinite(h1)) {
        accept_prob = std::min(1.0, std::exp(h0 - h1));
      }
    }
    if (rng.uniform() < accept_prob) {
      x = x_new;
      log_p = log_p_new;
      if (iter >= config.burn_in) ++result.accepted;
    }
    if (iter >= config.burn_in) ++result.proposed;

    if (iter < config.burn_in) {
      double m = iter + 1;
      h_bar = (1.0 - 1.0 / (m + kT0)) * h_bar +
              (config.target_accept - accept_prob) / (m + kT0);
      double log_eps = mu - std::sqrt(m) / kGamma * h_bar;
      double w = std::pow(m, -kKappa);
      log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
      eps = std::exp(log_eps);
      if (iter + 1 == config.burn_in) eps = std::exp(log_eps_bar);
    } else {
      result.samples.row(iter - config.burn_in) = x;
    }
  }
  return result;
}

}  // namespace

SampleBank sample_hmc(const HmcConfig& config, const FactorGraph& graph,
                      const Eigen::MatrixXd& init_per_chain) {
  if (config.chains < 1 || config.samples_per_chain < 1) {
    throw std::invalid_argument("sample_hmc: chains and samples must be >= 1");
  }
  if (config.burn_in < 0 || config.leapfrog_steps < 1) {
    throw std::invalid_argument("sample_hmc: bad burn_in or leapfrog_steps");
  }
  if (init_per_chain.rows() != config.chains ||
      init_per_chain.cols() != graph.dimension()) {
    throw std::invalid_argument("sample_hmc: init shape mismatch");
  }

  std::vector<ChainResult> results(config.chains);
  auto run_one = [&](int c) {
    std::uint64_t chain_seed =
        Rng::substream(config.seed, "hmc-chain-" + std::to_string(c))
            .next_u64();
    results[c] = run_chain(config, graph, init_per_chain.row(c).transpose(),
                           chain_seed);
  };

  const int workers = std::min(worker_count(), config.chains);
  if (workers <= 1) {
    for (int c = 0; c < config.chains; ++c) run_one(c);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int c = next.fetch_add(1); c < config.chains;
             c = next.fetch_add(1)) {
          run_one(c);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  SampleBank bank;
  bank.samples.resize(
      static_cast<Eigen::Index>(config.chains) * config.samples_per_chain,
      graph.dimension());
  long accepted = 0;
  long proposed = 0;
  for (int c = 0; c < config.chains; ++c) {
    bank.samples.middleRows(
        static_cast<Eigen::Index>(c) * config.samples_per_chain,
        config.samples_per_chain) = results[c].samples;
    accepted += results[c].accepted;
    proposed += results[c].proposed;
  }
  bank.acceptance_rate =
      proposed > 0 ? static_cast<double>(accepted) / proposed : 0.0;
  return bank;
}

}  // namespace steinmp
