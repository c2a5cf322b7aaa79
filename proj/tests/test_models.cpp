#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "steinmp/models.hpp"
#include "test_util.hpp"

using namespace steinmp;

TEST_SUITE("models") {

TEST_CASE("gaussian toy basics") {
  CHECK_THROWS_AS(build_gaussian_toy(0), std::invalid_argument);

  FactorGraph one = build_gaussian_toy(1);
  Eigen::VectorXd x(1);
  x << 3.0;
  CHECK(one.grad_log_density(x)[0] == doctest::Approx(-3.0));

  FactorGraph five = build_gaussian_toy(5);
  for (NodeId d = 0; d < 5; ++d) CHECK(five.blanket(d).empty());

  Rng rng(3);
  Eigen::VectorXd v = testutil::random_vector(5, rng, 2.0);
  CHECK(five.log_density(Eigen::VectorXd::Zero(5)) - five.log_density(v) ==
        doctest::Approx(0.5 * v.squaredNorm()));
}

TEST_CASE("observation sampling is deterministic and both branches fire") {
  GridMrfSpec spec;
  spec.rows = 20;
  spec.cols = 20;
  Eigen::MatrixXd a = sample_grid_observations(spec, 77);
  Eigen::MatrixXd b = sample_grid_observations(spec, 77);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a - sample_grid_observations(spec, 78)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("observation mixture moments") {
  GridMrfSpec spec;
  spec.rows = 400;
  spec.cols = 250;  // 1e5 draws
  Eigen::MatrixXd y = sample_grid_observations(spec, 2023);
  const double n = y.size();

  // Analytic mean: 0.6 * 0 + 0.4 * (4 + 1.3 * gamma), gamma Euler-Mascheroni.
  const double gamma = 0.5772156649015329;
  const double expected = 0.4 * (4.0 + 1.3 * gamma);
  double mean = y.mean();
  double sd = std::sqrt((y.array() - mean).square().mean());
  CHECK(std::abs(mean - expected) <= 3.0 * sd / std::sqrt(n));

  // Branch frequencies: Gaussian branch values sit near 0, Gumbel near 4+.
  // Count via the midpoint 2 (both branch densities are negligible there
  // relative to their own side).
  double below = (y.array() < 2.0).count() / n;
  double se_bernoulli = std::sqrt(0.6 * 0.4 / n);
  CHECK(std::abs(below - 0.6) <= 3.0 * se_bernoulli + 0.02);
}

TEST_CASE("grid factor counts") {
  GridMrfSpec tiny;
  tiny.rows = 1;
  tiny.cols = 1;
  tiny.observations = Eigen::MatrixXd::Zero(1, 1);
  CHECK(build_grid_mrf(tiny).factors().size() == 1);  // no edges

  GridMrfSpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.observations = Eigen::MatrixXd::Zero(3, 3);
  FactorGraph g = build_grid_mrf(spec);
  CHECK(g.factors().size() == 9 + 12);  // 2*r*c - r - c = 12 edges
  CHECK(g.blanket(4).size() == 4);
}

TEST_CASE("grid unary gradient matches finite differences") {
  GridMrfSpec spec;
  spec.rows = 1;
  spec.cols = 1;
  spec.observations = Eigen::MatrixXd::Constant(1, 1, 1.7);
  FactorGraph g = build_grid_mrf(spec);
  Rng rng(5);
  auto f = [&](const Eigen::VectorXd& x) { return g.log_density(x); };
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd x(1);
    x << rng.uniform(-8.0, 12.0);
    Eigen::VectorXd fd = testutil::finite_diff_grad(f, x);
    CHECK(testutil::close_rel(g.grad_log_density(x), fd, 1e-4));
  }
}

TEST_CASE("gumbel-only unary has zero gradient at its mode") {
  GridMrfSpec spec;
  spec.rows = 1;
  spec.cols = 1;
  spec.mix_gauss = 0.0;
  spec.mix_gumbel = 1.0;
  spec.observations = Eigen::MatrixXd::Constant(1, 1, 0.5);
  FactorGraph g = build_grid_mrf(spec);
  Eigen::VectorXd mode(1);
  mode << 0.5 + spec.gumbel_loc;  // z = 0
  CHECK(std::abs(g.grad_log_density(mode)[0]) < 1e-14);
}

TEST_CASE("grid unary score stays finite on a wide scan") {
  GridMrfSpec spec;
  spec.rows = 1;
  spec.cols = 2;
  spec.observations = Eigen::MatrixXd::Constant(1, 2, 1.0);
  FactorGraph g = build_grid_mrf(spec);
  for (double v = -100.0; v <= 100.0; v += 2.5) {
    Eigen::VectorXd x(2);
    x << v, -v;
    CHECK(std::isfinite(g.log_density(x)));
    CHECK(g.grad_log_density(x).allFinite());
  }
}

TEST_CASE("default gsm prior is a valid spec") {
  GsmFoeSpec spec = default_gsm_foe_spec();
  CHECK(spec.filters.size() == 1);
  CHECK(spec.scales.size() == 15);
  CHECK(spec.weights[0].sum() == doctest::Approx(1.0));
  CHECK(spec.scales.minCoeff() == doctest::Approx(1e-3));
  CHECK(spec.scales.maxCoeff() == doctest::Approx(1e2));
}

TEST_CASE("gsm spec json round trip and schema errors") {
  GsmFoeSpec spec = default_gsm_foe_spec();
  std::string path = "gsm_roundtrip_test.json";
  {
    std::ofstream out(path);
    out.precision(17);
    out << "{\"filters\":[[1,-1]],\"weights\":[[";
    for (int j = 0; j < 15; ++j) {
      out << (j ? "," : "") << spec.weights[0][j];
    }
    out << "]],\"sigma2\":[500.0],\"scales\":[";
    for (int j = 0; j < 15; ++j) {
      out << (j ? "," : "") << spec.scales[j];
    }
    out << "],\"epsilon\":1e-4,\"noise_sigma\":10.0}";
  }
  GsmFoeSpec loaded = load_gsm_foe_spec(path);
  CHECK(loaded.ridge == doctest::Approx(1e-4));
  CHECK(loaded.noise_sigma == doctest::Approx(10.0));
  CHECK((loaded.weights[0] - spec.weights[0]).cwiseAbs().maxCoeff() < 1e-9);
  std::remove(path.c_str());

  std::string bad = "gsm_bad_test.json";
  {
    std::ofstream out(bad);
    out << "{\"filters\":[[1,-1]],\"weights\":[[0.5,0.2]],\"sigma2\":[500],"
           "\"scales\":[1.0,2.0],\"epsilon\":1e-4,\"noise_sigma\":10}";
  }
  CHECK_THROWS_AS(load_gsm_foe_spec(bad), std::runtime_error);  // not a simplex
  std::remove(bad.c_str());
  CHECK_THROWS_AS(load_gsm_foe_spec("no_such_file.json"), std::runtime_error);
}

TEST_CASE("foe ridge dominates when the other terms are negligible") {
  GsmFoeSpec spec = default_gsm_foe_spec();
  spec.ridge = 1e6;
  spec.noise_sigma = 1e9;
  spec.observed = Eigen::MatrixXd::Constant(2, 2, 100.0);
  FactorGraph g = build_foe_denoiser(spec);
  Rng rng(7);
  Eigen::VectorXd x =
      testutil::random_vector(4, rng, 3.0).cwiseAbs().array() + 4.0;
  Eigen::VectorXd score = g.grad_log_density(x);
  CHECK(((score + spec.ridge * x).cwiseAbs().array() /
         (spec.ridge * x.cwiseAbs().array()))
            .maxCoeff() < 1e-3);
}

TEST_CASE("single-component expert is a pure gaussian in the difference") {
  GsmFoeSpec spec;
  spec.filters = {Eigen::Vector2d(1.0, -1.0)};
  spec.weights = {Eigen::VectorXd::Ones(1)};
  spec.base_variance = {50.0};
  spec.scales = Eigen::VectorXd::Ones(1) * 2.0;  // variance 25
  spec.noise_sigma = 1e9;
  spec.ridge = 1e-12;
  spec.observed = Eigen::MatrixXd::Zero(2, 2);
  FactorGraph g = build_foe_denoiser(spec);

  // Columns differ by 4, rows are identical: only the two horizontal edges
  // contribute, each with d/dv of -v^2/(2*25) = -v/25 mapped through [1, -1].
  Eigen::VectorXd x(4);
  x << 7.0, 3.0, 7.0, 3.0;
  Eigen::VectorXd score = g.grad_log_density(x);
  CHECK(score[0] == doctest::Approx(-4.0 / 25.0).epsilon(1e-6));
  CHECK(score[1] == doctest::Approx(4.0 / 25.0).epsilon(1e-6));
  CHECK(score[2] == doctest::Approx(-4.0 / 25.0).epsilon(1e-6));
  CHECK(score[3] == doctest::Approx(4.0 / 25.0).epsilon(1e-6));
}

TEST_CASE("foe gradient matches finite differences on a random image") {
  GsmFoeSpec spec = default_gsm_foe_spec();
  Rng rng(11);
  spec.observed = 128.0 + 40.0 * testutil::random_matrix(8, 8, rng).array();
  FactorGraph g = build_foe_denoiser(spec);
  auto f = [&](const Eigen::VectorXd& x) { return g.log_density(x); };
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd x(64);
    for (int i = 0; i < 64; ++i) x[i] = rng.uniform(0.0, 255.0);
    Eigen::VectorXd fd = testutil::finite_diff_grad(f, x, 1e-4);
    CHECK(testutil::close_rel(g.grad_log_density(x), fd, 1e-4));
  }
}

TEST_CASE("posterior score approaches the prior score as noise grows") {
  GsmFoeSpec wide = default_gsm_foe_spec();
  Rng rng(13);
  wide.observed = 120.0 + 30.0 * testutil::random_matrix(6, 6, rng).array();
  wide.noise_sigma = 1e6;
  FactorGraph posterior = build_foe_denoiser(wide);

  GsmFoeSpec prior_only = wide;
  prior_only.noise_sigma = 1e30;  // likelihood numerically zero
  FactorGraph prior = build_foe_denoiser(prior_only);

  Eigen::VectorXd x(36);
  for (int i = 0; i < 36; ++i) {
    x[i] = wide.observed(i / 6, i % 6) + 5.0 * rng.normal();
  }
  CHECK((posterior.grad_log_density(x) - prior.grad_log_density(x))
            .cwiseAbs()
            .maxCoeff() < 1e-6);
}

TEST_CASE("foe builder validation") {
  GsmFoeSpec spec = default_gsm_foe_spec();
  spec.observed = Eigen::MatrixXd::Zero(1, 5);
  CHECK_THROWS_AS(build_foe_denoiser(spec), std::invalid_argument);

  GsmFoeSpec bad_filter = default_gsm_foe_spec();
  bad_filter.filters = {Eigen::Vector3d(1.0, -2.0, 1.0)};
  bad_filter.observed = Eigen::MatrixXd::Zero(4, 4);
  CHECK_THROWS_AS(build_foe_denoiser(bad_filter), std::runtime_error);
}

}  // TEST_SUITE
