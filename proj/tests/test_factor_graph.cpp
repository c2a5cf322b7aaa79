#include <cmath>
#include <set>

#include "doctest.h"
#include "steinmp/factor_graph.hpp"
#include "steinmp/models.hpp"
#include "test_util.hpp"

using namespace steinmp;

namespace {

Factor standard_normal_unary(NodeId d) {
  return Factor{{d}, [](std::span<const double> x, std::span<double> grad) {
                  grad[0] = -x[0];
                  return -0.5 * x[0] * x[0];
                }};
}

Factor laplace_edge(NodeId a, NodeId b, double scale) {
  return Factor{{a, b},
                [scale](std::span<const double> x, std::span<double> grad) {
                  double v = x[0] - x[1];
                  double s = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
                  grad[0] = -s / scale;
                  grad[1] = s / scale;
                  return -std::abs(v) / scale;
                }};
}

}  // namespace

TEST_SUITE("factor_graph") {

TEST_CASE("two-node chain blankets") {
  FactorGraph g = build_graph(2, {laplace_edge(0, 1, 2.0)});
  CHECK(g.blanket(0) == std::vector<NodeId>{1});
  CHECK(g.blanket(1) == std::vector<NodeId>{0});
  CHECK(g.closure(0) == std::vector<NodeId>{0, 1});
  CHECK(g.locality(0).self_pos == 0);
  CHECK(g.locality(1).self_pos == 1);
}

TEST_CASE("path graph blankets") {
  FactorGraph g =
      build_graph(3, {laplace_edge(0, 1, 2.0), laplace_edge(1, 2, 2.0)});
  CHECK(g.blanket(1) == std::vector<NodeId>{0, 2});
  CHECK(g.blanket(0) == std::vector<NodeId>{1});
  CHECK(g.node_factors(1) == std::vector<int>{0, 1});
}

TEST_CASE("grid blankets match independent adjacency enumeration") {
  GridMrfSpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.observations = Eigen::MatrixXd::Zero(3, 3);
  FactorGraph g = build_grid_mrf(spec);

  // Oracle: rebuild each blanket from the factor scopes directly.
  for (NodeId d = 0; d < g.dimension(); ++d) {
    std::set<NodeId> expected;
    for (const Factor& f : g.factors()) {
      bool contains = false;
      for (NodeId n : f.scope) contains |= (n == d);
      if (!contains) continue;
      for (NodeId n : f.scope) {
        if (n != d) expected.insert(n);
      }
    }
    std::vector<NodeId> expected_sorted(expected.begin(), expected.end());
    CHECK(g.blanket(d) == expected_sorted);
  }
  CHECK(g.blanket(4).size() == 4);  // interior
  CHECK(g.blanket(0).size() == 2);  // corner
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(build_graph(2, {laplace_edge(0, 2, 2.0)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_graph(2, {laplace_edge(1, 1, 2.0)}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_graph(0, {}), std::invalid_argument);
}

TEST_CASE("log_density values and additivity") {
  FactorGraph g = build_graph(1, {standard_normal_unary(0)});
  CHECK(g.log_density(Eigen::VectorXd::Zero(1)) == doctest::Approx(0.0));
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(g.log_density(x) == doctest::Approx(-2.0));

  FactorGraph two = build_graph(
      1, {Factor{{0}, [](std::span<const double>, std::span<double> grad) {
                   grad[0] = 0.0;
                   return -1.5;
                 }},
          Factor{{0}, [](std::span<const double>, std::span<double> grad) {
                   grad[0] = 0.0;
                   return -0.25;
                 }}});
  CHECK(two.log_density(x) == doctest::Approx(-1.75));
}

TEST_CASE("log_density rejects bad input") {
  FactorGraph g = build_graph(1, {standard_normal_unary(0)});
  Eigen::VectorXd bad(1);
  bad << std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(g.log_density(bad), std::invalid_argument);
  CHECK_THROWS_AS(g.grad_log_density(bad), std::invalid_argument);
  CHECK_THROWS_AS(g.log_density(Eigen::VectorXd::Zero(2)),
                  std::invalid_argument);
}

TEST_CASE("gaussian score is -x") {
  FactorGraph g = build_gaussian_toy(4);
  Rng rng(11);
  Eigen::VectorXd x = testutil::random_vector(4, rng, 2.0);
  CHECK((g.grad_log_density(x) + x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("laplace edge sign rule") {
  FactorGraph g = build_graph(2, {laplace_edge(0, 1, 2.0)});
  Eigen::VectorXd x(2);
  x << 1.0, 0.0;
  Eigen::VectorXd grad = g.grad_log_density(x);
  CHECK(grad[0] == doctest::Approx(-0.5));
  CHECK(grad[1] == doctest::Approx(0.5));

  // sign(0) = 0 at the kink
  x << 1.0, 1.0;
  CHECK(g.grad_log_density(x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("grid gradient matches finite differences") {
  GridMrfSpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.observations = sample_grid_observations(spec, 5);
  FactorGraph g = build_grid_mrf(spec);
  auto f = [&](const Eigen::VectorXd& x) { return g.log_density(x); };

  Rng rng(17);
  int checked = 0;
  while (checked < 30) {
    Eigen::VectorXd x = testutil::random_vector(9, rng, 3.0);
    bool near_kink = false;
    for (const Factor& fac : g.factors()) {
      if (fac.scope.size() == 2 &&
          std::abs(x[fac.scope[0]] - x[fac.scope[1]]) <= 1e-3) {
        near_kink = true;
      }
    }
    if (near_kink) continue;
    Eigen::VectorXd fd = testutil::finite_diff_grad(f, x);
    CHECK(testutil::close_rel(g.grad_log_density(x), fd, 1e-4));
    ++checked;
  }
}

TEST_CASE("conditional_grad equals full gradient component") {
  GridMrfSpec spec;
  spec.rows = 2;
  spec.cols = 3;
  spec.observations = sample_grid_observations(spec, 7);
  FactorGraph g = build_grid_mrf(spec);
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x = testutil::random_vector(6, rng, 3.0);
    Eigen::VectorXd full = g.grad_log_density(x);
    for (NodeId d = 0; d < 6; ++d) {
      CHECK(g.conditional_grad(x, d) == full[d]);
    }
  }
  CHECK_THROWS_AS(g.conditional_grad(Eigen::VectorXd::Zero(6), 6),
                  std::invalid_argument);
  CHECK_THROWS_AS(g.conditional_grad(Eigen::VectorXd::Zero(6), -1),
                  std::invalid_argument);
}

TEST_CASE("conditional_grad ignores coordinates outside the closure") {
  FactorGraph g =
      build_graph(3, {laplace_edge(0, 1, 2.0), laplace_edge(1, 2, 2.0)});
  Eigen::VectorXd x(3);
  x << 0.3, -0.8, 2.0;
  double base = g.conditional_grad(x, 0);
  x[2] = -77.0;
  CHECK(g.conditional_grad(x, 0) == base);
}

TEST_CASE("conditional_grad finite-difference check at an interior node") {
  GridMrfSpec spec;
  spec.rows = 3;
  spec.cols = 3;
  spec.observations = sample_grid_observations(spec, 31);
  FactorGraph g = build_grid_mrf(spec);
  Rng rng(37);
  const NodeId interior = 4;
  int checked = 0;
  while (checked < 10) {
    Eigen::VectorXd x = testutil::random_vector(9, rng, 3.0);
    bool near_kink = false;
    for (const Factor& fac : g.factors()) {
      if (fac.scope.size() == 2 &&
          std::abs(x[fac.scope[0]] - x[fac.scope[1]]) <= 1e-3) {
        near_kink = true;
      }
    }
    if (near_kink) continue;
    auto f = [&](const Eigen::VectorXd& v) { return g.log_density(v); };
    double fd = testutil::finite_diff_grad(f, x)[interior];
    CHECK(testutil::close_rel(g.conditional_grad(x, interior), fd, 1e-4));
    ++checked;
  }
}

}  // TEST_SUITE
