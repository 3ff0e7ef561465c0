#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>

#include "probekit/common.hpp"
#include "probekit/optimizer.hpp"

using namespace probekit;

TEST_CASE("minimises a convex quadratic to its analytic optimum") {
  Eigen::MatrixXd A(3, 3);
  A << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  Eigen::VectorXd b(3);
  b << 1, -2, 0.5;
  ObjectiveFn f = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = A * x - b;
    return 0.5 * x.dot(A * x) - b.dot(x);
  };
  Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
  const auto rep = minimize_lbfgs(f, x, {});
  const Eigen::VectorXd expected = A.ldlt().solve(b);
  CHECK(rep.converged);
  CHECK((x - expected).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(rep.grad_max_abs <= 1e-6);
}

TEST_CASE("Rosenbrock converges and every accepted step decreases f") {
  ObjectiveFn f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double a = 1 - x(0), b = x(1) - x(0) * x(0);
    g.resize(2);
    g(0) = -2 * a - 400 * x(0) * b;
    g(1) = 200 * b;
    return a * a + 100 * b * b;
  };
  Eigen::VectorXd x(2);
  x << -1.2, 1.0;
  const auto rep = minimize_lbfgs(f, x, {.max_iter = 4000, .grad_tol = 1e-8});
  CHECK(rep.converged);
  CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(x(1) == doctest::Approx(1.0).epsilon(1e-5));
  REQUIRE(rep.trace.size() >= 2);
  for (std::size_t i = 1; i < rep.trace.size(); ++i) CHECK(rep.trace[i] < rep.trace[i - 1]);
}

TEST_CASE("iteration cap is respected") {
  ObjectiveFn f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2 * x;
    g(0) *= 1000;
    return x.squaredNorm() + 999 * x(0) * x(0);
  };
  Eigen::VectorXd x = Eigen::VectorXd::Constant(5, 3.0);
  const auto rep = minimize_lbfgs(f, x, {.max_iter = 2, .grad_tol = 1e-12});
  CHECK(rep.iterations <= 2);
  CHECK_FALSE(rep.converged);
}
