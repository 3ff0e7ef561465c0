#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace probekit {

/// f(x) with gradient written into grad (same size as x).
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct LbfgsOptions {
  int max_iter = 4000;
  double grad_tol = 1e-6;  // on max |grad_i|
  int history = 10;
  int max_line_search = 50;
  double armijo_c1 = 1e-4;
};

struct OptimizationReport {
  int iterations = 0;
  double objective = 0.0;
  double grad_max_abs = 0.0;
  bool converged = false;
  /// Objective after every accepted step, starting with the initial value.
  std::vector<double> trace;
};

/// Limited-memory BFGS with a backtracking Armijo line search. Every accepted
/// step strictly decreases f; the memory is reset when a direction fails to
/// descend. x is updated in place.
OptimizationReport minimize_lbfgs(const ObjectiveFn& fn, Eigen::VectorXd& x,
                                  const LbfgsOptions& options);

}  // namespace probekit
