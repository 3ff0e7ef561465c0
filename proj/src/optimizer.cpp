#include "probekit/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace probekit {

namespace {

struct CurvaturePair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop_direction(const Eigen::VectorXd& grad,
                                   const std::deque<CurvaturePair>& memory) {
  Eigen::VectorXd q = -grad;
  std::vector<double> alpha(memory.size());
  for (std::size_t i = memory.size(); i-- > 0;) {
    alpha[i] = memory[i].rho * memory[i].s.dot(q);
    q -= alpha[i] * memory[i].y;
  }
  if (!memory.empty()) {
    const auto& last = memory.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t i = 0; i < memory.size(); ++i) {
    const double beta = memory[i].rho * memory[i].y.dot(q);
    q += (alpha[i] - beta) * memory[i].s;
  }
  return q;
}

}  // namespace

OptimizationReport minimize_lbfgs(const ObjectiveFn& fn, Eigen::VectorXd& x,
                                  const LbfgsOptions& options) {
  OptimizationReport report;
  Eigen::VectorXd grad(x.size());
  double f = fn(x, grad);
  report.trace.push_back(f);
  std::deque<CurvaturePair> memory;

  Eigen::VectorXd x_new(x.size());
  Eigen::VectorXd grad_new(x.size());

  while (true) {
    report.grad_max_abs = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
    if (report.grad_max_abs <= options.grad_tol) {
      report.converged = true;
      break;
    }
    if (report.iterations >= options.max_iter) break;

    Eigen::VectorXd direction = two_loop_direction(grad, memory);
    double slope = grad.dot(direction);
    double step = 1.0;
    if (memory.empty() || !(slope < 0.0)) {
      memory.clear();
      direction = -grad;
      slope = -grad.squaredNorm();
      step = 1.0 / std::max(1.0, grad.norm());
    }

    bool accepted = false;
    double f_new = f;
    for (int ls = 0; ls < options.max_line_search; ++ls) {
      x_new = x + step * direction;
      f_new = fn(x_new, grad_new);
      if (std::isfinite(f_new) && f_new <= f + options.armijo_c1 * step * slope && f_new < f) {
        accepted = true;
        break;
      }
      // Safeguarded quadratic interpolation of the backtracking step.
      double trial = 0.5 * step;
      if (std::isfinite(f_new)) {
        const double denom = 2.0 * (f_new - f - slope * step);
        if (denom > 0.0) trial = -slope * step * step / denom;
      }
      step = std::clamp(trial, 0.1 * step, 0.5 * step);
    }

    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      break;
    }

    CurvaturePair pair{x_new - x, grad_new - grad, 0.0};
    const double sy = pair.s.dot(pair.y);
    if (sy > 1e-12 * pair.s.norm() * pair.y.norm()) {
      pair.rho = 1.0 / sy;
      memory.push_back(std::move(pair));
      if (static_cast<int>(memory.size()) > options.history) memory.pop_front();
    }
    x.swap(x_new);
    grad.swap(grad_new);
    f = f_new;
    ++report.iterations;
    report.trace.push_back(f);
  }
  report.objective = f;
  return report;
}

}  // namespace probekit
