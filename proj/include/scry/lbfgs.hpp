#pragma once
// Limited-memory BFGS with backtracking Armijo line search. The objective
// is supplied as a combined value/gradient callback; only improving steps
// are accepted, so the recorded objective history is monotone.

#include <functional>
#include <span>
#include <vector>

namespace scry {

struct LbfgsOptions {
  int max_iterations = 100;
  double grad_tol = 1e-8;      // infinity norm of the gradient
  double initial_step = 1.0;
  int history = 8;
  int max_backtracks = 40;
};

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> f_history;  // objective after each accepted step
};

// Minimizes f. The callback fills `grad` and returns the value at `x`.
LbfgsResult lbfgs_minimize(
    const std::function<double(std::span<const double> x, std::span<double> grad)>& fg,
    std::vector<double> x0, const LbfgsOptions& options);

}  // namespace scry
