#include "scry/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace scry {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

LbfgsResult lbfgs_minimize(
    const std::function<double(std::span<const double>, std::span<double>)>& fg,
    std::vector<double> x0, const LbfgsOptions& options) {
  const size_t n = x0.size();
  LbfgsResult result;
  result.x = std::move(x0);

  std::vector<double> grad(n, 0.0);
  double f = fg(result.x, grad);
  if (!std::isfinite(f)) {
    throw std::runtime_error("lbfgs: objective is not finite at the start point");
  }
  result.f = f;
  result.f_history.push_back(f);

  struct Pair {
    std::vector<double> s, y;
    double rho;
  };
  std::deque<Pair> history;

  std::vector<double> direction(n), x_new(n), grad_new(n), alpha_buf;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (inf_norm(grad) <= options.grad_tol) {
      result.converged = true;
      break;
    }

    // Two-loop recursion for d = -H * grad.
    direction = grad;
    alpha_buf.assign(history.size(), 0.0);
    for (size_t k = history.size(); k-- > 0;) {
      const Pair& p = history[k];
      double a = p.rho * dot(p.s, direction);
      alpha_buf[k] = a;
      for (size_t i = 0; i < n; ++i) direction[i] -= a * p.y[i];
    }
    if (!history.empty()) {
      const Pair& last = history.back();
      double gamma = dot(last.s, last.y) / dot(last.y, last.y);
      for (double& d : direction) d *= gamma;
    }
    for (size_t k = 0; k < history.size(); ++k) {
      const Pair& p = history[k];
      double b = p.rho * dot(p.y, direction);
      for (size_t i = 0; i < n; ++i) direction[i] += (alpha_buf[k] - b) * p.s[i];
    }
    for (double& d : direction) d = -d;

    double dir_deriv = dot(grad, direction);
    if (dir_deriv >= 0.0) {
      // Not a descent direction (stale curvature); fall back to steepest
      // descent for this step.
      for (size_t i = 0; i < n; ++i) direction[i] = -grad[i];
      dir_deriv = dot(grad, direction);
      history.clear();
    }

    // Backtracking Armijo line search.
    constexpr double kArmijo = 1e-4;
    double step = options.initial_step;
    if (history.empty()) {
      double gmax = inf_norm(grad);
      if (gmax > 1.0) step = options.initial_step / gmax;
    }
    double f_new = f;
    bool accepted = false;
    for (int bt = 0; bt < options.max_backtracks; ++bt) {
      for (size_t i = 0; i < n; ++i) x_new[i] = result.x[i] + step * direction[i];
      f_new = fg(x_new, grad_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * dir_deriv) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.converged = true;  // no improving step found at this scale
      break;
    }

    Pair pair;
    pair.s.resize(n);
    pair.y.resize(n);
    for (size_t i = 0; i < n; ++i) {
      pair.s[i] = x_new[i] - result.x[i];
      pair.y[i] = grad_new[i] - grad[i];
    }
    double sy = dot(pair.s, pair.y);
    double ss = std::sqrt(dot(pair.s, pair.s));
    double yy = std::sqrt(dot(pair.y, pair.y));
    if (sy > 1e-12 * ss * yy && sy > 0.0) {
      pair.rho = 1.0 / sy;
      history.push_back(std::move(pair));
      if (static_cast<int>(history.size()) > options.history) history.pop_front();
    }

    result.x = x_new;
    grad = grad_new;
    f = f_new;
    result.f = f;
    result.f_history.push_back(f);
    result.iterations = iter + 1;
  }

  return result;
}

}  // namespace scry
