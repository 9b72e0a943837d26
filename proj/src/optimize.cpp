#include "hermite/optimize.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <ostream>
#include <random>

namespace hermite {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct CurvaturePair {
  Vector s;
  Vector y;
};

/// 1 where a variable may move, 0 where it sits on a bound the gradient pushes against.
Vector free_mask(const Vector& x, const Vector& g, const Vector& lower, const Vector& upper) {
  Vector mask = Vector::Ones(x.size());
  for (Index i = 0; i < x.size(); ++i)
    if ((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)) mask[i] = 0.0;
  return mask;
}

/// -H g over the free variables, H the L-BFGS inverse Hessian of the masked pairs.
Vector two_loop_direction(const std::deque<CurvaturePair>& pairs, const Vector& g,
                          const Vector& mask) {
  Vector qv = g.cwiseProduct(mask);
  const int m = static_cast<int>(pairs.size());
  std::vector<double> alpha(m), rho(m, 0.0);
  for (int i = m - 1; i >= 0; --i) {
    const Vector s = pairs[i].s.cwiseProduct(mask);
    const Vector y = pairs[i].y.cwiseProduct(mask);
    const double sy = s.dot(y);
    if (sy <= 0.0) continue;
    rho[i] = 1.0 / sy;
    alpha[i] = rho[i] * s.dot(qv);
    qv -= alpha[i] * y;
  }
  double gamma = 1.0;
  for (int i = m - 1; i >= 0; --i) {
    if (rho[i] == 0.0) continue;
    const Vector y = pairs[i].y.cwiseProduct(mask);
    gamma = 1.0 / (rho[i] * y.squaredNorm());
    break;
  }
  qv *= gamma;
  for (int i = 0; i < m; ++i) {
    if (rho[i] == 0.0) continue;
    const Vector s = pairs[i].s.cwiseProduct(mask);
    const Vector y = pairs[i].y.cwiseProduct(mask);
    const double beta = rho[i] * y.dot(qv);
    qv += (alpha[i] - beta) * s;
  }
  return -qv.cwiseProduct(mask);
}

}  // namespace

OptimizeOptions OptimizeOptions::with_uniform_bounds(Index n, double lo, double hi) {
  OptimizeOptions o;
  o.lower = Vector::Constant(n, lo);
  o.upper = Vector::Constant(n, hi);
  return o;
}

void OptimizeOptions::validate(Index n) const {
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("optimize: bounds must have one entry per parameter");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("optimize: lower bound exceeds upper bound");
  if (max_iterations < 0) throw std::invalid_argument("optimize: negative iteration budget");
  if (!(max_wall_seconds > 0.0))
    throw std::invalid_argument("optimize: wall-time budget must be > 0");
  if (!(gradient_tolerance > 0.0) || !(decrease_tolerance > 0.0))
    throw std::invalid_argument("optimize: tolerances must be > 0");
  if (memory < 1) throw std::invalid_argument("optimize: memory must be at least 1");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0))
    throw std::invalid_argument("optimize: Armijo constant must lie in (0, 1)");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
    throw std::invalid_argument("optimize: backtracking factor must lie in (0, 1)");
  if (max_backtracks < 1) throw std::invalid_argument("optimize: need at least one backtrack");
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::gradient_tolerance: return "gradient_tolerance";
    case StopReason::decrease_tolerance: return "decrease_tolerance";
    case StopReason::target_objective: return "target_objective";
    case StopReason::max_iterations: return "max_iterations";
    case StopReason::max_wall_time: return "max_wall_time";
    case StopReason::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

void OptimizeTrace::write_csv(std::ostream& out) const {
  out << csv_header << '\n';
  out << std::setprecision(17);
  for (const auto& r : records)
    out << r.iteration << ',' << r.objective << ',' << r.infidelity << ',' << r.guard << ','
        << r.gradient_norm << ',' << r.step_length << ',' << r.wall_seconds << '\n';
}

Vector project_onto_box(const Vector& x, const Vector& lower, const Vector& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

OptimizeResult minimize_in_box(const Evaluator& evaluate, const Vector& theta0,
                               const OptimizeOptions& options) {
  const Index n = theta0.size();
  options.validate(n);
  if ((theta0.array() < options.lower.array()).any() ||
      (theta0.array() > options.upper.array()).any())
    throw std::invalid_argument("optimize: initial parameters lie outside the bounds");

  const auto t0 = Clock::now();
  OptimizeResult result;
  OptimizeTrace& trace = result.trace;
  Vector x = theta0;

  auto checked_eval = [&](const Vector& at) {
    try {
      Evaluation e = evaluate(at);
      if (e.grad.size() != n) throw std::runtime_error("gradient has the wrong length");
      if (!std::isfinite(e.value.total) || !e.grad.allFinite())
        throw std::runtime_error("non-finite objective or gradient");
      return e;
    } catch (const std::exception& err) {
      throw OptimizationAborted(std::string("optimize: evaluation failed: ") + err.what(), trace,
                                x);
    }
  };
  auto projected_gradient = [&](const Vector& at, const Vector& g) {
    return Vector(project_onto_box(at - g, options.lower, options.upper) - at);
  };

  Evaluation cur = checked_eval(x);
  auto record = [&](int it, double step, const Vector& pg) {
    trace.records.push_back({it, cur.value.total, cur.value.infidelity, cur.value.guard, pg.norm(),
                             step, seconds_since(t0)});
  };
  Vector pg = projected_gradient(x, cur.grad);
  record(0, 0.0, pg);

  std::deque<CurvaturePair> pairs;
  trace.stop_reason = StopReason::max_iterations;
  for (int it = 1;; ++it) {
    if (cur.value.total <= options.target_objective) {
      trace.stop_reason = StopReason::target_objective;
      break;
    }
    if (pg.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      trace.stop_reason = StopReason::gradient_tolerance;
      break;
    }
    if (it > options.max_iterations) {
      trace.stop_reason = StopReason::max_iterations;
      break;
    }
    if (seconds_since(t0) >= options.max_wall_seconds) {
      trace.stop_reason = StopReason::max_wall_time;
      break;
    }

    const Vector mask = free_mask(x, cur.grad, options.lower, options.upper);
    Vector dir = two_loop_direction(pairs, cur.grad, mask);
    if (dir.dot(cur.grad) >= 0.0 || pairs.empty()) {
      pairs.clear();
      dir = -cur.grad.cwiseProduct(mask);
    }
    // Without curvature information, cap the first trial step at unit length.
    double step = pairs.empty() ? std::min(1.0, 1.0 / dir.norm()) : 1.0;

    bool accepted = false;
    Vector x_new;
    Evaluation trial;
    for (int bt = 0; bt < options.max_backtracks; ++bt, step *= options.backtrack_factor) {
      x_new = project_onto_box(x + step * dir, options.lower, options.upper);
      const double predicted = cur.grad.dot(x_new - x);
      if (predicted >= 0.0 && (x_new - x).norm() == 0.0) break;
      trial = checked_eval(x_new);
      if (trial.value.total <= cur.value.total + options.armijo_c1 * predicted) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (!pairs.empty()) {
        // Retry from steepest descent before giving up.
        pairs.clear();
        --it;
        continue;
      }
      trace.stop_reason = StopReason::line_search_failed;
      break;
    }

    const Vector s = x_new - x;
    const Vector y = trial.grad - cur.grad;
    if (s.dot(y) > 1e-12 * y.squaredNorm() && s.dot(y) > 0.0) {
      pairs.push_back({s, y});
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }
    const double f_old = cur.value.total;
    x = x_new;
    cur = std::move(trial);
    pg = projected_gradient(x, cur.grad);
    record(it, s.norm(), pg);

    const double scale = std::max({std::abs(f_old), std::abs(cur.value.total), 1e-300});
    if (f_old - cur.value.total <= options.decrease_tolerance * scale) {
      trace.stop_reason = StopReason::decrease_tolerance;
      break;
    }
  }
  result.theta = x;
  result.value = cur.value;
  return result;
}

OptimizeResult optimize(const ControlProblem& problem, const Vector& theta0,
                        const StateObjective& objective, const HermiteScheme& scheme,
                        const TimeGrid& grid, const OptimizeOptions& options,
                        const GradientOptions& gradient_options) {
  if (theta0.size() != problem.n_params())
    throw std::invalid_argument("optimize: initial parameter vector has the wrong length");
  const Evaluator eval = [&](const Vector& theta) {
    GradientReport rep =
        compute_gradient(problem, as_span(theta), scheme, grid, objective, gradient_options);
    return Evaluation{rep.value, std::move(rep.grad)};
  };
  return minimize_in_box(eval, theta0, options);
}

Vector random_initial_controls(Index n_params, double amplitude, std::uint64_t seed) {
  if (n_params < 0) throw std::invalid_argument("random controls: negative parameter count");
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw std::invalid_argument("random controls: amplitude must be finite and non-negative");
  Vector theta = Vector::Zero(n_params);
  if (amplitude == 0.0) return theta;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  for (Index i = 0; i < n_params; ++i) theta[i] = dist(rng);
  return theta;
}

}  // namespace hermite
