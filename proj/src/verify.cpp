#include "hermite/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "hermite/model.hpp"
#include "hermite/parallel.hpp"

namespace hermite {

namespace {

using cd = std::complex<double>;
constexpr cd I{0.0, 1.0};

/// tr(A^dagger B)
cd trace_inner(const ComplexMatrix& A, const ComplexMatrix& B) { return (A.adjoint() * B).trace(); }

}  // namespace

void RabiSpec::validate() const {
  if (!(std::abs(omega) > 0.0)) throw std::invalid_argument("rabi: |Omega| must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw std::invalid_argument("rabi: T must be >= 0");
}

// With r = |Omega|, U = [[cos rt, -i Omega sin(rt)/r], [-i conj(Omega) sin(rt)/r, cos rt]].
ComplexMatrix rabi_unitary(const RabiSpec& spec, double t) {
  spec.validate();
  if (t < 0.0) throw std::invalid_argument("rabi: t must be >= 0");
  const double r = std::abs(spec.omega);
  const double c = std::cos(r * t);
  const double s = std::sin(r * t);
  ComplexMatrix U(2, 2);
  U << c, -I * spec.omega * (s / r), -I * std::conj(spec.omega) * (s / r), c;
  return U;
}

std::pair<ComplexMatrix, ComplexMatrix> rabi_sensitivities(const RabiSpec& spec, double t) {
  spec.validate();
  const double r = std::abs(spec.omega);
  const double c = std::cos(r * t);
  const double s = std::sin(r * t);
  const double th1 = spec.omega.real();
  const double th2 = spec.omega.imag();
  // f(r) = sin(rt)/r and its r-derivative; dr/dtheta_k = theta_k / r.
  const double f = s / r;
  const double df = (t * c * r - s) / (r * r);
  const cd om = spec.omega;
  const cd omb = std::conj(om);

  ComplexMatrix d1(2, 2), d2(2, 2);
  const double dc1 = -s * t * th1 / r;
  const double dc2 = -s * t * th2 / r;
  d1 << dc1, -I * (f + om * df * th1 / r), -I * (f + omb * df * th1 / r), dc1;
  d2 << dc2, -I * (I * f + om * df * th2 / r), -I * (-I * f + omb * df * th2 / r), dc2;
  return {d1, d2};
}

double rabi_infidelity(const RabiSpec& spec, const ComplexMatrix& target) {
  const cd z = trace_inner(target, rabi_unitary(spec, spec.T));
  return 1.0 - std::norm(z) / 4.0;
}

Vector rabi_infidelity_gradient(const RabiSpec& spec, const ComplexMatrix& target) {
  if (target.rows() != 2 || target.cols() != 2)
    throw std::invalid_argument("rabi: target must be 2x2");
  const cd z = trace_inner(target, rabi_unitary(spec, spec.T));
  const auto [d1, d2] = rabi_sensitivities(spec, spec.T);
  // d(1 - |z|^2/4) = -Re(conj(z) dz) / 2
  Vector g(2);
  g[0] = -0.5 * (std::conj(z) * trace_inner(target, d1)).real();
  g[1] = -0.5 * (std::conj(z) * trace_inner(target, d2)).real();
  return g;
}

ControlProblem make_rabi_problem(double T) {
  SystemSpec sys;
  sys.subsystems.push_back({"qubit", 2, 0, 0.0, 0.0});
  sys.frame = Frame::rotating;
  ControlProblem problem;
  problem.drift = build_drift(sys);
  auto ops = build_control_operators(sys, 0);
  problem.channel_ops = {ops.symmetric, ops.antisymmetric};
  problem.controls.add(std::make_shared<ConstantPulse>());
  problem.controls.add(std::make_shared<ConstantPulse>());
  problem.initial = complex_to_real(ComplexMatrix(ComplexMatrix::Identity(2, 2)));
  problem.T = T;
  return problem;
}

Vector finite_difference_gradient(const ScalarFunction& J, const Vector& theta, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite differences: h must be > 0");
  Vector g(theta.size());
  Vector x = theta;
  for (Index k = 0; k < theta.size(); ++k) {
    x[k] = theta[k] + h;
    const double plus = J(x);
    x[k] = theta[k] - h;
    const double minus = J(x);
    x[k] = theta[k];
    g[k] = (plus - minus) / (2.0 * h);
  }
  return g;
}

std::vector<double> default_fd_steps() { return {1e-6, 1e-5, 1e-7, 1e-4, 1e-8}; }

FiniteDifferenceMatch best_finite_difference(const ScalarFunction& J, const Vector& theta,
                                             const Vector& reference,
                                             const std::vector<double>& steps, double stop_below) {
  if (steps.empty()) throw std::invalid_argument("finite differences: empty step list");
  const double scale = std::max(reference.norm(), 1e-300);
  FiniteDifferenceMatch best;
  best.relative_error = std::numeric_limits<double>::infinity();
  for (double h : steps) {
    Vector g = finite_difference_gradient(J, theta, h);
    const double err = (g - reference).norm() / scale;
    if (err < best.relative_error) best = {std::move(g), h, err};
    if (best.relative_error < stop_below) break;
  }
  return best;
}

std::vector<ConvergenceTable> convergence_study(const std::vector<int>& orders,
                                                const std::vector<int>& steps,
                                                const ErrorFunction& error, int workers) {
  if (steps.empty()) throw std::invalid_argument("convergence study: no step counts");
  for (std::size_t i = 1; i < steps.size(); ++i)
    if (steps[i] <= steps[i - 1])
      throw std::invalid_argument("convergence study: step counts must increase strictly");
  const long n_steps = static_cast<long>(steps.size());
  std::vector<double> errors(orders.size() * steps.size());
  parallel_for(workers, static_cast<long>(errors.size()),
               [&](long k) { errors[k] = error(orders[k / n_steps], steps[k % n_steps]); });
  std::vector<ConvergenceTable> tables;
  for (std::size_t o = 0; o < orders.size(); ++o) {
    ConvergenceTable t{orders[o], {}};
    for (std::size_t i = 0; i < steps.size(); ++i) {
      ConvergenceRow row{steps[i], errors[o * steps.size() + i], std::nullopt};
      if (i > 0)
        row.rate = std::log(t.rows.back().error / row.error) /
                   std::log(static_cast<double>(steps[i]) / steps[i - 1]);
      t.rows.push_back(row);
    }
    tables.push_back(std::move(t));
  }
  return tables;
}

void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceTable>& tables) {
  out << "Steps";
  for (const auto& t : tables) out << ",Err_" << t.order << ",Cvg_" << t.order;
  out << '\n';
  if (tables.empty()) return;
  out << std::setprecision(6);
  for (std::size_t i = 0; i < tables.front().rows.size(); ++i) {
    out << tables.front().rows[i].steps;
    for (const auto& t : tables) {
      out << ',' << std::scientific << t.rows[i].error << std::defaultfloat << ',';
      if (t.rows[i].rate)
        out << std::fixed << std::setprecision(2) << *t.rows[i].rate << std::defaultfloat
            << std::setprecision(6);
    }
    out << '\n';
  }
}

double relative_frobenius_error(const RealStateMatrix& U, const RealStateMatrix& reference) {
  if (U.data().rows() != reference.data().rows() || U.data().cols() != reference.data().cols())
    throw std::invalid_argument("relative error: dimension mismatch");
  return (U.data() - reference.data()).norm() / reference.data().norm();
}

double rabi_state_error(const RabiSpec& spec, int order, int steps) {
  const ControlProblem problem = make_rabi_problem(spec.T);
  const auto theta = rabi_theta(spec);
  const ForwardResult fwd =
      forward_evolve(problem, theta, HermiteScheme::of_order(order), TimeGrid(spec.T, steps));
  const RealStateMatrix exact = complex_to_real(rabi_unitary(spec, spec.T));
  return relative_frobenius_error(fwd.history.final_state(), exact);
}

double rabi_gradient_error(const RabiSpec& spec, const ComplexMatrix& target, int order,
                           int steps) {
  const ControlProblem problem = make_rabi_problem(spec.T);
  const auto theta = rabi_theta(spec);
  const GateObjective objective(GateTarget::from_gate(target, problem.initial), {});
  const GradientReport rep = compute_gradient(problem, theta, HermiteScheme::of_order(order),
                                              TimeGrid(spec.T, steps), objective);
  const Vector exact = rabi_infidelity_gradient(spec, target);
  return (rep.grad - exact).norm() / exact.norm();
}

RealStateMatrix fine_grid_reference(const ControlProblem& problem, std::span<const double> theta,
                                    int finest_steps, const IntegratorOptions& options) {
  // Highest order the pulses allow, capped at 12: order 2q needs q - 1 pulse derivatives.
  int order = 12;
  if (problem.controls.n_pulses() > 0)
    order = std::min(order, 2 * (problem.controls.max_derivative_order() + 1));
  const ForwardResult fwd = forward_evolve(problem, theta, HermiteScheme::of_order(order),
                                           TimeGrid(problem.T, 4 * finest_steps), options);
  return fwd.history.final_state();
}

namespace {

/// Least-squares fit log(value) = a + b log(steps).
std::pair<double, double> fit_log_log(const std::vector<double>& logn,
                                      const std::vector<double>& logv) {
  const double m = static_cast<double>(logn.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < logn.size(); ++i) {
    sx += logn[i];
    sy += logv[i];
    sxx += logn[i] * logn[i];
    sxy += logn[i] * logv[i];
  }
  const double b = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return {(sy - b * sx) / m, b};
}

}  // namespace

std::optional<double> recommend_steps(const std::vector<int>& steps,
                                      const std::vector<double>& errors, double target_error,
                                      double asymptotic_floor) {
  if (steps.size() != errors.size() || steps.empty())
    throw std::invalid_argument("recommend steps: mismatched samples");
  if (!(target_error > 0.0)) throw std::invalid_argument("recommend steps: target must be > 0");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (errors[i] <= target_error) {
      if (i == 0) return static_cast<double>(steps[0]);
      // First crossing below the target: errors[i-1] > target >= errors[i].
      const double x0 = std::log(steps[i - 1]), x1 = std::log(steps[i]);
      const double y0 = std::log(errors[i - 1]), y1 = std::log(errors[i]);
      const double frac = (std::log(target_error) - y0) / (y1 - y0);
      return std::exp(x0 + frac * (x1 - x0));
    }
  }
  // Fit the finest usable samples only; coarse ones are often pre-asymptotic.
  constexpr std::size_t kFitSamples = 3;
  std::vector<double> logn, loge;
  for (std::size_t i = steps.size(); i-- > 0 && logn.size() < kFitSamples;)
    if (errors[i] > asymptotic_floor && errors[i] < 1.0) {
      logn.push_back(std::log(steps[i]));
      loge.push_back(std::log(errors[i]));
    }
  if (logn.size() < 2) return std::nullopt;
  const auto [a, b] = fit_log_log(logn, loge);
  if (!(b < 0.0)) return std::nullopt;
  return std::max(std::exp((std::log(target_error) - a) / b), static_cast<double>(steps.back()));
}

double interpolate_log_log(const std::vector<int>& steps, const std::vector<double>& values,
                           double at_steps) {
  if (steps.size() != values.size() || steps.empty())
    throw std::invalid_argument("interpolate: mismatched samples");
  if (steps.size() == 1) return values[0];
  std::vector<double> logn(steps.size()), logv(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    logn[i] = std::log(steps[i]);
    logv[i] = std::log(values[i]);
  }
  const double x = std::log(at_steps);
  std::size_t hi = 1;
  while (hi + 1 < steps.size() && logn[hi] < x) ++hi;
  const std::size_t lo = hi - 1;
  // Inside the sampled range interpolate, outside extrapolate from the end segment.
  const double frac = (x - logn[lo]) / (logn[hi] - logn[lo]);
  return std::exp(logv[lo] + frac * (logv[hi] - logv[lo]));
}

double unitarity_l2(const StateHistory& history, const TimeGrid& grid) {
  const double e = static_cast<double>(history.n_columns());
  double sum = 0.0;
  for (int n = 0; n <= grid.steps(); ++n) {
    double sq = 0.0;
    for (Index c = 0; c < history.n_columns(); ++c) sq += history.snapshot(c, n).squaredNorm();
    const double dev = std::sqrt(sq / e) - 1.0;
    sum += trapezoid_weight(n, grid.steps()) * dev * dev;
  }
  return std::sqrt(grid.dt() * sum);
}

std::vector<StepsizeSample> stepsize_study(const ControlProblem& problem,
                                           const StateObjective& objective,
                                           const std::vector<Vector>& samples,
                                           const std::vector<int>& orders,
                                           const std::vector<int>& steps,
                                           const GradientOptions& options,
                                           std::optional<int> reference_steps) {
  if (samples.empty()) throw std::invalid_argument("stepsize study: no control samples");
  if (steps.empty()) throw std::invalid_argument("stepsize study: no step counts");
  const int finest = *std::max_element(steps.begin(), steps.end());
  const int ref_steps = reference_steps.value_or(4 * finest) / 4;
  std::vector<RealStateMatrix> refs;
  for (const Vector& theta : samples)
    refs.push_back(fine_grid_reference(problem, as_span(theta), ref_steps, options.integrator));

  std::vector<StepsizeSample> rows;
  for (int order : orders) {
    const HermiteScheme scheme = HermiteScheme::of_order(order);
    for (int n : steps) {
      const TimeGrid grid(problem.T, n);
      std::vector<double> errs, secs;
      for (std::size_t s = 0; s < samples.size(); ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        const GradientReport rep =
            compute_gradient(problem, as_span(samples[s]), scheme, grid, objective, options);
        secs.push_back(
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        errs.push_back(relative_frobenius_error(rep.final_state, refs[s]));
      }
      auto mean_std = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - m) * (x - m);
        return std::pair{m, std::sqrt(var / static_cast<double>(v.size()))};
      };
      const auto [me, se] = mean_std(errs);
      const auto [mt, st] = mean_std(secs);
      rows.push_back({order, n, me, se, mt, st});
    }
  }
  return rows;
}

void write_stepsize_csv(std::ostream& out, const std::vector<StepsizeSample>& rows) {
  out << "order,steps,mean_error,std_error,mean_seconds,std_seconds\n";
  out << std::setprecision(10);
  for (const auto& r : rows)
    out << r.order << ',' << r.steps << ',' << r.mean_error << ',' << r.std_error << ','
        << r.mean_seconds << ',' << r.std_seconds << '\n';
}

}  // namespace hermite
