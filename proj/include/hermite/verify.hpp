#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <vector>

#include "hermite/adjoint.hpp"
#include "hermite/objectives.hpp"
#include "hermite/problem.hpp"

namespace hermite {

/// Two-level system driven by H_c = Omega a + conj(Omega) a^dagger, Omega = theta_1 + i theta_2.
struct RabiSpec {
  std::complex<double> omega;  ///< rad/ns
  double T = 0.0;              ///< ns

  void validate() const;
  double period() const { return std::numbers::pi / std::abs(omega); }
};

/// Closed-form propagator U(t) of the Rabi problem.
ComplexMatrix rabi_unitary(const RabiSpec& spec, double t);
/// dU(t)/dtheta_1 and dU(t)/dtheta_2.
std::pair<ComplexMatrix, ComplexMatrix> rabi_sensitivities(const RabiSpec& spec, double t);
/// Trace infidelity of U(T) against the target and its gradient in (theta_1, theta_2).
double rabi_infidelity(const RabiSpec& spec, const ComplexMatrix& target);
Vector rabi_infidelity_gradient(const RabiSpec& spec, const ComplexMatrix& target);

/// Rabi problem with two constant pulses; theta = (Re Omega, Im Omega), identity initial basis.
ControlProblem make_rabi_problem(double T);
inline std::vector<double> rabi_theta(const RabiSpec& spec) {
  return {spec.omega.real(), spec.omega.imag()};
}

using ScalarFunction = std::function<double(const Vector&)>;

/// Central differences (J(theta + h e_k) - J(theta - h e_k)) / 2h.
Vector finite_difference_gradient(const ScalarFunction& J, const Vector& theta, double h);

struct FiniteDifferenceMatch {
  Vector gradient;
  double step = 0.0;
  double relative_error = 0.0;  ///< ||fd - reference|| / ||reference||
};
/// Sweeps the given steps and keeps the one closest to `reference`. The sweep stops
/// early once the relative error falls below stop_below.
FiniteDifferenceMatch best_finite_difference(const ScalarFunction& J, const Vector& theta,
                                             const Vector& reference,
                                             const std::vector<double>& steps,
                                             double stop_below = 0.0);
std::vector<double> default_fd_steps();

struct ConvergenceRow {
  int steps = 0;
  double error = 0.0;
  /// log(err_prev / err) / log(steps / steps_prev); absent on the first row.
  std::optional<double> rate;
};

struct ConvergenceTable {
  int order = 0;
  std::vector<ConvergenceRow> rows;
};

/// error(order, steps) for one grid point.
using ErrorFunction = std::function<double(int order, int steps)>;

/// Errors and observed rates for every (order, steps) pair; steps must increase strictly.
/// Grid points are evaluated independently on up to `workers` threads.
std::vector<ConvergenceTable> convergence_study(const std::vector<int>& orders,
                                                const std::vector<int>& steps,
                                                const ErrorFunction& error, int workers = 1);

/// Writes "Steps,Err_2,Cvg_2,Err_4,Cvg_4,..." with one row per step count.
void write_convergence_csv(std::ostream& out, const std::vector<ConvergenceTable>& tables);

/// Relative Frobenius error of U(T) against the closed form.
double rabi_state_error(const RabiSpec& spec, int order, int steps);
/// Relative 2-norm of discrete-adjoint minus analytic gradient of the trace infidelity.
double rabi_gradient_error(const RabiSpec& spec, const ComplexMatrix& target, int order, int steps);

/// Final state from a reference run at 4x the finest step count with order 12.
RealStateMatrix fine_grid_reference(const ControlProblem& problem, std::span<const double> theta,
                                    int finest_steps, const IntegratorOptions& options = {});
double relative_frobenius_error(const RealStateMatrix& U, const RealStateMatrix& reference);

/// Timesteps needed for a target error from (steps, error) samples of one order.
/// Bracketed targets interpolate linearly in log(steps) versus log(error); otherwise a
/// least-squares line through the three finest samples with errors in
/// (asymptotic_floor, 1) is used.
/// Returns nullopt when neither applies.
std::optional<double> recommend_steps(const std::vector<int>& steps,
                                      const std::vector<double>& errors, double target_error,
                                      double asymptotic_floor = 1e-13);
/// Value of `values` at a fractional step count, interpolated the same way.
double interpolate_log_log(const std::vector<int>& steps, const std::vector<double>& values,
                           double at_steps);

/// Discrete L2 norm over the grid of (1/sqrt(E)) ||U_n||_F - 1.
double unitarity_l2(const StateHistory& history, const TimeGrid& grid);

struct StepsizeSample {
  int order = 0;
  int steps = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
  double mean_seconds = 0.0;  ///< full gradient: forward, adjoint and accumulation
  double std_seconds = 0.0;
};

/// For each sample vector, order and step count: relative final-time error against a
/// fine-grid reference plus the time of one gradient evaluation. The reference uses
/// order 12 at reference_steps, by default 4x the finest step count.
std::vector<StepsizeSample> stepsize_study(const ControlProblem& problem,
                                           const StateObjective& objective,
                                           const std::vector<Vector>& samples,
                                           const std::vector<int>& orders,
                                           const std::vector<int>& steps,
                                           const GradientOptions& options = {},
                                           std::optional<int> reference_steps = std::nullopt);
void write_stepsize_csv(std::ostream& out, const std::vector<StepsizeSample>& rows);

}  // namespace hermite
