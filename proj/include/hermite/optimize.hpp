#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hermite/adjoint.hpp"
#include "hermite/objectives.hpp"

namespace hermite {

struct OptimizeOptions {
  /// Per-parameter bounds; both must have n_params entries with lower <= upper.
  Vector lower;
  Vector upper;
  int max_iterations = 200;
  double max_wall_seconds = std::numeric_limits<double>::infinity();
  /// Stop when the infinity norm of the projected gradient falls to this value.
  double gradient_tolerance = 1e-10;
  /// Stop when an accepted step lowers the objective by less than this relative amount.
  double decrease_tolerance = 1e-14;
  /// Stop once the objective reaches this value.
  double target_objective = 0.0;
  int memory = 10;
  double armijo_c1 = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 40;

  /// Bounds [lo, hi] on every one of n parameters.
  static OptimizeOptions with_uniform_bounds(Index n, double lo, double hi);
  void validate(Index n) const;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double infidelity = 0.0;
  double guard = 0.0;
  double gradient_norm = 0.0;  ///< 2-norm of the projected gradient
  double step_length = 0.0;    ///< 2-norm of the accepted parameter change
  double wall_seconds = 0.0;   ///< since the start of the run
};

enum class StopReason {
  gradient_tolerance,
  decrease_tolerance,
  target_objective,
  max_iterations,
  max_wall_time,
  line_search_failed,
};
std::string to_string(StopReason reason);

struct OptimizeTrace {
  std::vector<IterationRecord> records;
  StopReason stop_reason = StopReason::max_iterations;

  static constexpr const char* csv_header =
      "iteration,objective,infidelity,guard,gradient_norm,step_length,wall_seconds";
  void write_csv(std::ostream& out) const;
};

struct OptimizeResult {
  Vector theta;
  ObjectiveValue value;
  OptimizeTrace trace;
};

/// Objective value and gradient at one parameter vector.
struct Evaluation {
  ObjectiveValue value;
  Vector grad;
};
using Evaluator = std::function<Evaluation(const Vector&)>;

/// Raised when an evaluation fails; carries the iterations completed so far.
class OptimizationAborted : public std::runtime_error {
 public:
  OptimizationAborted(const std::string& what, OptimizeTrace trace, Vector last_theta)
      : std::runtime_error(what), trace_(std::move(trace)), last_theta_(std::move(last_theta)) {}
  const OptimizeTrace& trace() const { return trace_; }
  /// Last accepted iterate.
  const Vector& last_theta() const { return last_theta_; }

 private:
  OptimizeTrace trace_;
  Vector last_theta_;
};

/// Projection of x onto the box [lower, upper].
Vector project_onto_box(const Vector& x, const Vector& lower, const Vector& upper);

/// Projected L-BFGS. Each iteration fixes the variables held at a bound by the
/// gradient, runs the two-loop recursion on the remaining ones, and backtracks along
/// the projected path until the Armijo condition holds. Every iterate lies in the box.
OptimizeResult minimize_in_box(const Evaluator& evaluate, const Vector& theta0,
                               const OptimizeOptions& options);

/// minimize_in_box with values and gradients from the discrete adjoint.
OptimizeResult optimize(const ControlProblem& problem, const Vector& theta0,
                        const StateObjective& objective, const HermiteScheme& scheme,
                        const TimeGrid& grid, const OptimizeOptions& options,
                        const GradientOptions& gradient_options = {});

/// Components drawn uniformly from [-amplitude, amplitude]; reproducible from the seed.
Vector random_initial_controls(Index n_params, double amplitude, std::uint64_t seed);

}  // namespace hermite
