#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hermite/integrator.hpp"
#include "hermite/objectives.hpp"

namespace hermite {

/// Scratch for the transposed recursion; one vector per recursion level.
struct TransposeWorkspace {
  std::vector<Vector> precomputed;  ///< (A^{(k)})^T lambda / k!
  std::vector<Vector> grouped;      ///< lambda-side vectors fed to each derivative level
  std::vector<Vector> levels;

  void resize(Index dim2, int q);
};

/// Sets out = R^T lambda (Side::R) or out = -L^T lambda (Side::L).
/// Uses 2^q - 1 operator applications: q to precompute (A^{(k)})^T lambda, then the
/// recursion D_j^T / j! = (1/j) sum_{i<j} (D_i^T / i!) (A^{(j-1-i)})^T / (j-1-i)!.
void apply_RL_transpose(const HermiteScheme& scheme, const OperatorDerivatives& derivs, double dt,
                        ConstVectorRef lambda, Side side, VectorRef out, TransposeWorkspace& ws,
                        std::uint64_t& matvecs);

/// Lagrange multipliers lambda_n, n = 1..N_T, per column (index 0 unused and zero).
struct AdjointHistory {
  std::vector<Matrix> columns;
  PhaseStats stats;

  auto lambda(Index column, int n) const { return columns[column].col(n); }
};

AdjointHistory adjoint_evolve(const ControlProblem& problem, std::span<const double> theta,
                              const HermiteScheme& scheme, const TimeGrid& grid,
                              const StateHistory& history, const StateObjective& objective,
                              const IntegratorOptions& options = {});

enum class AccumulationMethod { efficient, naive };

struct GradientReport {
  Vector grad;
  ObjectiveValue value;
  RealStateMatrix final_state;
  SolveStats stats;
  AccumulationMethod method = AccumulationMethod::efficient;
};

/// -sum_n <dL_{n+1}/dtheta w_{n+1} + dR_n/dtheta w_n, lambda_{n+1}> by forward-mode
/// differentiation of the derivative recursion, one parameter at a time.
Vector accumulate_gradient_naive(const ControlProblem& problem, std::span<const double> theta,
                                 const HermiteScheme& scheme, const TimeGrid& grid,
                                 const StateHistory& history, const AdjointHistory& adjoint,
                                 PhaseStats& stats);

/// Same sum with operator work independent of the parameter count. The state-side
/// products A_c y^{(i)} at each node are shared by the two steps touching that node;
/// the multiplier side is a reverse sweep through the derivative recursion.
Vector accumulate_gradient_efficient(const ControlProblem& problem, std::span<const double> theta,
                                     const HermiteScheme& scheme, const TimeGrid& grid,
                                     const StateHistory& history, const AdjointHistory& adjoint,
                                     PhaseStats& stats);

struct GradientOptions {
  IntegratorOptions integrator;
  AccumulationMethod method = AccumulationMethod::efficient;
};

/// Forward pass, terminal condition, adjoint pass and accumulation, plus explicit
/// parameter terms of the objective.
GradientReport compute_gradient(const ControlProblem& problem, std::span<const double> theta,
                                const HermiteScheme& scheme, const TimeGrid& grid,
                                const StateObjective& objective,
                                const GradientOptions& options = {});

/// Objective value only (forward pass).
ObjectiveValue evaluate_objective(const ControlProblem& problem, std::span<const double> theta,
                                  const HermiteScheme& scheme, const TimeGrid& grid,
                                  const StateObjective& objective,
                                  const IntegratorOptions& options = {});

}  // namespace hermite
