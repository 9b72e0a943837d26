#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hermite/controls.hpp"
#include "hermite/krylov.hpp"
#include "hermite/problem.hpp"
#include "hermite/scheme.hpp"
#include "hermite/state.hpp"

namespace hermite {

enum class Side { L, R };

struct PhaseStats {
  /// All operator applications, including those inside Krylov solves.
  std::uint64_t matvecs = 0;
  /// Operator applications spent on explicit R w or R^T lambda products only.
  std::uint64_t explicit_matvecs = 0;
  /// Number of explicit R w or R^T lambda products.
  std::uint64_t explicit_products = 0;
  std::uint64_t krylov_iterations = 0;
  std::uint64_t solves = 0;
  std::uint64_t rounding_floor_solves = 0;
  double wall_seconds = 0.0;

  void merge(const PhaseStats& other);
  /// Operator applications per explicit product; 0 when none were made.
  double matvecs_per_product() const {
    return explicit_products == 0 ? 0.0 : static_cast<double>(explicit_matvecs) / explicit_products;
  }
};

struct SolveStats {
  PhaseStats forward;
  PhaseStats adjoint;
  PhaseStats accumulation;

  void merge(const SolveStats& other);
};

/// Sets out = R w (Side::R) or out = -L w (Side::L) at the node described by `derivs`.
/// On return scaled[j] = w^{(j)} / j! for j = 0..q. Exactly q(q+1)/2 operator applications.
void apply_RL(const HermiteScheme& scheme, const OperatorDerivatives& derivs, double dt,
              ConstVectorRef w, Side side, VectorRef out, std::vector<Vector>& scaled,
              std::uint64_t& matvecs);

/// Fills scaled[0..count-1] with w^{(j)}/j!; count*(count-1)/2 operator applications.
void scaled_derivatives(const OperatorDerivatives& derivs, ConstVectorRef w, int count,
                        std::vector<Vector>& scaled, std::uint64_t& matvecs);

/// Left preconditioner (I - L~)^{-1}, where L~ is L with A(t) replaced by the drift.
/// For a diagonal real drift, (I - L~) couples only (u_i, v_i) through a 2x2 block
/// a_i I + b_i J with J = [[0, 1], [-1, 0]]; anything else falls back to the identity.
class DriftPreconditioner {
 public:
  DriftPreconditioner() = default;
  static DriftPreconditioner identity() { return {}; }
  static DriftPreconditioner build(const StructuredOperator& drift, const HermiteScheme& scheme,
                                   double dt);

  bool is_identity() const { return a_.size() == 0; }
  /// out = (I - L~)^{-1} r
  void apply(ConstVectorRef r, VectorRef out) const;
  /// out = (I - L~^T)^{-1} r
  void apply_transpose(ConstVectorRef r, VectorRef out) const;
  /// out = (I - L~) x
  void apply_unpreconditioned(ConstVectorRef x, VectorRef out) const;

 private:
  Vector a_;
  Vector b_;
};

/// Per-worker scratch for one column's propagation.
struct StepWorkspace {
  std::vector<Vector> scaled;
  std::vector<Vector> scaled_aux;
  Vector rhs, tmp;
  KrylovWorkspace krylov;

  void resize(Index dim2, int q);
};

/// Solves (I - L_{n+1}) x = rhs; x holds the initial guess on entry.
/// Counts operator applications and Krylov iterations into `stats`.
KrylovResult solve_timestep(const HermiteScheme& scheme, const OperatorDerivatives& derivs_next,
                            double dt, const DriftPreconditioner& precond, ConstVectorRef rhs,
                            VectorRef x, const KrylovOptions& opts, StepWorkspace& ws,
                            PhaseStats& stats);

/// States w_n, n = 0..N_T, for every initial column. Each column is a contiguous
/// 2N x (N_T + 1) block with one snapshot per matrix column.
class StateHistory {
 public:
  StateHistory() = default;
  StateHistory(Index dim2, int steps, Index n_columns);

  int steps() const { return steps_; }
  Index n_columns() const { return static_cast<Index>(columns_.size()); }
  Index dim2() const { return dim2_; }
  auto snapshot(Index column, int n) const { return columns_[column].col(n); }
  auto snapshot(Index column, int n) { return columns_[column].col(n); }
  const Matrix& column(Index c) const { return columns_[c]; }
  Matrix& column(Index c) { return columns_[c]; }
  RealStateMatrix at(int n) const;
  RealStateMatrix final_state() const { return at(steps_); }

 private:
  Index dim2_ = 0;
  int steps_ = 0;
  std::vector<Matrix> columns_;
};

class HistoryTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PropagationError : public std::runtime_error {
 public:
  PropagationError(const std::string& what, int step, Index column, double residual)
      : std::runtime_error(what), step_(step), column_(column), residual_(residual) {}
  int step() const { return step_; }
  Index column() const { return column_; }
  double residual() const { return residual_; }

 private:
  int step_;
  Index column_;
  double residual_;
};

struct IntegratorOptions {
  KrylovOptions krylov;
  int workers = 1;
  bool precondition = true;
  std::size_t max_history_bytes = std::size_t{8} << 30;
};

/// Throws HistoryTooLarge when the full history would exceed options.max_history_bytes.
void check_history_size(const ControlProblem& problem, const TimeGrid& grid,
                        const IntegratorOptions& options);

/// A(t) derivatives at every grid node, shared read-only across columns.
std::vector<OperatorDerivatives> sample_derivatives(const ControlProblem& problem,
                                                    std::span<const double> theta,
                                                    const HermiteScheme& scheme,
                                                    const TimeGrid& grid);

/// Human-readable notes when pulse smoothness limits the achievable order.
std::vector<std::string> smoothness_warnings(const ControlProblem& problem,
                                             const HermiteScheme& scheme);

struct ForwardResult {
  StateHistory history;
  SolveStats stats;
};

ForwardResult forward_evolve(const ControlProblem& problem, std::span<const double> theta,
                             const HermiteScheme& scheme, const TimeGrid& grid,
                             const IntegratorOptions& options = {});

/// forward_evolve with A(t) derivatives already sampled at every node.
ForwardResult forward_evolve_sampled(const ControlProblem& problem,
                                     const std::vector<OperatorDerivatives>& nodes,
                                     const HermiteScheme& scheme, const TimeGrid& grid,
                                     const IntegratorOptions& options);

}  // namespace hermite
