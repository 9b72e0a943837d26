#pragma once

#include <complex>
#include <optional>
#include <span>

#include "hermite/integrator.hpp"
#include "hermite/model.hpp"
#include "hermite/scheme.hpp"
#include "hermite/state.hpp"

namespace hermite {

/// Target columns U_target = G U_0 in real split form.
struct GateTarget {
  RealStateMatrix target;

  /// G is E x E acting on the essential columns of U_0 (N x E).
  static GateTarget from_gate(const ComplexMatrix& gate, const RealStateMatrix& initial);
  Index essential_dim() const { return target.essential_dim(); }
};

enum class InfidelityKind { trace, generalized };

struct ObjectiveConfig {
  InfidelityKind kind = InfidelityKind::trace;
  std::optional<GuardWeights> guard;
  double guard_coefficient = 1.0;
  double regularization = 0.0;  ///< gamma on ||theta||^2

  void validate() const;
};

struct ObjectiveValue {
  double total = 0.0;
  double infidelity = 0.0;
  double guard = 0.0;
  double regularization = 0.0;
};

/// <U, V>_F = tr(U^dagger V) computed from the real splits.
std::complex<double> frobenius_overlap(const RealStateMatrix& U, const RealStateMatrix& V);
double trace_fidelity(const RealStateMatrix& U, const GateTarget& target);
double trace_infidelity(const RealStateMatrix& U, const GateTarget& target);
double generalized_infidelity(const RealStateMatrix& U, const GateTarget& target);
/// d(infidelity)/dU in real split form, 2N x E.
Matrix infidelity_state_derivative(InfidelityKind kind, const RealStateMatrix& U,
                                   const GateTarget& target);

/// Trapezoid weight of node n: 1/2 at both ends, 1 inside.
inline double trapezoid_weight(int n, int steps) { return (n == 0 || n == steps) ? 0.5 : 1.0; }
double guard_penalty_discrete(const StateHistory& history, const GuardWeights& W,
                              const TimeGrid& grid);

/// Discrete objective J = sum_n j_n(w_n) + explicit(theta), as seen by the adjoint.
class StateObjective {
 public:
  virtual ~StateObjective() = default;
  virtual ObjectiveValue evaluate(const StateHistory& history, const TimeGrid& grid,
                                  std::span<const double> theta) const = 0;
  /// dj_{N_T}/dw for all columns at once (may couple columns), 2N x E.
  virtual Matrix terminal_derivative(const StateHistory& history, const TimeGrid& grid) const = 0;
  /// Whether j_n is nonzero for 0 < n < N_T.
  virtual bool has_interior_terms() const = 0;
  /// out = dj_n/dw_n for one column, 0 < n < N_T.
  virtual void interior_derivative(int n, ConstVectorRef w_n, const TimeGrid& grid,
                                   VectorRef out) const = 0;
  virtual Vector explicit_gradient(std::span<const double> theta) const = 0;
};

/// Gate infidelity plus optional trapezoid guard penalty and Tikhonov term.
class GateObjective final : public StateObjective {
 public:
  GateObjective(GateTarget target, ObjectiveConfig config);

  const GateTarget& target() const { return target_; }
  const ObjectiveConfig& config() const { return config_; }

  ObjectiveValue evaluate(const StateHistory& history, const TimeGrid& grid,
                          std::span<const double> theta) const override;
  Matrix terminal_derivative(const StateHistory& history, const TimeGrid& grid) const override;
  bool has_interior_terms() const override;
  void interior_derivative(int n, ConstVectorRef w_n, const TimeGrid& grid,
                           VectorRef out) const override;
  Vector explicit_gradient(std::span<const double> theta) const override;

 private:
  double guard_scale(int n, const TimeGrid& grid) const;

  GateTarget target_;
  ObjectiveConfig config_;
};

/// Per-column (dj_n/dw_n) for n in 0..N_T, 2N x E.
Matrix objective_state_derivative(int n, const StateHistory& history, const StateObjective& obj,
                                  const TimeGrid& grid);

}  // namespace hermite
