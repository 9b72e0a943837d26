#include "hermite/objectives.hpp"

#include <cmath>
#include <stdexcept>

namespace hermite {

GateTarget GateTarget::from_gate(const ComplexMatrix& gate, const RealStateMatrix& initial) {
  const Index e = initial.essential_dim();
  if (gate.rows() != e || gate.cols() != e)
    throw std::invalid_argument("gate target: gate must be " + std::to_string(e) + "x" +
                                std::to_string(e));
  const ComplexMatrix U0 = real_to_complex(initial);
  // The gate sends initial column k to sum_l G(l, k) column l, i.e. U_0 G.
  return {complex_to_real(ComplexMatrix(U0 * gate))};
}

void ObjectiveConfig::validate() const {
  if (!(guard_coefficient >= 0.0) || !std::isfinite(guard_coefficient))
    throw std::invalid_argument("objective: guard coefficient must be finite and non-negative");
  if (!(regularization >= 0.0) || !std::isfinite(regularization))
    throw std::invalid_argument("objective: regularization must be finite and non-negative");
  if (guard && (guard->diagonal.array() < 0.0).any())
    throw std::invalid_argument("objective: guard weights must be non-negative");
}

std::complex<double> frobenius_overlap(const RealStateMatrix& U, const RealStateMatrix& V) {
  if (U.data().rows() != V.data().rows() || U.data().cols() != V.data().cols())
    throw std::invalid_argument("overlap: dimension mismatch");
  const Index n = U.dim_complex();
  const auto u = U.data().topRows(n);
  const auto v = U.data().bottomRows(n);
  const auto vr = V.data().topRows(n);
  const auto vi = V.data().bottomRows(n);
  const double re = (u.cwiseProduct(vr) + v.cwiseProduct(vi)).sum();
  const double im = (u.cwiseProduct(vi) - v.cwiseProduct(vr)).sum();
  return {re, im};
}

double trace_fidelity(const RealStateMatrix& U, const GateTarget& target) {
  const double e = static_cast<double>(target.essential_dim());
  return std::norm(frobenius_overlap(U, target.target)) / (e * e);
}

double trace_infidelity(const RealStateMatrix& U, const GateTarget& target) {
  return 1.0 - trace_fidelity(U, target);
}

double generalized_infidelity(const RealStateMatrix& U, const GateTarget& target) {
  const double e = static_cast<double>(target.essential_dim());
  return U.data().squaredNorm() / e - trace_fidelity(U, target);
}

Matrix infidelity_state_derivative(InfidelityKind kind, const RealStateMatrix& U,
                                   const GateTarget& target) {
  const Index n = U.dim_complex();
  const double e = static_cast<double>(target.essential_dim());
  const std::complex<double> z = frobenius_overlap(U, target.target);
  const auto vr = target.target.data().topRows(n);
  const auto vi = target.target.data().bottomRows(n);
  Matrix d(2 * n, U.essential_dim());
  // d|z|^2/du = 2 (Re z vr + Im z vi), d|z|^2/dv = 2 (Re z vi - Im z vr)
  d.topRows(n) = (-2.0 / (e * e)) * (z.real() * vr + z.imag() * vi);
  d.bottomRows(n) = (-2.0 / (e * e)) * (z.real() * vi - z.imag() * vr);
  if (kind == InfidelityKind::generalized) d += (2.0 / e) * U.data();
  return d;
}

double guard_penalty_discrete(const StateHistory& history, const GuardWeights& W,
                              const TimeGrid& grid) {
  const Index n = W.diagonal.size();
  if (2 * n != history.dim2()) throw std::invalid_argument("guard penalty: dimension mismatch");
  const Vector w2 = (Vector(2 * n) << W.diagonal, W.diagonal).finished();
  double sum = 0.0;
  for (Index c = 0; c < history.n_columns(); ++c) {
    const Matrix& h = history.column(c);
    const Vector per_node = w2.transpose() * h.cwiseAbs2();
    for (int k = 0; k <= grid.steps(); ++k) sum += trapezoid_weight(k, grid.steps()) * per_node[k];
  }
  return grid.dt() / grid.T() * sum;
}

GateObjective::GateObjective(GateTarget target, ObjectiveConfig config)
    : target_(std::move(target)), config_(std::move(config)) {
  config_.validate();
  if (config_.guard && config_.guard->diagonal.size() != target_.target.dim_complex())
    throw std::invalid_argument("objective: guard weights have the wrong dimension");
}

double GateObjective::guard_scale(int n, const TimeGrid& grid) const {
  return config_.guard_coefficient * trapezoid_weight(n, grid.steps()) * grid.dt() / grid.T();
}

ObjectiveValue GateObjective::evaluate(const StateHistory& history, const TimeGrid& grid,
                                       std::span<const double> theta) const {
  ObjectiveValue v;
  const RealStateMatrix U = history.final_state();
  v.infidelity = config_.kind == InfidelityKind::trace ? trace_infidelity(U, target_)
                                                       : generalized_infidelity(U, target_);
  if (config_.guard && config_.guard_coefficient != 0.0)
    v.guard = config_.guard_coefficient * guard_penalty_discrete(history, *config_.guard, grid);
  if (config_.regularization != 0.0) {
    const Eigen::Map<const Vector> th(theta.data(), static_cast<Index>(theta.size()));
    v.regularization = config_.regularization * th.squaredNorm();
  }
  v.total = v.infidelity + v.guard + v.regularization;
  return v;
}

Matrix GateObjective::terminal_derivative(const StateHistory& history, const TimeGrid& grid) const {
  const RealStateMatrix U = history.final_state();
  Matrix d = infidelity_state_derivative(config_.kind, U, target_);
  if (config_.guard && config_.guard_coefficient != 0.0) {
    const Index n = U.dim_complex();
    const double s = 2.0 * guard_scale(grid.steps(), grid);
    d.topRows(n) += s * (config_.guard->diagonal.asDiagonal() * U.data().topRows(n));
    d.bottomRows(n) += s * (config_.guard->diagonal.asDiagonal() * U.data().bottomRows(n));
  }
  return d;
}

bool GateObjective::has_interior_terms() const {
  return config_.guard && config_.guard_coefficient != 0.0 &&
         (config_.guard->diagonal.array() != 0.0).any();
}

void GateObjective::interior_derivative(int n, ConstVectorRef w_n, const TimeGrid& grid,
                                        VectorRef out) const {
  if (!has_interior_terms()) {
    out.setZero();
    return;
  }
  const Index dim = config_.guard->diagonal.size();
  const double s = 2.0 * guard_scale(n, grid);
  out.head(dim) = s * config_.guard->diagonal.cwiseProduct(w_n.head(dim));
  out.tail(dim) = s * config_.guard->diagonal.cwiseProduct(w_n.tail(dim));
}

Vector GateObjective::explicit_gradient(std::span<const double> theta) const {
  const Eigen::Map<const Vector> th(theta.data(), static_cast<Index>(theta.size()));
  return 2.0 * config_.regularization * th;
}

Matrix objective_state_derivative(int n, const StateHistory& history, const StateObjective& obj,
                                  const TimeGrid& grid) {
  if (n < 0 || n > grid.steps()) throw std::out_of_range("objective derivative: step index");
  if (n == grid.steps()) return obj.terminal_derivative(history, grid);
  Matrix d = Matrix::Zero(history.dim2(), history.n_columns());
  if (!obj.has_interior_terms()) return d;
  for (Index c = 0; c < history.n_columns(); ++c)
    obj.interior_derivative(n, history.snapshot(c, n), grid, d.col(c));
  return d;
}

}  // namespace hermite
