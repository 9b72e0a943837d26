#include "hermite/integrator.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "hermite/parallel.hpp"

namespace hermite {

void PhaseStats::merge(const PhaseStats& other) {
  matvecs += other.matvecs;
  explicit_matvecs += other.explicit_matvecs;
  explicit_products += other.explicit_products;
  krylov_iterations += other.krylov_iterations;
  solves += other.solves;
  rounding_floor_solves += other.rounding_floor_solves;
  wall_seconds += other.wall_seconds;
}

void SolveStats::merge(const SolveStats& other) {
  forward.merge(other.forward);
  adjoint.merge(other.adjoint);
  accumulation.merge(other.accumulation);
}

void ControlProblem::validate() const {
  const Index n = drift.dim_complex();
  if (n == 0) throw std::invalid_argument("problem: empty drift operator");
  if (static_cast<int>(channel_ops.size()) != controls.n_channels())
    throw std::invalid_argument("problem: " + std::to_string(controls.n_channels()) +
                                " control signals for " + std::to_string(channel_ops.size()) +
                                " control operators");
  for (const auto& op : channel_ops)
    if (op.dim_complex() != n) throw std::invalid_argument("problem: control operator dimension");
  if (initial.dim_complex() != n)
    throw std::invalid_argument("problem: initial states have the wrong dimension");
  if (!(T > 0.0)) throw std::invalid_argument("problem: duration must be positive");
  for (int j = 0; j < controls.n_pulses(); ++j) {
    const double d = controls.pulse(j).duration();
    if (d < T * (1.0 - 1e-12))
      throw std::invalid_argument("problem: pulse " + std::to_string(j) +
                                  " is shorter than the time horizon");
  }
}

void scaled_derivatives(const OperatorDerivatives& derivs, ConstVectorRef w, int count,
                        std::vector<Vector>& scaled, std::uint64_t& matvecs) {
  if (count - 2 > derivs.max_order())
    throw std::invalid_argument("scaled derivatives: A(t) derivatives available to order " +
                                std::to_string(derivs.max_order()) + ", need " +
                                std::to_string(count - 2));
  if (static_cast<int>(scaled.size()) < count) scaled.resize(count);
  scaled[0] = w;
  for (int j = 1; j < count; ++j) {
    scaled[j].setZero(w.size());
    const double inv_j = 1.0 / j;
    for (int i = 0; i < j; ++i) {
      derivs.apply_scaled_add(j - 1 - i, inv_j, scaled[i], scaled[j]);
      ++matvecs;
    }
  }
}

void apply_RL(const HermiteScheme& scheme, const OperatorDerivatives& derivs, double dt,
              ConstVectorRef w, Side side, VectorRef out, std::vector<Vector>& scaled,
              std::uint64_t& matvecs) {
  const int q = scheme.q();
  scaled_derivatives(derivs, w, q + 1, scaled, matvecs);
  const auto& coefs = side == Side::R ? scheme.coeffs_R() : scheme.coeffs_L();
  out.setZero();
  double dtj = 1.0;
  for (int j = 1; j <= q; ++j) {
    dtj *= dt;
    out += (coefs[j] * dtj) * scaled[j];
  }
}

DriftPreconditioner DriftPreconditioner::build(const StructuredOperator& drift,
                                               const HermiteScheme& scheme, double dt) {
  if (!drift.is_real_diagonal() || drift.K().nonZeros() == 0) return identity();
  const Index n = drift.dim_complex();
  const Vector d = Matrix(drift.K()).diagonal();
  const auto& coefs = scheme.coeffs_L();
  DriftPreconditioner pc;
  pc.a_.resize(n);
  pc.b_.resize(n);
  for (Index i = 0; i < n; ++i) {
    // (dt A_d)^j on (u_i, v_i) is (dt d_i)^j J^j with J^2 = -I.
    const double z = dt * d[i];
    double a = 0.0;
    double b = 0.0;
    double term = 1.0;
    for (int j = 0; j <= scheme.q(); ++j) {
      const double val = coefs[j] * term;
      switch (j % 4) {
        case 0: a += val; break;
        case 1: b += val; break;
        case 2: a -= val; break;
        default: b -= val; break;
      }
      term *= z / (j + 1);
    }
    pc.a_[i] = a;
    pc.b_[i] = b;
  }
  return pc;
}

void DriftPreconditioner::apply(ConstVectorRef r, VectorRef out) const {
  if (is_identity()) {
    out = r;
    return;
  }
  const Index n = a_.size();
  for (Index i = 0; i < n; ++i) {
    const double a = a_[i], b = b_[i];
    const double den = a * a + b * b;
    const double ru = r[i], rv = r[n + i];
    out[i] = (a * ru - b * rv) / den;
    out[n + i] = (b * ru + a * rv) / den;
  }
}

void DriftPreconditioner::apply_transpose(ConstVectorRef r, VectorRef out) const {
  if (is_identity()) {
    out = r;
    return;
  }
  const Index n = a_.size();
  for (Index i = 0; i < n; ++i) {
    const double a = a_[i], b = b_[i];
    const double den = a * a + b * b;
    const double ru = r[i], rv = r[n + i];
    out[i] = (a * ru + b * rv) / den;
    out[n + i] = (-b * ru + a * rv) / den;
  }
}

void DriftPreconditioner::apply_unpreconditioned(ConstVectorRef x, VectorRef out) const {
  if (is_identity()) {
    out = x;
    return;
  }
  const Index n = a_.size();
  for (Index i = 0; i < n; ++i) {
    const double a = a_[i], b = b_[i];
    const double xu = x[i], xv = x[n + i];
    out[i] = a * xu + b * xv;
    out[n + i] = -b * xu + a * xv;
  }
}

void StepWorkspace::resize(Index dim2, int q) {
  scaled.assign(q + 1, Vector::Zero(dim2));
  scaled_aux.assign(q + 1, Vector::Zero(dim2));
  rhs.setZero(dim2);
  tmp.setZero(dim2);
}

KrylovResult solve_timestep(const HermiteScheme& scheme, const OperatorDerivatives& derivs_next,
                            double dt, const DriftPreconditioner& precond, ConstVectorRef rhs,
                            VectorRef x, const KrylovOptions& opts, StepWorkspace& ws,
                            PhaseStats& stats) {
  auto op = [&](ConstVectorRef in, VectorRef out) {
    apply_RL(scheme, derivs_next, dt, in, Side::L, out, ws.scaled_aux, stats.matvecs);
    out += in;
  };
  auto prec = [&](ConstVectorRef in, VectorRef out) { precond.apply(in, out); };
  const KrylovResult res = gmres(op, prec, rhs, x, opts, ws.krylov);
  stats.krylov_iterations += res.iterations;
  stats.solves += 1;
  if (res.at_rounding_floor) stats.rounding_floor_solves += 1;
  return res;
}

RealStateMatrix StateHistory::at(int n) const {
  Matrix out(dim2_, n_columns());
  for (Index c = 0; c < n_columns(); ++c) out.col(c) = columns_[c].col(n);
  return RealStateMatrix(std::move(out));
}

StateHistory::StateHistory(Index dim2, int steps, Index n_columns)
    : dim2_(dim2), steps_(steps), columns_(n_columns, Matrix::Zero(dim2, steps + 1)) {}

void check_history_size(const ControlProblem& problem, const TimeGrid& grid,
                        const IntegratorOptions& options) {
  const double bytes = 2.0 * static_cast<double>(problem.dim_complex()) * (grid.steps() + 1.0) *
                       static_cast<double>(problem.n_columns()) * sizeof(double);
  if (bytes <= static_cast<double>(options.max_history_bytes)) return;
  std::ostringstream msg;
  msg << "state history needs " << bytes / (1 << 20) << " MiB, above the configured cap of "
      << options.max_history_bytes / (1 << 20)
      << " MiB; reduce the step count (a higher order reaches the same accuracy with fewer"
         " steps) or raise max_history_bytes";
  throw HistoryTooLarge(msg.str());
}

std::vector<OperatorDerivatives> sample_derivatives(const ControlProblem& problem,
                                                    std::span<const double> theta,
                                                    const HermiteScheme& scheme,
                                                    const TimeGrid& grid) {
  const int m = scheme.q() - 1;
  if (problem.controls.n_pulses() > 0 && problem.controls.max_derivative_order() < m)
    throw std::invalid_argument("order " + std::to_string(scheme.order()) +
                                " needs pulse derivatives up to order " + std::to_string(m) +
                                " but the pulses support only " +
                                std::to_string(problem.controls.max_derivative_order()) +
                                "; raise the B-spline degree or lower the order");
  if (static_cast<int>(theta.size()) != problem.n_params())
    throw std::invalid_argument("expected " + std::to_string(problem.n_params()) +
                                " control parameters, got " + std::to_string(theta.size()));
  std::vector<OperatorDerivatives> nodes;
  nodes.reserve(grid.steps() + 1);
  for (int n = 0; n <= grid.steps(); ++n)
    nodes.push_back(problem.derivatives(grid.time(n), m, theta));
  return nodes;
}

std::vector<std::string> smoothness_warnings(const ControlProblem& problem,
                                             const HermiteScheme& scheme) {
  std::vector<std::string> out;
  if (problem.controls.n_pulses() == 0) return out;
  const int smooth = problem.controls.max_derivative_order();
  if (smooth < 2 * scheme.p() - 2) {
    std::ostringstream msg;
    msg << "pulses are continuous only up to derivative " << smooth << "; order " << scheme.order()
        << " needs B-spline degree >= " << 2 * scheme.p() - 1 << " for its full convergence rate";
    out.push_back(msg.str());
  }
  return out;
}

ForwardResult forward_evolve(const ControlProblem& problem, std::span<const double> theta,
                             const HermiteScheme& scheme, const TimeGrid& grid,
                             const IntegratorOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  check_history_size(problem, grid, options);
  const auto nodes = sample_derivatives(problem, theta, scheme, grid);
  ForwardResult result = forward_evolve_sampled(problem, nodes, scheme, grid, options);
  result.stats.forward.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

ForwardResult forward_evolve_sampled(const ControlProblem& problem,
                                     const std::vector<OperatorDerivatives>& nodes,
                                     const HermiteScheme& scheme, const TimeGrid& grid,
                                     const IntegratorOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  check_history_size(problem, grid, options);
  const Index dim2 = 2 * problem.dim_complex();
  const Index ncol = problem.n_columns();
  if (static_cast<int>(nodes.size()) != grid.steps() + 1)
    throw std::invalid_argument("forward: node samples do not match the time grid");
  const double dt = grid.dt();
  const DriftPreconditioner precond = options.precondition
                                          ? DriftPreconditioner::build(problem.drift, scheme, dt)
                                          : DriftPreconditioner::identity();

  ForwardResult result{StateHistory(dim2, grid.steps(), ncol), {}};
  std::vector<PhaseStats> per_column(ncol);
  parallel_for(options.workers, ncol, [&](long col) {
    StepWorkspace ws;
    ws.resize(dim2, scheme.q());
    PhaseStats& st = per_column[col];
    Matrix& hist = result.history.column(col);
    hist.col(0) = problem.initial.column(col);
    for (int n = 0; n < grid.steps(); ++n) {
      const std::uint64_t before = st.matvecs;
      apply_RL(scheme, nodes[n], dt, hist.col(n), Side::R, ws.tmp, ws.scaled, st.matvecs);
      st.explicit_matvecs += st.matvecs - before;
      st.explicit_products += 1;
      ws.rhs = hist.col(n) + ws.tmp;
      // Taylor predictor from the cached derivatives at t_n.
      auto x = hist.col(n + 1);
      x = hist.col(n);
      double dtj = 1.0;
      for (int j = 1; j <= scheme.q(); ++j) {
        dtj *= dt;
        x += dtj * ws.scaled[j];
      }
      try {
        solve_timestep(scheme, nodes[n + 1], dt, precond, ws.rhs, x, options.krylov, ws, st);
      } catch (const SolverError& e) {
        throw PropagationError("forward step " + std::to_string(n + 1) + ", column " +
                                   std::to_string(col) + ": " + e.what(),
                               n + 1, col, e.residual());
      }
    }
  });
  for (const auto& st : per_column) result.stats.forward.merge(st);
  result.stats.forward.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace hermite
