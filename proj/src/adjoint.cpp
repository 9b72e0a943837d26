#include "hermite/adjoint.hpp"

#include <chrono>
#include <stdexcept>
#include <string>

#include "hermite/parallel.hpp"

namespace hermite {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// out += scale * D_i^T x / i!, recursing on
// D_i^T / i! = (1/i) sum_{k<i} (D_k^T / k!) (A^{(i-1-k)})^T / (i-1-k)!.
// Costs 2^i - 1 operator applications.
void add_transposed_derivative(const OperatorDerivatives& derivs, ConstVectorRef x, int i,
                               double scale, VectorRef out, TransposeWorkspace& ws, int depth,
                               std::uint64_t& matvecs) {
  if (i == 0) {
    out += scale * x;
    return;
  }
  Vector& tmp = ws.levels[depth];
  for (int k = 0; k < i; ++k) {
    tmp.setZero();
    derivs.apply_scaled_transpose_add(i - 1 - k, 1.0, x, tmp);
    ++matvecs;
    add_transposed_derivative(derivs, tmp, k, scale / i, out, ws, depth + 1, matvecs);
  }
}

// Scaled-derivative coefficients of L (Side::L) or R (Side::R): op w = sum_j coef_j y_j.
std::vector<double> side_coefficients(const HermiteScheme& scheme, Side side, double dt) {
  const int q = scheme.q();
  std::vector<double> c(q + 1, 0.0);
  double dtj = 1.0;
  for (int j = 1; j <= q; ++j) {
    dtj *= dt;
    c[j] = side == Side::R ? scheme.coeffs_R()[j] * dtj : -scheme.coeffs_L()[j] * dtj;
  }
  return c;
}

struct AdjointColumnWorkspace {
  TransposeWorkspace rhs_ws;
  TransposeWorkspace op_ws;
  KrylovWorkspace krylov;
  Vector rhs, tmp, g;

  AdjointColumnWorkspace(Index dim2, int q) : rhs(dim2), tmp(dim2), g(dim2) {
    rhs_ws.resize(dim2, q);
    op_ws.resize(dim2, q);
  }
};

// Fills lam (2N x (N_T + 1)) for one column; lam.col(0) stays zero.
void adjoint_column(Index col, const std::vector<OperatorDerivatives>& nodes,
                    const HermiteScheme& scheme, const TimeGrid& grid, const StateHistory& history,
                    const StateObjective& objective, const Matrix& terminal,
                    const DriftPreconditioner& precond, const KrylovOptions& kopts, Matrix& lam,
                    PhaseStats& st) {
  const Index dim2 = history.dim2();
  const int steps = grid.steps();
  const double dt = grid.dt();
  AdjointColumnWorkspace ws(dim2, scheme.q());
  lam.setZero(dim2, steps + 1);

  auto solve = [&](int n, VectorRef x) {
    auto op = [&](ConstVectorRef in, VectorRef out) {
      apply_RL_transpose(scheme, nodes[n], dt, in, Side::L, out, ws.op_ws, st.matvecs);
      out += in;
    };
    auto prec = [&](ConstVectorRef in, VectorRef out) { precond.apply_transpose(in, out); };
    try {
      const KrylovResult res = gmres(op, prec, ws.rhs, x, kopts, ws.krylov);
      st.krylov_iterations += res.iterations;
      st.solves += 1;
      if (res.at_rounding_floor) st.rounding_floor_solves += 1;
    } catch (const SolverError& e) {
      throw PropagationError(
          "adjoint step " + std::to_string(n) + ", column " + std::to_string(col) + ": " + e.what(),
          n, col, e.residual());
    }
  };

  ws.rhs = -terminal.col(col);
  lam.col(steps) = ws.rhs;
  solve(steps, lam.col(steps));
  for (int n = steps - 1; n >= 1; --n) {
    const std::uint64_t before = st.matvecs;
    apply_RL_transpose(scheme, nodes[n], dt, lam.col(n + 1), Side::R, ws.tmp, ws.rhs_ws,
                       st.matvecs);
    st.explicit_matvecs += st.matvecs - before;
    st.explicit_products += 1;
    ws.rhs = lam.col(n + 1) + ws.tmp;
    if (objective.has_interior_terms()) {
      objective.interior_derivative(n, history.snapshot(col, n), grid, ws.g);
      ws.rhs -= ws.g;
    }
    // Predictor: one more application of the explicit half step.
    lam.col(n) = ws.rhs + ws.tmp;
    solve(n, lam.col(n));
  }
}

// State-side products at one node: y_i = w^{(i)}/i! and u[ch][i] = A_ch y_i, i < q.
struct NodeProducts {
  std::vector<Vector> y;
  std::vector<std::vector<Vector>> u;
  Vector drift_term;

  NodeProducts(Index dim2, int q, int n_channels)
      : y(q, Vector::Zero(dim2)),
        u(n_channels, std::vector<Vector>(q, Vector::Zero(dim2))),
        drift_term(dim2) {}

  void compute(const OperatorDerivatives& d, ConstVectorRef w, int q, std::uint64_t& matvecs) {
    const int nc = d.n_channels();
    y[0] = w;
    for (int i = 0; i < q; ++i) {
      for (int ch = 0; ch < nc; ++ch) {
        d.channel(ch).apply(y[i], u[ch][i]);
        ++matvecs;
      }
      if (i + 1 == q) break;
      // y_{i+1} = (1/(i+1)) sum_{l<=i} A^{(i-l)}/(i-l)! y_l, assembled from the products.
      d.drift().apply(y[i], drift_term);
      ++matvecs;
      Vector& next = y[i + 1];
      next = drift_term;
      for (int l = 0; l <= i; ++l)
        for (int ch = 0; ch < nc; ++ch) {
          const double c = d.scaled(ch, i - l);
          if (c != 0.0) next += c * u[ch][l];
        }
      next /= static_cast<double>(i + 1);
    }
  }
};

// Adds -<d(op)/d(scaled coefficient) w, lambda> into G(ch, k) for the L or R operator at
// one node, where op w = sum_j coef_j y_j. The multiplier side is a reverse sweep:
// ybar_j collects coef_j lambda plus every later level it feeds.
void accumulate_side(const OperatorDerivatives& d, const std::vector<double>& coef,
                     ConstVectorRef lambda, const NodeProducts& prod, int q, Matrix& G,
                     std::vector<Vector>& ybar, std::uint64_t& matvecs) {
  for (int j = 1; j <= q; ++j) ybar[j] = coef[j] * lambda;
  for (int jp = q; jp >= 2; --jp) {
    const double inv = 1.0 / jp;
    for (int i = 1; i < jp; ++i) {
      d.apply_scaled_transpose_add(jp - 1 - i, inv, ybar[jp], ybar[i]);
      ++matvecs;
    }
  }
  const int nc = d.n_channels();
  for (int j = 1; j <= q; ++j) {
    const double inv = 1.0 / j;
    for (int i = 0; i < j; ++i) {
      const int k = j - 1 - i;
      for (int ch = 0; ch < nc; ++ch) G(ch, k) -= inv * prod.u[ch][i].dot(ybar[j]);
    }
  }
}

// Per-node tables G[m](ch, k): the gradient is sum_m sum_{ch,k} G[m](ch,k) d(c^{(k)}/k!)/dtheta.
void efficient_column(Index col, const std::vector<OperatorDerivatives>& nodes,
                      const HermiteScheme& scheme, const TimeGrid& grid,
                      const StateHistory& history, const Matrix& lam, std::vector<Matrix>& G,
                      PhaseStats& st) {
  const int q = scheme.q();
  const int steps = grid.steps();
  const int nc = nodes.front().n_channels();
  const Index dim2 = history.dim2();
  G.assign(steps + 1, Matrix::Zero(nc, q));
  const auto alpha = side_coefficients(scheme, Side::R, grid.dt());
  const auto beta = side_coefficients(scheme, Side::L, grid.dt());
  NodeProducts cur(dim2, q, nc);
  NodeProducts next(dim2, q, nc);
  std::vector<Vector> ybar(q + 1, Vector::Zero(dim2));
  cur.compute(nodes[0], history.snapshot(col, 0), q, st.matvecs);
  for (int n = 0; n < steps; ++n) {
    next.compute(nodes[n + 1], history.snapshot(col, n + 1), q, st.matvecs);
    const auto lambda = lam.col(n + 1);
    accumulate_side(nodes[n], alpha, lambda, cur, q, G[n], ybar, st.matvecs);
    accumulate_side(nodes[n + 1], beta, lambda, next, q, G[n + 1], ybar, st.matvecs);
    std::swap(cur, next);
  }
}

Vector contract_node_tables(const ControlProblem& problem, const HermiteScheme& scheme,
                            const TimeGrid& grid, const std::vector<Matrix>& G) {
  const int q = scheme.q();
  const auto& ens = problem.controls;
  Vector grad = Vector::Zero(ens.n_params());
  std::vector<double> inv_fact(q, 1.0);
  for (int k = 1; k < q; ++k) inv_fact[k] = inv_fact[k - 1] / k;
  for (int m = 0; m <= grid.steps(); ++m) {
    if (G[m].isZero(0.0)) continue;
    const auto blocks = ens.eval_param_gradient(grid.time(m), q - 1);
    for (int j = 0; j < ens.n_pulses(); ++j) {
      const int nparam = ens.pulse(j).n_params();
      auto seg = grad.segment(ens.param_offset(j), nparam);
      for (int chl = 0; chl < ens.pulse(j).n_channels(); ++chl) {
        const int ch = ens.channel_offset(j) + chl;
        for (int k = 0; k < q; ++k) {
          const double g = G[m](ch, k) * inv_fact[k];
          if (g != 0.0) seg += g * blocks[j].row(chl * q + k).transpose();
        }
      }
    }
  }
  return grad;
}

// One parameter's forward-mode derivative of op w = sum_j coef_j y_j at a node, dotted
// with lambda. dcoef(ch, k) = d(c_ch^{(k)}/k!)/dtheta.
double naive_side(const OperatorDerivatives& d, const Matrix& dcoef, const std::vector<int>& chans,
                  const std::vector<double>& coef, const std::vector<Vector>& y,
                  ConstVectorRef lambda, int q, std::vector<Vector>& dy, std::uint64_t& matvecs) {
  double total = 0.0;
  dy[0].setZero();
  for (int j = 1; j <= q; ++j) {
    dy[j].setZero();
    const double inv = 1.0 / j;
    for (int i = 0; i < j; ++i) {
      const int k = j - 1 - i;
      for (int ch : chans) {
        const double c = dcoef(ch, k);
        if (c == 0.0) continue;
        d.channel(ch).apply_add(inv * c, y[i], dy[j]);
        ++matvecs;
      }
      if (i > 0) {
        d.apply_scaled_add(k, inv, dy[i], dy[j]);
        ++matvecs;
      }
    }
    total += coef[j] * dy[j].dot(lambda);
  }
  return total;
}

Vector naive_column(Index col, const ControlProblem& problem,
                    const std::vector<OperatorDerivatives>& nodes, const HermiteScheme& scheme,
                    const TimeGrid& grid, const StateHistory& history, const Matrix& lam,
                    PhaseStats& st) {
  const int q = scheme.q();
  const auto& ens = problem.controls;
  const Index dim2 = history.dim2();
  const auto alpha = side_coefficients(scheme, Side::R, grid.dt());
  const auto beta = side_coefficients(scheme, Side::L, grid.dt());
  Vector grad = Vector::Zero(ens.n_params());
  std::vector<Vector> yn, yn1, dy(q + 1, Vector::Zero(dim2));
  std::vector<double> inv_fact(q, 1.0);
  for (int k = 1; k < q; ++k) inv_fact[k] = inv_fact[k - 1] / k;
  Matrix dcoef_n = Matrix::Zero(ens.n_channels(), q);
  Matrix dcoef_n1 = dcoef_n;

  for (int n = 0; n < grid.steps(); ++n) {
    scaled_derivatives(nodes[n], history.snapshot(col, n), q, yn, st.matvecs);
    scaled_derivatives(nodes[n + 1], history.snapshot(col, n + 1), q, yn1, st.matvecs);
    const auto blocks_n = ens.eval_param_gradient(grid.time(n), q - 1);
    const auto blocks_n1 = ens.eval_param_gradient(grid.time(n + 1), q - 1);
    const auto lambda = lam.col(n + 1);
    for (int j = 0; j < ens.n_pulses(); ++j) {
      const auto& pulse = ens.pulse(j);
      std::vector<int> chans;
      for (int chl = 0; chl < pulse.n_channels(); ++chl)
        chans.push_back(ens.channel_offset(j) + chl);
      for (int kl = 0; kl < pulse.n_params(); ++kl) {
        for (int chl = 0; chl < pulse.n_channels(); ++chl)
          for (int k = 0; k < q; ++k) {
            dcoef_n(chans[chl], k) = blocks_n[j](chl * q + k, kl) * inv_fact[k];
            dcoef_n1(chans[chl], k) = blocks_n1[j](chl * q + k, kl) * inv_fact[k];
          }
        const double r = naive_side(nodes[n], dcoef_n, chans, alpha, yn, lambda, q, dy, st.matvecs);
        const double l =
            naive_side(nodes[n + 1], dcoef_n1, chans, beta, yn1, lambda, q, dy, st.matvecs);
        grad[ens.param_offset(j) + kl] -= r + l;
      }
    }
  }
  return grad;
}

void check_adjoint_inputs(const ControlProblem& problem, const TimeGrid& grid,
                          const StateHistory& history) {
  problem.validate();
  if (history.steps() != grid.steps() || history.n_columns() != problem.n_columns() ||
      history.dim2() != 2 * problem.dim_complex())
    throw std::invalid_argument("adjoint: state history does not match the problem and grid");
}

}  // namespace

void TransposeWorkspace::resize(Index dim2, int q) {
  precomputed.assign(q, Vector::Zero(dim2));
  grouped.assign(q, Vector::Zero(dim2));
  levels.assign(q + 1, Vector::Zero(dim2));
}

void apply_RL_transpose(const HermiteScheme& scheme, const OperatorDerivatives& derivs, double dt,
                        ConstVectorRef lambda, Side side, VectorRef out, TransposeWorkspace& ws,
                        std::uint64_t& matvecs) {
  const int q = scheme.q();
  if (q - 1 > derivs.max_order())
    throw std::invalid_argument("transposed apply: A(t) derivatives available to order " +
                                std::to_string(derivs.max_order()) + ", need " +
                                std::to_string(q - 1));
  if (static_cast<int>(ws.precomputed.size()) != q || ws.levels.front().size() != lambda.size())
    ws.resize(lambda.size(), q);
  const auto& coefs = side == Side::R ? scheme.coeffs_R() : scheme.coeffs_L();
  for (int k = 0; k < q; ++k) {
    ws.precomputed[k].setZero();
    derivs.apply_scaled_transpose_add(k, 1.0, lambda, ws.precomputed[k]);
    ++matvecs;
  }
  // sum_j a_j D_j^T lambda / j! = sum_i (D_i^T / i!) z_i with
  // z_i = sum_{j>i} (a_j / j) (A^{(j-1-i)})^T lambda / (j-1-i)!.
  std::vector<double> a(q + 1, 0.0);
  double dtj = 1.0;
  for (int j = 1; j <= q; ++j) {
    dtj *= dt;
    a[j] = coefs[j] * dtj;
  }
  out.setZero();
  for (int i = 0; i < q; ++i) {
    Vector& z = ws.grouped[i];
    z.setZero();
    for (int j = i + 1; j <= q; ++j) z += (a[j] / j) * ws.precomputed[j - 1 - i];
    add_transposed_derivative(derivs, z, i, 1.0, out, ws, 0, matvecs);
  }
}

AdjointHistory adjoint_evolve(const ControlProblem& problem, std::span<const double> theta,
                              const HermiteScheme& scheme, const TimeGrid& grid,
                              const StateHistory& history, const StateObjective& objective,
                              const IntegratorOptions& options) {
  const auto t0 = Clock::now();
  check_adjoint_inputs(problem, grid, history);
  const auto nodes = sample_derivatives(problem, theta, scheme, grid);
  const Matrix terminal = objective.terminal_derivative(history, grid);
  const DriftPreconditioner precond =
      options.precondition ? DriftPreconditioner::build(problem.drift, scheme, grid.dt())
                           : DriftPreconditioner::identity();
  AdjointHistory out;
  out.columns.resize(history.n_columns());
  std::vector<PhaseStats> per_column(history.n_columns());
  parallel_for(options.workers, history.n_columns(), [&](long col) {
    adjoint_column(col, nodes, scheme, grid, history, objective, terminal, precond, options.krylov,
                   out.columns[col], per_column[col]);
  });
  for (const auto& st : per_column) out.stats.merge(st);
  out.stats.wall_seconds = seconds_since(t0);
  return out;
}

Vector accumulate_gradient_naive(const ControlProblem& problem, std::span<const double> theta,
                                 const HermiteScheme& scheme, const TimeGrid& grid,
                                 const StateHistory& history, const AdjointHistory& adjoint,
                                 PhaseStats& stats) {
  const auto t0 = Clock::now();
  check_adjoint_inputs(problem, grid, history);
  const auto nodes = sample_derivatives(problem, theta, scheme, grid);
  Vector grad = Vector::Zero(problem.n_params());
  for (Index col = 0; col < history.n_columns(); ++col)
    grad += naive_column(col, problem, nodes, scheme, grid, history, adjoint.columns[col], stats);
  stats.wall_seconds += seconds_since(t0);
  return grad;
}

Vector accumulate_gradient_efficient(const ControlProblem& problem, std::span<const double> theta,
                                     const HermiteScheme& scheme, const TimeGrid& grid,
                                     const StateHistory& history, const AdjointHistory& adjoint,
                                     PhaseStats& stats) {
  const auto t0 = Clock::now();
  if (scheme.p() != scheme.q())
    throw std::invalid_argument("efficient accumulation requires p = q");
  check_adjoint_inputs(problem, grid, history);
  const auto nodes = sample_derivatives(problem, theta, scheme, grid);
  std::vector<Matrix> total(grid.steps() + 1,
                            Matrix::Zero(problem.controls.n_channels(), scheme.q()));
  std::vector<Matrix> G;
  for (Index col = 0; col < history.n_columns(); ++col) {
    efficient_column(col, nodes, scheme, grid, history, adjoint.columns[col], G, stats);
    for (int m = 0; m <= grid.steps(); ++m) total[m] += G[m];
  }
  Vector grad = contract_node_tables(problem, scheme, grid, total);
  stats.wall_seconds += seconds_since(t0);
  return grad;
}

GradientReport compute_gradient(const ControlProblem& problem, std::span<const double> theta,
                                const HermiteScheme& scheme, const TimeGrid& grid,
                                const StateObjective& objective, const GradientOptions& options) {
  auto t0 = Clock::now();
  problem.validate();
  check_history_size(problem, grid, options.integrator);
  const auto nodes = sample_derivatives(problem, theta, scheme, grid);
  GradientReport report;
  report.method = options.method;
  ForwardResult fwd = forward_evolve_sampled(problem, nodes, scheme, grid, options.integrator);
  report.stats = fwd.stats;
  report.stats.forward.wall_seconds = seconds_since(t0);
  const StateHistory& history = fwd.history;

  // Barrier: the terminal condition couples all columns.
  report.value = objective.evaluate(history, grid, theta);
  report.final_state = history.final_state();
  const Matrix terminal = objective.terminal_derivative(history, grid);
  const DriftPreconditioner precond =
      options.integrator.precondition ? DriftPreconditioner::build(problem.drift, scheme, grid.dt())
                                      : DriftPreconditioner::identity();

  const Index ncol = history.n_columns();
  std::vector<PhaseStats> adj_stats(ncol), acc_stats(ncol);
  std::vector<std::vector<Matrix>> tables(ncol);
  std::vector<Vector> naive_grads(ncol);
  parallel_for(options.integrator.workers, ncol, [&](long col) {
    Matrix lam;
    auto ta = Clock::now();
    adjoint_column(col, nodes, scheme, grid, history, objective, terminal, precond,
                   options.integrator.krylov, lam, adj_stats[col]);
    adj_stats[col].wall_seconds = seconds_since(ta);
    ta = Clock::now();
    if (options.method == AccumulationMethod::efficient)
      efficient_column(col, nodes, scheme, grid, history, lam, tables[col], acc_stats[col]);
    else
      naive_grads[col] =
          naive_column(col, problem, nodes, scheme, grid, history, lam, acc_stats[col]);
    acc_stats[col].wall_seconds = seconds_since(ta);
  });
  for (Index c = 0; c < ncol; ++c) {
    report.stats.adjoint.merge(adj_stats[c]);
    report.stats.accumulation.merge(acc_stats[c]);
  }

  t0 = Clock::now();
  if (options.method == AccumulationMethod::efficient) {
    std::vector<Matrix> total(grid.steps() + 1,
                              Matrix::Zero(problem.controls.n_channels(), scheme.q()));
    for (Index c = 0; c < ncol; ++c)
      for (int m = 0; m <= grid.steps(); ++m) total[m] += tables[c][m];
    report.grad = contract_node_tables(problem, scheme, grid, total);
  } else {
    report.grad = Vector::Zero(problem.n_params());
    for (Index c = 0; c < ncol; ++c) report.grad += naive_grads[c];
  }
  report.grad += objective.explicit_gradient(theta);
  report.stats.accumulation.wall_seconds += seconds_since(t0);
  return report;
}

ObjectiveValue evaluate_objective(const ControlProblem& problem, std::span<const double> theta,
                                  const HermiteScheme& scheme, const TimeGrid& grid,
                                  const StateObjective& objective,
                                  const IntegratorOptions& options) {
  const ForwardResult fwd = forward_evolve(problem, theta, scheme, grid, options);
  return objective.evaluate(fwd.history, grid, theta);
}

}  // namespace hermite
