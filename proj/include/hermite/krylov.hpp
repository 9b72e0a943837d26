#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hermite/state.hpp"

namespace hermite {

struct KrylovOptions {
  double abs_tol = 1e-15;
  int restart = 20;
  int max_iterations = 200;
};

struct KrylovResult {
  int iterations = 0;
  double residual = 0.0;
  /// True when the residual stalled at the rounding floor above abs_tol.
  bool at_rounding_floor = false;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual, int iterations)
      : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
  double residual() const { return residual_; }
  int iterations() const { return iterations_; }

 private:
  double residual_;
  int iterations_;
};

/// Scratch space reused across solves of the same dimension.
struct KrylovWorkspace {
  std::vector<Vector> basis;
  Matrix hessenberg;
  Vector cs, sn, g, y;
  Vector r, z, w;

  void resize(Index n, int restart) {
    if (r.size() == n && static_cast<int>(basis.size()) == restart + 1) return;
    basis.assign(restart + 1, Vector(n));
    hessenberg.resize(restart + 1, restart);
    cs.resize(restart);
    sn.resize(restart);
    g.resize(restart + 1);
    y.resize(restart);
    r.resize(n);
    z.resize(n);
    w.resize(n);
  }
};

/// Restarted GMRES with left preconditioning for M x = rhs.
///
/// Convergence is judged on the true residual ||rhs - M x||_2 <= abs_tol. When that
/// is below what double precision can resolve, a residual that stops decreasing at
/// roughly 100 eps (||rhs|| + ||x|| + ||M x - x||) is accepted and flagged.
/// op(x, out) sets out = M x; prec(r, out) sets out = P r.
template <class Op, class Prec>
KrylovResult gmres(const Op& op, const Prec& prec, ConstVectorRef rhs, VectorRef x,
                   const KrylovOptions& opts, KrylovWorkspace& ws) {
  const Index n = rhs.size();
  const int m = opts.restart;
  ws.resize(n, m);
  constexpr double eps = std::numeric_limits<double>::epsilon();

  KrylovResult result;
  double previous = std::numeric_limits<double>::infinity();
  for (;;) {
    op(x, ws.w);
    const double mx_minus_x = (ws.w - x).norm();
    ws.r = rhs - ws.w;
    const double rnorm = ws.r.norm();
    result.residual = rnorm;
    if (rnorm <= opts.abs_tol) return result;
    const double floor = 100.0 * eps * (rhs.norm() + x.norm() + mx_minus_x);
    if (rnorm <= floor && rnorm > 0.5 * previous) {
      result.at_rounding_floor = true;
      return result;
    }
    if (result.iterations >= opts.max_iterations)
      throw SolverError("GMRES did not converge: residual " + std::to_string(rnorm) + " after " +
                            std::to_string(result.iterations) + " iterations",
                        rnorm, result.iterations);
    previous = rnorm;

    prec(ws.r, ws.z);
    const double beta = ws.z.norm();
    if (beta == 0.0) return result;
    // Stop the cycle once the preconditioned residual matches abs_tol in the true norm.
    const double inner_tol = 0.5 * opts.abs_tol * beta / rnorm;
    ws.basis[0] = ws.z / beta;
    ws.g.setZero();
    ws.g[0] = beta;
    int k = 0;
    for (; k < m && result.iterations < opts.max_iterations; ++k) {
      op(ws.basis[k], ws.w);
      prec(ws.w, ws.z);
      ++result.iterations;
      for (int i = 0; i <= k; ++i) {
        const double h = ws.basis[i].dot(ws.z);
        ws.hessenberg(i, k) = h;
        ws.z -= h * ws.basis[i];
      }
      const double hnext = ws.z.norm();
      ws.hessenberg(k + 1, k) = hnext;
      for (int i = 0; i < k; ++i) {
        const double a = ws.hessenberg(i, k);
        const double b = ws.hessenberg(i + 1, k);
        ws.hessenberg(i, k) = ws.cs[i] * a + ws.sn[i] * b;
        ws.hessenberg(i + 1, k) = -ws.sn[i] * a + ws.cs[i] * b;
      }
      const double a = ws.hessenberg(k, k);
      const double denom = std::hypot(a, hnext);
      ws.cs[k] = denom == 0.0 ? 1.0 : a / denom;
      ws.sn[k] = denom == 0.0 ? 0.0 : hnext / denom;
      ws.hessenberg(k, k) = denom;
      ws.hessenberg(k + 1, k) = 0.0;
      ws.g[k + 1] = -ws.sn[k] * ws.g[k];
      ws.g[k] = ws.cs[k] * ws.g[k];
      const bool breakdown = hnext <= eps * beta;
      if (!breakdown) ws.basis[k + 1] = ws.z / hnext;
      if (std::abs(ws.g[k + 1]) <= inner_tol || breakdown) {
        ++k;
        break;
      }
    }
    for (int i = k - 1; i >= 0; --i) {
      double s = ws.g[i];
      for (int j = i + 1; j < k; ++j) s -= ws.hessenberg(i, j) * ws.y[j];
      ws.y[i] = ws.hessenberg(i, i) == 0.0 ? 0.0 : s / ws.hessenberg(i, i);
    }
    for (int i = 0; i < k; ++i) x += ws.y[i] * ws.basis[i];
  }
}

}  // namespace hermite
