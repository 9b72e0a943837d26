#include "hermite/controls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hermite {

namespace {

// d^r/dt^r of cos(w t) and sin(w t), given c = cos(w t), s = sin(w t).
double cos_derivative(double c, double s, double w_pow, int r) {
  switch (r % 4) {
    case 0: return w_pow * c;
    case 1: return -w_pow * s;
    case 2: return -w_pow * c;
    default: return w_pow * s;
  }
}

double sin_derivative(double c, double s, double w_pow, int r) {
  switch (r % 4) {
    case 0: return w_pow * s;
    case 1: return w_pow * c;
    case 2: return -w_pow * s;
    default: return -w_pow * c;
  }
}

double binomial(int n, int k) {
  double b = 1.0;
  for (int i = 1; i <= k; ++i) b = b * (n - k + i) / i;
  return b;
}

}  // namespace

void ControlPulse::check_request(double t, int max_order) const {
  if (max_order < 0) throw std::invalid_argument("pulse: derivative order must be non-negative");
  if (max_order > max_derivative_order())
    throw std::invalid_argument("pulse: derivative order " + std::to_string(max_order) +
                                " exceeds the pulse smoothness limit " +
                                std::to_string(max_derivative_order()));
  const double T = duration();
  // One ulp of slack absorbs t_n = n T / N_T rounding at the end point.
  const double slack = 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, T);
  if (!(t >= -slack && t <= T + slack))
    throw std::out_of_range("pulse: time " + std::to_string(t) + " outside [0, " +
                            std::to_string(T) + "]");
}

void ControlPulse::eval(double t, int max_order, std::span<const double> theta,
                        Matrix& values) const {
  if (static_cast<int>(theta.size()) != n_params())
    throw std::invalid_argument("pulse: parameter count mismatch");
  Matrix grad;
  eval_param_gradient(t, max_order, grad);
  const Eigen::Map<const Vector> th(theta.data(), n_params());
  const Vector flat = grad * th;
  values.resize(n_channels(), max_order + 1);
  for (int ch = 0; ch < n_channels(); ++ch)
    for (int i = 0; i <= max_order; ++i) values(ch, i) = flat[ch * (max_order + 1) + i];
}

double ConstantPulse::duration() const { return std::numeric_limits<double>::infinity(); }

void ConstantPulse::eval_param_gradient(double t, int max_order, Matrix& grad) const {
  check_request(t, max_order);
  grad = Matrix::Zero(max_order + 1, 1);
  grad(0, 0) = 1.0;
}

void ConstantPulse::eval(double t, int max_order, std::span<const double> theta,
                         Matrix& values) const {
  check_request(t, max_order);
  if (theta.size() != 1) throw std::invalid_argument("pulse: parameter count mismatch");
  values = Matrix::Zero(1, max_order + 1);
  values(0, 0) = theta[0];
}

BsplineBasis::BsplineBasis(int degree, int n_basis, double T)
    : degree_(degree), n_basis_(n_basis), T_(T) {
  if (degree < 0) throw std::invalid_argument("B-spline: degree must be non-negative");
  if (n_basis < degree + 1)
    throw std::invalid_argument("B-spline: need at least degree + 1 basis functions");
  if (!(T > 0.0)) throw std::invalid_argument("B-spline: duration must be positive");
  knots_.assign(n_basis + degree + 1, 0.0);
  const int n_intervals = n_basis - degree;
  for (int i = 1; i < n_intervals; ++i)
    knots_[degree + i] = T * static_cast<double>(i) / n_intervals;
  for (int i = n_basis; i <= n_basis + degree; ++i) knots_[i] = T;
}

int BsplineBasis::first_active(double t) const {
  // Span s satisfies knots[s] <= t < knots[s + 1] with s in [degree, n_basis - 1].
  const int n_intervals = n_basis_ - degree_;
  const double x = std::clamp(t, 0.0, T_);
  int s = degree_ + static_cast<int>(std::floor(x / T_ * n_intervals));
  s = std::clamp(s, degree_, n_basis_ - 1);
  while (s > degree_ && x < knots_[s]) --s;
  while (s < n_basis_ - 1 && x >= knots_[s + 1]) ++s;
  return s - degree_;
}

int BsplineBasis::eval(double t, int max_order, Matrix& ders) const {
  const int p = degree_;
  const int first = first_active(t);
  const int span = first + p;
  const double u = std::clamp(t, 0.0, T_);
  const int n = std::min(max_order, p);

  Matrix ndu(p + 1, p + 1);
  Matrix a(2, p + 1);
  std::vector<double> left(p + 1), right(p + 1);
  ndu(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = u - knots_[span + 1 - j];
    right[j] = knots_[span + j] - u;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu(j, r) = right[r + 1] + left[j - r];
      const double temp = ndu(r, j - 1) / ndu(j, r);
      ndu(r, j) = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu(j, j) = saved;
  }

  ders = Matrix::Zero(p + 1, max_order + 1);
  for (int j = 0; j <= p; ++j) ders(j, 0) = ndu(j, p);
  for (int r = 0; r <= p; ++r) {
    int s1 = 0;
    int s2 = 1;
    a(0, 0) = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        a(s2, 0) = a(s1, 0) / ndu(pk + 1, rk);
        d = a(s2, 0) * ndu(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a(s2, j) = (a(s1, j) - a(s1, j - 1)) / ndu(pk + 1, rk + j);
        d += a(s2, j) * ndu(rk + j, pk);
      }
      if (r <= pk) {
        a(s2, k) = -a(s1, k - 1) / ndu(pk + 1, r);
        d += a(s2, k) * ndu(r, pk);
      }
      ders(r, k) = d;
      std::swap(s1, s2);
    }
  }
  double fac = p;
  for (int k = 1; k <= n; ++k) {
    ders.col(k) *= fac;
    fac *= (p - k);
  }
  return first;
}

void BsplinePulse::eval_param_gradient(double t, int max_order, Matrix& grad) const {
  check_request(t, max_order);
  Matrix ders;
  const int first = basis_.eval(t, max_order, ders);
  grad = Matrix::Zero(max_order + 1, n_params());
  for (int k = 0; k <= basis_.degree(); ++k) grad.col(first + k) = ders.row(k).transpose();
}

void BsplinePulse::eval(double t, int max_order, std::span<const double> theta,
                        Matrix& values) const {
  check_request(t, max_order);
  if (static_cast<int>(theta.size()) != n_params())
    throw std::invalid_argument("pulse: parameter count mismatch");
  Matrix ders;
  const int first = basis_.eval(t, max_order, ders);
  values = Matrix::Zero(1, max_order + 1);
  for (int k = 0; k <= basis_.degree(); ++k) values.row(0) += theta[first + k] * ders.row(k);
}

BsplineCarrierPulse::BsplineCarrierPulse(int degree, int n_basis, double T,
                                         std::vector<double> carrier_freqs, bool complex_channels)
    : basis_(degree, n_basis, T), carriers_(std::move(carrier_freqs)), complex_(complex_channels) {
  if (carriers_.empty()) throw std::invalid_argument("carrier pulse: at least one carrier");
}

void BsplineCarrierPulse::eval_param_gradient(double t, int max_order, Matrix& grad) const {
  check_request(t, max_order);
  Matrix ders;
  const int first = basis_.eval(t, max_order, ders);
  const int nb = basis_.size();
  const int m1 = max_order + 1;
  grad = Matrix::Zero(n_channels() * m1, n_params());

  // Leibniz: (B f)^{(i)} = sum_r binom(i, r) B^{(r)} f^{(i - r)}
  Matrix binom(m1, m1);
  for (int i = 0; i < m1; ++i)
    for (int r = 0; r <= i; ++r) binom(i, r) = binomial(i, r);

  std::vector<double> cos_d(m1), sin_d(m1);
  for (std::size_t c = 0; c < carriers_.size(); ++c) {
    const double w = carriers_[c];
    const double cw = std::cos(w * t);
    const double sw = std::sin(w * t);
    double w_pow = 1.0;
    for (int r = 0; r < m1; ++r) {
      cos_d[r] = cos_derivative(cw, sw, w_pow, r);
      sin_d[r] = sin_derivative(cw, sw, w_pow, r);
      w_pow *= w;
    }
    const int alpha0 = static_cast<int>(2 * c) * nb;
    const int beta0 = alpha0 + nb;
    for (int k = 0; k <= basis_.degree(); ++k) {
      const int f = first + k;
      for (int i = 0; i < m1; ++i) {
        double bc = 0.0;
        double bs = 0.0;
        for (int r = 0; r <= i; ++r) {
          bc += binom(i, r) * ders(k, r) * cos_d[i - r];
          bs += binom(i, r) * ders(k, r) * sin_d[i - r];
        }
        grad(i, alpha0 + f) = bc;
        grad(i, beta0 + f) = -bs;
        if (complex_) {
          grad(m1 + i, alpha0 + f) = bs;
          grad(m1 + i, beta0 + f) = bc;
        }
      }
    }
  }
}

void ControlEnsemble::add(std::shared_ptr<const ControlPulse> pulse) {
  if (!pulse) throw std::invalid_argument("ensemble: null pulse");
  param_offsets_.push_back(n_params_);
  channel_offsets_.push_back(n_channels_);
  n_params_ += pulse->n_params();
  n_channels_ += pulse->n_channels();
  pulses_.push_back(std::move(pulse));
}

int ControlEnsemble::max_derivative_order() const {
  int m = std::numeric_limits<int>::max();
  for (const auto& p : pulses_) m = std::min(m, p->max_derivative_order());
  return m;
}

Matrix ControlEnsemble::eval_derivatives(double t, int max_order,
                                         std::span<const double> theta) const {
  if (static_cast<int>(theta.size()) != n_params_)
    throw std::invalid_argument("ensemble: expected " + std::to_string(n_params_) +
                                " parameters, got " + std::to_string(theta.size()));
  Matrix out(n_channels_, max_order + 1);
  Matrix block;
  for (int j = 0; j < n_pulses(); ++j) {
    const auto& p = *pulses_[j];
    p.eval(t, max_order, theta.subspan(param_offsets_[j], p.n_params()), block);
    out.middleRows(channel_offsets_[j], p.n_channels()) = block;
  }
  return out;
}

std::vector<Matrix> ControlEnsemble::eval_param_gradient(double t, int max_order) const {
  std::vector<Matrix> out(pulses_.size());
  for (int j = 0; j < n_pulses(); ++j) pulses_[j]->eval_param_gradient(t, max_order, out[j]);
  return out;
}

OperatorDerivatives::OperatorDerivatives(const StructuredOperator* drift,
                                         std::span<const StructuredOperator> channels,
                                         Matrix raw_coefficients)
    : drift_(drift), channels_(channels), scaled_(std::move(raw_coefficients)) {
  if (drift_ == nullptr) throw std::invalid_argument("operator derivatives: missing drift");
  if (scaled_.rows() != static_cast<Index>(channels_.size()))
    throw std::invalid_argument("operator derivatives: " + std::to_string(scaled_.rows()) +
                                " control signals for " + std::to_string(channels_.size()) +
                                " control operators");
  for (const auto& op : channels_)
    if (op.dim_complex() != drift_->dim_complex())
      throw std::invalid_argument("operator derivatives: operator dimension mismatch");
  double inv_fact = 1.0;
  for (Index k = 0; k < scaled_.cols(); ++k) {
    if (k > 0) inv_fact /= static_cast<double>(k);
    scaled_.col(k) *= inv_fact;
  }
}

void OperatorDerivatives::apply_scaled_add(int k, double alpha, ConstVectorRef x,
                                           VectorRef out) const {
  if (k == 0) drift_->apply_add(alpha, x, out);
  for (int ch = 0; ch < n_channels(); ++ch) {
    const double c = scaled_(ch, k);
    if (c != 0.0) channels_[ch].apply_add(alpha * c, x, out);
  }
}

void OperatorDerivatives::apply_scaled_transpose_add(int k, double alpha, ConstVectorRef x,
                                                     VectorRef out) const {
  if (k == 0) drift_->apply_transpose_add(alpha, x, out);
  for (int ch = 0; ch < n_channels(); ++ch) {
    const double c = scaled_(ch, k);
    if (c != 0.0) channels_[ch].apply_transpose_add(alpha * c, x, out);
  }
}

void OperatorDerivatives::apply_derivative(int k, ConstVectorRef x, VectorRef out) const {
  double fact = 1.0;
  for (int i = 2; i <= k; ++i) fact *= i;
  out.setZero();
  apply_scaled_add(k, fact, x, out);
}

OperatorDerivatives assemble_A_derivatives(const StructuredOperator& drift,
                                           std::span<const StructuredOperator> channel_ops,
                                           const ControlEnsemble& ens, double t, int max_order,
                                           std::span<const double> theta) {
  if (static_cast<int>(channel_ops.size()) != ens.n_channels())
    throw std::invalid_argument("assemble: " + std::to_string(ens.n_channels()) +
                                " control signals for " + std::to_string(channel_ops.size()) +
                                " control operators");
  return {&drift, channel_ops, ens.eval_derivatives(t, max_order, theta)};
}

}  // namespace hermite
