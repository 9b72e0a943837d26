#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "hermite/state.hpp"

namespace hermite {

/// A control pulse linear in its parameters, emitting one or more real channels.
/// Each channel multiplies its own Hamiltonian term.
class ControlPulse {
 public:
  virtual ~ControlPulse() = default;

  virtual int n_params() const = 0;
  virtual int n_channels() const = 0;
  /// Highest time derivative the pulse supports; continuous up to this order.
  virtual int max_derivative_order() const = 0;
  /// Pulses defined on [0, duration]; infinite for time-independent pulses.
  virtual double duration() const = 0;

  /// grad(ch * (m + 1) + i, k) = d/dtheta_k of the i-th time derivative of channel ch.
  /// Independent of theta since pulses are linear.
  virtual void eval_param_gradient(double t, int max_order, Matrix& grad) const = 0;

  /// values(ch, i) = i-th time derivative of channel ch.
  virtual void eval(double t, int max_order, std::span<const double> theta, Matrix& values) const;

 protected:
  void check_request(double t, int max_order) const;
};

/// c(t) = theta_0: one channel, one parameter, defined for all t.
class ConstantPulse final : public ControlPulse {
 public:
  int n_params() const override { return 1; }
  int n_channels() const override { return 1; }
  int max_derivative_order() const override { return 1 << 20; }
  double duration() const override;
  void eval_param_gradient(double t, int max_order, Matrix& grad) const override;
  void eval(double t, int max_order, std::span<const double> theta, Matrix& values) const override;
};

/// Uniform clamped B-spline basis on [0, T].
class BsplineBasis {
 public:
  BsplineBasis(int degree, int n_basis, double T);

  int degree() const { return degree_; }
  int size() const { return n_basis_; }
  double duration() const { return T_; }
  const std::vector<double>& knots() const { return knots_; }

  /// Index of the first basis function that may be nonzero at t; degree + 1 are active.
  int first_active(double t) const;
  /// Fills ders(k, r) with the r-th derivative of basis function first + k, where
  /// k = 0..degree and r = 0..max_order. Returns first.
  int eval(double t, int max_order, Matrix& ders) const;

 private:
  int degree_;
  int n_basis_;
  double T_;
  std::vector<double> knots_;
};

/// Real B-spline envelope without carrier: one channel, n_basis parameters.
class BsplinePulse final : public ControlPulse {
 public:
  BsplinePulse(int degree, int n_basis, double T) : basis_(degree, n_basis, T) {}

  const BsplineBasis& basis() const { return basis_; }
  int n_params() const override { return basis_.size(); }
  int n_channels() const override { return 1; }
  int max_derivative_order() const override { return basis_.degree() - 1; }
  double duration() const override { return basis_.duration(); }
  void eval_param_gradient(double t, int max_order, Matrix& grad) const override;
  void eval(double t, int max_order, std::span<const double> theta, Matrix& values) const override;

 private:
  BsplineBasis basis_;
};

/// B-spline envelopes modulated by carrier waves.
///
/// Parameters are ordered [carrier][quadrature alpha, beta][spline]. With
/// a_k(t), b_k(t) the alpha and beta envelopes of carrier k:
///   p(t) = sum_k a_k cos(W_k t) - b_k sin(W_k t)
///   q(t) = sum_k a_k sin(W_k t) + b_k cos(W_k t)
/// A complex pulse emits channels (p, q); a real pulse emits p only.
class BsplineCarrierPulse final : public ControlPulse {
 public:
  BsplineCarrierPulse(int degree, int n_basis, double T, std::vector<double> carrier_freqs,
                      bool complex_channels);

  const BsplineBasis& basis() const { return basis_; }
  const std::vector<double>& carrier_freqs() const { return carriers_; }
  int n_params() const override { return 2 * static_cast<int>(carriers_.size()) * basis_.size(); }
  int n_channels() const override { return complex_ ? 2 : 1; }
  int max_derivative_order() const override { return basis_.degree() - 1; }
  double duration() const override { return basis_.duration(); }
  void eval_param_gradient(double t, int max_order, Matrix& grad) const override;

 private:
  BsplineBasis basis_;
  std::vector<double> carriers_;
  bool complex_;
};

/// Independent pulses with disjoint parameter blocks and channel blocks.
class ControlEnsemble {
 public:
  void add(std::shared_ptr<const ControlPulse> pulse);

  int n_pulses() const { return static_cast<int>(pulses_.size()); }
  int n_params() const { return n_params_; }
  int n_channels() const { return n_channels_; }
  const ControlPulse& pulse(int j) const { return *pulses_[j]; }
  int param_offset(int j) const { return param_offsets_[j]; }
  int channel_offset(int j) const { return channel_offsets_[j]; }
  /// Lowest max_derivative_order over all pulses.
  int max_derivative_order() const;

  /// N_channels x (m + 1) matrix of time derivatives.
  Matrix eval_derivatives(double t, int max_order, std::span<const double> theta) const;
  /// Per-pulse blocks; block j has (channels_j * (m + 1)) rows and n_j columns.
  std::vector<Matrix> eval_param_gradient(double t, int max_order) const;

 private:
  std::vector<std::shared_ptr<const ControlPulse>> pulses_;
  std::vector<int> param_offsets_;
  std::vector<int> channel_offsets_;
  int n_params_ = 0;
  int n_channels_ = 0;
};

/// Time derivatives of A(t) = A_d + sum_ch c_ch(t) A_ch as scalar combinations.
/// Scaled coefficients c^{(k)}/k! are stored; nothing is ever summed into a matrix.
class OperatorDerivatives {
 public:
  OperatorDerivatives() = default;
  OperatorDerivatives(const StructuredOperator* drift, std::span<const StructuredOperator> channels,
                      Matrix raw_coefficients);

  int max_order() const { return static_cast<int>(scaled_.cols()) - 1; }
  Index dim_complex() const { return drift_->dim_complex(); }
  int n_channels() const { return static_cast<int>(channels_.size()); }
  const StructuredOperator& drift() const { return *drift_; }
  const StructuredOperator& channel(int ch) const { return channels_[ch]; }
  /// c_ch^{(k)} / k!
  double scaled(int ch, int k) const { return scaled_(ch, k); }
  const Matrix& scaled_coefficients() const { return scaled_; }

  /// out += alpha * A^{(k)} x / k!
  void apply_scaled_add(int k, double alpha, ConstVectorRef x, VectorRef out) const;
  /// out += alpha * (A^{(k)})^T x / k!
  void apply_scaled_transpose_add(int k, double alpha, ConstVectorRef x, VectorRef out) const;
  /// out = A^{(k)} x
  void apply_derivative(int k, ConstVectorRef x, VectorRef out) const;

 private:
  const StructuredOperator* drift_ = nullptr;
  std::span<const StructuredOperator> channels_;
  Matrix scaled_;
};

OperatorDerivatives assemble_A_derivatives(const StructuredOperator& drift,
                                           std::span<const StructuredOperator> channel_ops,
                                           const ControlEnsemble& ens, double t, int max_order,
                                           std::span<const double> theta);

}  // namespace hermite
