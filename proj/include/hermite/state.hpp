#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <span>

namespace hermite {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Real split w = [Re psi; Im psi] of a complex state with N entries.
class RealState {
 public:
  RealState() = default;
  explicit RealState(Index dim_complex);
  /// Takes ownership of an already split vector; its length must be even.
  explicit RealState(Vector data);

  Index dim_complex() const { return data_.size() / 2; }
  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  auto u() const { return data_.head(dim_complex()); }
  auto v() const { return data_.tail(dim_complex()); }

 private:
  Vector data_;
};

/// E columns of a propagator in real split form, stored as a 2N x E matrix.
class RealStateMatrix {
 public:
  RealStateMatrix() = default;
  RealStateMatrix(Index dim_complex, Index essential_dim);
  explicit RealStateMatrix(Matrix data);

  Index dim_complex() const { return data_.rows() / 2; }
  Index essential_dim() const { return data_.cols(); }
  const Matrix& data() const { return data_; }
  Matrix& data() { return data_; }
  auto column(Index e) const { return data_.col(e); }
  auto column(Index e) { return data_.col(e); }

 private:
  Matrix data_;
};

RealState complex_to_real(const ComplexVector& psi);
ComplexVector real_to_complex(const RealState& w);
RealStateMatrix complex_to_real(const ComplexMatrix& U);
/// Evaluates an expression first; single-column expressions become a RealState.
template <typename Derived>
auto complex_to_real(const Eigen::MatrixBase<Derived>& expr) {
  if constexpr (Derived::ColsAtCompileTime == 1)
    return complex_to_real(ComplexVector(expr));
  else
    return complex_to_real(ComplexMatrix(expr));
}
ComplexMatrix real_to_complex(const RealStateMatrix& W);

/// A Hamiltonian term H = K + iS stored as its real and imaginary sparse parts.
/// Applied as the real block operator A = [[S, K], [-K, S]], i.e. the split of -iH.
class StructuredOperator {
 public:
  StructuredOperator() = default;
  StructuredOperator(SparseMatrix K, SparseMatrix S);
  static StructuredOperator zero(Index dim_complex);
  /// Splits a dense complex Hamiltonian, dropping exact zeros.
  static StructuredOperator from_hamiltonian(const ComplexMatrix& H);

  Index dim_complex() const { return K_.rows(); }
  const SparseMatrix& K() const { return K_; }
  const SparseMatrix& S() const { return S_; }
  bool has_imaginary_part() const { return S_.nonZeros() > 0; }
  bool k_symmetric() const { return k_symmetric_; }
  bool s_antisymmetric() const { return s_antisymmetric_; }
  /// True when both flags hold, so that A^T = -A.
  bool skew() const { return k_symmetric_ && s_antisymmetric_; }
  /// True when K is diagonal and S vanishes.
  bool is_real_diagonal() const;

  /// out = A w
  void apply(ConstVectorRef w, VectorRef out) const;
  /// out += alpha * A w
  void apply_add(double alpha, ConstVectorRef w, VectorRef out) const;
  /// out = A^T w
  void apply_transpose(ConstVectorRef w, VectorRef out) const;
  /// out += alpha * A^T w
  void apply_transpose_add(double alpha, ConstVectorRef w, VectorRef out) const;

  void apply(const RealState& w, RealState& out) const { apply(w.data(), out.data()); }
  void apply_transpose(const RealState& w, RealState& out) const {
    apply_transpose(w.data(), out.data());
  }

  ComplexMatrix hamiltonian() const;

 private:
  void check_dims(Index w_size, Index out_size) const;

  SparseMatrix K_;
  SparseMatrix S_;
  bool k_symmetric_ = true;
  bool s_antisymmetric_ = true;
};

}  // namespace hermite
