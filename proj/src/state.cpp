#include "hermite/state.hpp"

#include <stdexcept>
#include <string>

namespace hermite {

RealState::RealState(Index dim_complex) : data_(Vector::Zero(2 * dim_complex)) {
  if (dim_complex <= 0) throw std::invalid_argument("RealState: dimension must be positive");
}

RealState::RealState(Vector data) : data_(std::move(data)) {
  if (data_.size() == 0 || data_.size() % 2 != 0)
    throw std::invalid_argument("RealState: split vector length must be positive and even");
}

RealStateMatrix::RealStateMatrix(Index dim_complex, Index essential_dim)
    : data_(Matrix::Zero(2 * dim_complex, essential_dim)) {
  if (dim_complex <= 0 || essential_dim <= 0 || essential_dim > dim_complex)
    throw std::invalid_argument("RealStateMatrix: need 0 < E <= N");
}

RealStateMatrix::RealStateMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() == 0 || data_.rows() % 2 != 0 || data_.cols() == 0 ||
      data_.cols() > data_.rows() / 2)
    throw std::invalid_argument("RealStateMatrix: need even row count and 0 < E <= N");
}

RealState complex_to_real(const ComplexVector& psi) {
  const Index n = psi.size();
  Vector w(2 * n);
  w.head(n) = psi.real();
  w.tail(n) = psi.imag();
  return RealState(std::move(w));
}

ComplexVector real_to_complex(const RealState& w) {
  const Index n = w.dim_complex();
  ComplexVector psi(n);
  psi.real() = w.data().head(n);
  psi.imag() = w.data().tail(n);
  return psi;
}

RealStateMatrix complex_to_real(const ComplexMatrix& U) {
  const Index n = U.rows();
  Matrix W(2 * n, U.cols());
  W.topRows(n) = U.real();
  W.bottomRows(n) = U.imag();
  return RealStateMatrix(std::move(W));
}

ComplexMatrix real_to_complex(const RealStateMatrix& W) {
  const Index n = W.dim_complex();
  ComplexMatrix U(n, W.essential_dim());
  U.real() = W.data().topRows(n);
  U.imag() = W.data().bottomRows(n);
  return U;
}

namespace {

bool exactly_equal(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const SparseMatrix d = a - b;
  for (Index k = 0; k < d.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(d, k); it; ++it)
      if (it.value() != 0.0) return false;
  return true;
}

}  // namespace

StructuredOperator::StructuredOperator(SparseMatrix K, SparseMatrix S)
    : K_(std::move(K)), S_(std::move(S)) {
  if (K_.rows() != K_.cols() || S_.rows() != S_.cols() || K_.rows() != S_.rows() || K_.rows() == 0)
    throw std::invalid_argument("StructuredOperator: K and S must be square of equal size");
  K_.prune(0.0);
  S_.prune(0.0);
  K_.makeCompressed();
  S_.makeCompressed();
  const SparseMatrix Kt = K_.transpose();
  const SparseMatrix St = S_.transpose();
  k_symmetric_ = exactly_equal(K_, Kt);
  s_antisymmetric_ = exactly_equal(S_, SparseMatrix(-St));
}

StructuredOperator StructuredOperator::zero(Index dim_complex) {
  return {SparseMatrix(dim_complex, dim_complex), SparseMatrix(dim_complex, dim_complex)};
}

StructuredOperator StructuredOperator::from_hamiltonian(const ComplexMatrix& H) {
  const Matrix re = H.real();
  const Matrix im = H.imag();
  return {re.sparseView(0.0, 0.0), im.sparseView(0.0, 0.0)};
}

bool StructuredOperator::is_real_diagonal() const {
  if (has_imaginary_part()) return false;
  for (Index k = 0; k < K_.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(K_, k); it; ++it)
      if (it.row() != it.col()) return false;
  return true;
}

void StructuredOperator::check_dims(Index w_size, Index out_size) const {
  const Index n2 = 2 * dim_complex();
  if (w_size != n2 || out_size != n2)
    throw std::invalid_argument("StructuredOperator: expected vectors of length " +
                                std::to_string(n2) + ", got " + std::to_string(w_size) + " and " +
                                std::to_string(out_size));
}

void StructuredOperator::apply(ConstVectorRef w, VectorRef out) const {
  check_dims(w.size(), out.size());
  out.setZero();
  apply_add(1.0, w, out);
}

void StructuredOperator::apply_add(double alpha, ConstVectorRef w, VectorRef out) const {
  check_dims(w.size(), out.size());
  const Index n = dim_complex();
  const auto u = w.head(n);
  const auto v = w.tail(n);
  out.head(n).noalias() += alpha * (K_ * v);
  out.tail(n).noalias() -= alpha * (K_ * u);
  if (has_imaginary_part()) {
    out.head(n).noalias() += alpha * (S_ * u);
    out.tail(n).noalias() += alpha * (S_ * v);
  }
}

void StructuredOperator::apply_transpose(ConstVectorRef w, VectorRef out) const {
  check_dims(w.size(), out.size());
  out.setZero();
  apply_transpose_add(1.0, w, out);
}

void StructuredOperator::apply_transpose_add(double alpha, ConstVectorRef w, VectorRef out) const {
  check_dims(w.size(), out.size());
  const Index n = dim_complex();
  const auto u = w.head(n);
  const auto v = w.tail(n);
  // A^T = [[S^T, -K^T], [K^T, S^T]]
  if (k_symmetric_) {
    out.head(n).noalias() -= alpha * (K_ * v);
    out.tail(n).noalias() += alpha * (K_ * u);
  } else {
    out.head(n).noalias() -= alpha * (K_.transpose() * v);
    out.tail(n).noalias() += alpha * (K_.transpose() * u);
  }
  if (!has_imaginary_part()) return;
  if (s_antisymmetric_) {
    out.head(n).noalias() -= alpha * (S_ * u);
    out.tail(n).noalias() -= alpha * (S_ * v);
  } else {
    out.head(n).noalias() += alpha * (S_.transpose() * u);
    out.tail(n).noalias() += alpha * (S_.transpose() * v);
  }
}

ComplexMatrix StructuredOperator::hamiltonian() const {
  ComplexMatrix H(dim_complex(), dim_complex());
  H.real() = Matrix(K_);
  H.imag() = Matrix(S_);
  return H;
}

}  // namespace hermite
