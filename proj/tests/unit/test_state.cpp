#include <gtest/gtest.h>

#include "hermite/state.hpp"
#include "oracle.hpp"
#include "random_problem.hpp"

using namespace hermite;

TEST(RealSplit, RoundTripVector) {
  ComplexVector psi(3);
  psi << std::complex<double>(1, 2), std::complex<double>(-3, 0.5), std::complex<double>(0, -1);
  const RealState w = complex_to_real(psi);
  EXPECT_EQ(w.dim_complex(), 3);
  EXPECT_DOUBLE_EQ(w.u()[1], -3.0);
  EXPECT_DOUBLE_EQ(w.v()[0], 2.0);
  EXPECT_EQ(real_to_complex(w), psi);
}

TEST(RealSplit, RoundTripMatrix) {
  std::mt19937_64 rng(3);
  const ComplexMatrix U = testing_support::random_hermitian(4, rng, 1.0).leftCols(2);
  const RealStateMatrix W = complex_to_real(U);
  EXPECT_EQ(W.dim_complex(), 4);
  EXPECT_EQ(W.essential_dim(), 2);
  EXPECT_EQ(real_to_complex(W), U);
}

TEST(RealSplit, RejectsOddLength) {
  EXPECT_THROW(RealState(Vector::Zero(3)), std::invalid_argument);
  EXPECT_THROW(RealStateMatrix(Matrix::Zero(3, 1)), std::invalid_argument);
  EXPECT_THROW(RealStateMatrix(2, 3), std::invalid_argument);
}

TEST(StructuredOperator, ApplyMatchesMinusIH) {
  std::mt19937_64 rng(11);
  const ComplexMatrix H = testing_support::random_hermitian(5, rng, 1.0);
  const auto op = StructuredOperator::from_hamiltonian(H);
  ComplexVector psi = ComplexVector::Random(5);
  RealState out(5);
  op.apply(complex_to_real(psi), out);
  const ComplexVector expected = std::complex<double>(0, -1) * H * psi;
  EXPECT_LT((real_to_complex(out) - expected).norm(), 1e-14);
}

TEST(StructuredOperator, TransposeMatchesDense) {
  std::mt19937_64 rng(12);
  // Non-Hermitian on purpose: the transpose must not rely on the skew shortcut.
  ComplexMatrix H = testing_support::random_hermitian(4, rng, 1.0);
  H(0, 3) += 0.7;
  const auto op = StructuredOperator::from_hamiltonian(H);
  EXPECT_FALSE(op.skew());
  const Matrix A = oracle::dense_block(op);
  const Vector x = Vector::Random(8);
  Vector out(8);
  op.apply_transpose(x, out);
  EXPECT_LT((out - A.transpose() * x).norm(), 1e-14);
  op.apply(x, out);
  EXPECT_LT((out - A * x).norm(), 1e-14);
}

TEST(StructuredOperator, HermitianIsSkew) {
  std::mt19937_64 rng(13);
  const auto op =
      StructuredOperator::from_hamiltonian(testing_support::random_hermitian(4, rng, 1.0));
  EXPECT_TRUE(op.skew());
  const Matrix A = oracle::dense_block(op);
  EXPECT_LT((A + A.transpose()).norm(), 1e-15);
  const Vector x = Vector::Random(8);
  Vector out = Vector::Zero(8);
  op.apply_transpose_add(2.0, x, out);
  EXPECT_LT((out - 2.0 * A.transpose() * x).norm(), 1e-14);
}

TEST(StructuredOperator, ApplyAddAccumulates) {
  std::mt19937_64 rng(14);
  const auto op =
      StructuredOperator::from_hamiltonian(testing_support::random_hermitian(3, rng, 1.0));
  const Vector x = Vector::Random(6);
  Vector out = Vector::Ones(6);
  op.apply_add(-0.5, x, out);
  EXPECT_LT((out - (Vector::Ones(6) - 0.5 * oracle::dense_block(op) * x)).norm(), 1e-14);
}

TEST(StructuredOperator, DimensionMismatchThrows) {
  const auto op = StructuredOperator::zero(3);
  Vector x = Vector::Zero(4), out = Vector::Zero(6);
  EXPECT_THROW(op.apply(x, out), std::invalid_argument);
}

TEST(StructuredOperator, HamiltonianRoundTrip) {
  std::mt19937_64 rng(15);
  const ComplexMatrix H = testing_support::random_hermitian(4, rng, 1.0);
  EXPECT_LT((StructuredOperator::from_hamiltonian(H).hamiltonian() - H).norm(), 1e-15);
}

TEST(StructuredOperator, RealDiagonalDetection) {
  ComplexMatrix H = ComplexMatrix::Zero(3, 3);
  H(1, 1) = 2.0;
  EXPECT_TRUE(StructuredOperator::from_hamiltonian(H).is_real_diagonal());
  H(0, 1) = H(1, 0) = 1.0;
  EXPECT_FALSE(StructuredOperator::from_hamiltonian(H).is_real_diagonal());
}

TEST(RealSplit, SmallExamples) {
  using C = std::complex<double>;
  auto split = [](std::initializer_list<C> entries) {
    ComplexVector psi(static_cast<Index>(entries.size()));
    Index i = 0;
    for (C z : entries) psi[i++] = z;
    return complex_to_real(psi).data();
  };
  EXPECT_EQ(split({1.0, 0.0}), (Vector(4) << 1, 0, 0, 0).finished());
  EXPECT_EQ(split({0.0, C(0, 1)}), (Vector(4) << 0, 0, 0, 1).finished());
  EXPECT_EQ(split({C(0.5, 0.5), C(0.5, -0.5)}), (Vector(4) << 0.5, 0.5, 0.5, -0.5).finished());
}

TEST(StructuredOperator, IdentityRealPartExamples) {
  const auto op = StructuredOperator::from_hamiltonian(ComplexMatrix::Identity(2, 2));
  const Vector w = (Vector(4) << 1, 0, 0, 0).finished();
  Vector out(4);
  op.apply(w, out);
  EXPECT_EQ(out, (Vector(4) << 0, 0, -1, 0).finished());
  op.apply_transpose(w, out);
  EXPECT_EQ(out, (Vector(4) << 0, 0, 1, 0).finished());
  const auto zero = StructuredOperator::zero(2);
  zero.apply(Vector::Random(4), out);
  EXPECT_EQ(out, Vector::Zero(4));
}

TEST(StructuredOperator, AdjointIdentityAndSkewTranspose) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const auto op =
        StructuredOperator::from_hamiltonian(testing_support::random_hermitian(6, rng, 1.0, 0.5));
    const Vector x = Vector::Random(12), y = Vector::Random(12);
    Vector Ax(12), ATy(12), Ay(12);
    op.apply(x, Ax);
    op.apply_transpose(y, ATy);
    op.apply(y, Ay);
    EXPECT_NEAR(Ax.dot(y), x.dot(ATy), 1e-14 * Ax.norm() * y.norm());
    EXPECT_LT((ATy + Ay).norm(), 1e-15 * (1 + Ay.norm()));
  }
}
