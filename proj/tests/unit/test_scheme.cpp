#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "hermite/scheme.hpp"
#include "oracle.hpp"

using namespace hermite;

namespace {
using Fraction = std::pair<std::uint64_t, std::uint64_t>;
}  // namespace

TEST(HermiteCoefficients, LowOrderValues) {
  EXPECT_EQ(hermite_coefficient_fraction(1, 1, 0), (Fraction{1, 1}));
  EXPECT_EQ(hermite_coefficient_fraction(1, 1, 1), (Fraction{1, 2}));
  EXPECT_EQ(hermite_coefficient_fraction(2, 2, 1), (Fraction{1, 2}));
  EXPECT_EQ(hermite_coefficient_fraction(2, 2, 2), (Fraction{1, 6}));
  // Order 4 applies c_2 / 2! = 1/12 to the second derivative.
  EXPECT_DOUBLE_EQ(HermiteScheme::of_order(4).coeffs_R()[2] / 2.0, 1.0 / 12.0);
}

TEST(HermiteCoefficients, MatchFactorialFormula) {
  for (int p = 1; p <= 6; ++p)
    for (int q = 1; q <= 6; ++q)
      for (int j = 0; j <= p; ++j) {
        const auto [num, den] = hermite_coefficient_fraction(p, q, j);
        EXPECT_NEAR(static_cast<double>(num) / den, oracle::hermite_c(p, q, j), 1e-15);
      }
}

TEST(HermiteCoefficients, LargestSupportedIsExact) {
  // c_15^{15,15} = 15! 15! / 30!, a fraction whose pieces must not overflow.
  const auto [num, den] = hermite_coefficient_fraction(15, 15, 15);
  EXPECT_EQ(num, 1u);
  EXPECT_EQ(den, 155117520u);
}

TEST(HermiteCoefficients, Rejections) {
  EXPECT_THROW(hermite_coefficients(0, 1), std::invalid_argument);
  EXPECT_THROW(hermite_coefficients(16, 15), std::invalid_argument);
  EXPECT_THROW(hermite_coefficient_fraction(2, 2, 3), std::invalid_argument);
  EXPECT_THROW(HermiteScheme(2, 3), std::invalid_argument);
  EXPECT_THROW(HermiteScheme::of_order(3), std::invalid_argument);
  EXPECT_THROW(HermiteScheme::of_order(0), std::invalid_argument);
}

TEST(HermiteScheme, SignsOfLeftCoefficients) {
  const auto s = HermiteScheme::of_order(8);
  EXPECT_EQ(s.p(), 4);
  for (int j = 1; j <= 4; ++j)
    EXPECT_DOUBLE_EQ(s.coeffs_L()[j], (j % 2 ? -1.0 : 1.0) * s.coeffs_R()[j]);
}

// For y' = z y the one-step map is num(z) / den(z). Order 2p means the Taylor
// coefficients of den(z) exp(z) - num(z) vanish up to z^(2p) but not at z^(2p+1).
// The map must also be unimodular on the imaginary axis.
TEST(HermiteScheme, ScalarAmplificationFactor) {
  for (int order = 2; order <= 12; order += 2) {
    const auto s = HermiteScheme::of_order(order);
    const int p = s.p();
    std::vector<double> num(p + 1), den(p + 1), inv_fact(2 * p + 2);
    inv_fact[0] = 1.0;
    for (int k = 1; k < static_cast<int>(inv_fact.size()); ++k) inv_fact[k] = inv_fact[k - 1] / k;
    for (int j = 0; j <= p; ++j) {
      num[j] = (j == 0 ? 1.0 : s.coeffs_R()[j]) * inv_fact[j];
      den[j] = (j == 0 ? 1.0 : s.coeffs_L()[j]) * inv_fact[j];
    }
    auto defect = [&](int k) {
      double sum = k <= p ? -num[k] : 0.0;
      for (int i = 0; i <= std::min(k, p); ++i) sum += den[i] * inv_fact[k - i];
      return sum;
    };
    for (int k = 0; k <= 2 * p; ++k)
      EXPECT_NEAR(defect(k), 0.0, 1e-15) << "order " << order << " k " << k;
    EXPECT_GT(std::abs(defect(2 * p + 1)), 1e-15 * inv_fact[2 * p + 1]) << "order " << order;

    auto factor = [&](std::complex<double> z) {
      std::complex<double> n = 0.0, d = 0.0, zj = 1.0;
      for (int j = 0; j <= p; ++j, zj *= z) {
        n += num[j] * zj;
        d += den[j] * zj;
      }
      return n / d;
    };
    EXPECT_NEAR(std::abs(factor({0.0, 3.7})), 1.0, 1e-14);
  }
}

TEST(TimeGrid, NodesAndValidation) {
  const TimeGrid g(550.0, 7);
  EXPECT_EQ(g.time(7), 550.0);
  EXPECT_DOUBLE_EQ(g.dt(), 550.0 / 7);
  EXPECT_THROW(TimeGrid(0.0, 3), std::invalid_argument);
  EXPECT_THROW(TimeGrid(1.0, 0), std::invalid_argument);
}

TEST(HermiteCoefficients, LeadingCoefficientIsOne) {
  for (int p = 1; p <= 15; ++p)
    for (int q = 1; p + q <= 30; ++q) EXPECT_EQ(hermite_coefficients(p, q)[0], 1.0);
  EXPECT_EQ(hermite_coefficients(1, 1), (std::vector<double>{1.0, 0.5}));
}
