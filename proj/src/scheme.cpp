#include "hermite/scheme.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace hermite {

namespace {

constexpr int max_total_derivatives = 30;

std::uint64_t binomial_exact(int n, int k) {
  std::uint64_t b = 1;
  // b * (n - k + i) / i stays integral at every step and fits 64 bits for n <= 30.
  for (int i = 1; i <= k; ++i) b = b * static_cast<std::uint64_t>(n - k + i) / i;
  return b;
}

void check_counts(int p, int q) {
  if (p < 1 || q < 1) throw std::invalid_argument("Hermite scheme: p and q must be at least 1");
  if (p + q > max_total_derivatives)
    throw std::invalid_argument("Hermite scheme: p + q = " + std::to_string(p + q) +
                                " exceeds the supported maximum of 30");
}

}  // namespace

std::pair<std::uint64_t, std::uint64_t> hermite_coefficient_fraction(int p, int q, int j) {
  check_counts(p, q);
  if (j < 0 || j > p) throw std::invalid_argument("Hermite scheme: coefficient index out of range");
  // p! (p+q-j)! / ((p+q)! (p-j)!) = binom(p, j) / binom(p+q, j)
  std::uint64_t num = binomial_exact(p, j);
  std::uint64_t den = binomial_exact(p + q, j);
  const std::uint64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

std::vector<double> hermite_coefficients(int p, int q) {
  check_counts(p, q);
  std::vector<double> c(p + 1);
  for (int j = 0; j <= p; ++j) {
    const auto [num, den] = hermite_coefficient_fraction(p, q, j);
    c[j] = static_cast<double>(num) / static_cast<double>(den);
  }
  return c;
}

HermiteScheme::HermiteScheme(int p, int q) : p_(p), q_(q) {
  check_counts(p, q);
  if (p != q)
    throw std::invalid_argument(
        "Hermite scheme: only p = q is supported (got p = " + std::to_string(p) +
        ", q = " + std::to_string(q) + "); q > p variants target dissipative dynamics");
  coeffs_R_ = hermite_coefficients(p, q);
  coeffs_L_ = hermite_coefficients(q, p);
  for (int j = 1; j <= q; j += 2) coeffs_L_[j] = -coeffs_L_[j];
}

HermiteScheme HermiteScheme::of_order(int order) {
  if (order < 2 || order % 2 != 0)
    throw std::invalid_argument("Hermite scheme: order must be even and at least 2, got " +
                                std::to_string(order));
  return HermiteScheme(order / 2, order / 2);
}

TimeGrid::TimeGrid(double T, int steps) : T_(T), steps_(steps) {
  if (!(T > 0.0) || !std::isfinite(T))
    throw std::invalid_argument("time grid: duration must be positive and finite");
  if (steps < 1) throw std::invalid_argument("time grid: need at least one step");
}

}  // namespace hermite
