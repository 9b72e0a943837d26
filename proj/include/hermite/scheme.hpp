#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace hermite {

/// c_j^{pq} = p! (p+q-j)! / ((p+q)! (p-j)!) as a reduced fraction.
std::pair<std::uint64_t, std::uint64_t> hermite_coefficient_fraction(int p, int q, int j);

/// c_j^{pq} for j = 0..p. Rejects p, q < 1 and p + q > 30.
std::vector<double> hermite_coefficients(int p, int q);

/// One-step Hermite rule with p = q derivatives on each side; order 2p.
class HermiteScheme {
 public:
  explicit HermiteScheme(int p, int q);
  static HermiteScheme of_order(int order);

  int p() const { return p_; }
  int q() const { return q_; }
  int order() const { return p_ + q_; }
  /// (-1)^j c_j^{qp}, j = 0..q: -L w = sum_{j>=1} coeffs_L[j] dt^j w^{(j)}/j!
  const std::vector<double>& coeffs_L() const { return coeffs_L_; }
  /// c_j^{pq}, j = 0..p: R w = sum_{j>=1} coeffs_R[j] dt^j w^{(j)}/j!
  const std::vector<double>& coeffs_R() const { return coeffs_R_; }

 private:
  int p_;
  int q_;
  std::vector<double> coeffs_L_;
  std::vector<double> coeffs_R_;
};

class TimeGrid {
 public:
  TimeGrid(double T, int steps);

  double T() const { return T_; }
  int steps() const { return steps_; }
  double dt() const { return T_ / steps_; }
  /// t_n = n T / N_T, exactly T at n = N_T.
  double time(int n) const { return T_ * static_cast<double>(n) / steps_; }

 private:
  double T_;
  int steps_;
};

}  // namespace hermite
