#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hermite/verify.hpp"

using namespace hermite;

namespace {

const std::complex<double> kI{0.0, 1.0};

RabiSpec sample_spec() { return {std::polar(0.37, 0.6), 4.1}; }

ComplexMatrix rabi_hamiltonian(std::complex<double> omega) {
  ComplexMatrix H(2, 2);
  H << 0.0, omega, std::conj(omega), 0.0;
  return H;
}

ComplexMatrix hadamard() {
  ComplexMatrix H(2, 2);
  H << 1, 1, 1, -1;
  return H / std::sqrt(2.0);
}

}  // namespace

TEST(Rabi, ClosedFormIsUnitaryAndStartsAtIdentity) {
  const auto spec = sample_spec();
  EXPECT_LT((rabi_unitary(spec, 0.0) - ComplexMatrix::Identity(2, 2)).norm(), 1e-15);
  for (double t : {0.5, 3.3, 17.0}) {
    const ComplexMatrix U = rabi_unitary(spec, t);
    EXPECT_LT((U.adjoint() * U - ComplexMatrix::Identity(2, 2)).norm(), 1e-14);
  }
}

TEST(Rabi, ClosedFormSolvesSchroedingerEquation) {
  const auto spec = sample_spec();
  const ComplexMatrix H = rabi_hamiltonian(spec.omega);
  const double h = 1e-6;
  for (double t : {0.7, 2.9}) {
    const ComplexMatrix dU = (rabi_unitary(spec, t + h) - rabi_unitary(spec, t - h)) / (2 * h);
    EXPECT_LT((dU + kI * H * rabi_unitary(spec, t)).norm(), 1e-8);
  }
}

TEST(Rabi, FullPeriodReturnsToMinusIdentity) {
  const auto spec = sample_spec();
  EXPECT_LT((rabi_unitary(spec, spec.period()) + ComplexMatrix::Identity(2, 2)).norm(), 1e-14);
}

TEST(Rabi, SensitivitiesMatchFiniteDifferences) {
  const auto spec = sample_spec();
  const auto [d1, d2] = rabi_sensitivities(spec, spec.T);
  const double h = 1e-6;
  RabiSpec p = spec, m = spec;
  p.omega += h;
  m.omega -= h;
  EXPECT_LT((d1 - (rabi_unitary(p, spec.T) - rabi_unitary(m, spec.T)) / (2 * h)).norm(), 1e-8);
  p = spec;
  m = spec;
  p.omega += kI * h;
  m.omega -= kI * h;
  EXPECT_LT((d2 - (rabi_unitary(p, spec.T) - rabi_unitary(m, spec.T)) / (2 * h)).norm(), 1e-8);
}

TEST(Rabi, InfidelityGradientMatchesFiniteDifferences) {
  const auto spec = sample_spec();
  const Vector g = rabi_infidelity_gradient(spec, hadamard());
  const ScalarFunction J = [&](const Vector& th) {
    return rabi_infidelity({{th[0], th[1]}, spec.T}, hadamard());
  };
  const Vector theta = (Vector(2) << spec.omega.real(), spec.omega.imag()).finished();
  EXPECT_LT((finite_difference_gradient(J, theta, 1e-6) - g).norm(), 1e-8);
}

TEST(Rabi, DiscreteProblemConvergesToClosedForm) {
  const auto spec = sample_spec();
  EXPECT_LT(rabi_state_error(spec, 8, 64), 1e-10);
  EXPECT_GT(rabi_state_error(spec, 2, 8), rabi_state_error(spec, 2, 16));
  EXPECT_LT(rabi_gradient_error(spec, hadamard(), 8, 64), 1e-8);
}

TEST(Rabi, RejectsDegenerateInput) {
  EXPECT_THROW(rabi_unitary({0.0, 1.0}, 0.5), std::invalid_argument);
  EXPECT_THROW(rabi_unitary(sample_spec(), -1.0), std::invalid_argument);
}

TEST(FiniteDifferences, ExactOnQuadratics) {
  const ScalarFunction J = [](const Vector& x) { return x.squaredNorm() + 3.0 * x[0] * x[1]; };
  const Vector x = (Vector(2) << 0.4, -1.1).finished();
  const Vector exact = (Vector(2) << 2 * 0.4 + 3 * -1.1, 2 * -1.1 + 3 * 0.4).finished();
  EXPECT_LT((finite_difference_gradient(J, x, 1e-3) - exact).norm(), 1e-10);
  const auto best = best_finite_difference(J, x, exact, default_fd_steps());
  EXPECT_LT(best.relative_error, 1e-9);
  EXPECT_THROW(finite_difference_gradient(J, x, 0.0), std::invalid_argument);
  EXPECT_THROW(best_finite_difference(J, x, exact, {}), std::invalid_argument);
}

TEST(ConvergenceStudy, RecoversPowerLawRates) {
  const auto tables = convergence_study(
      {2, 4}, {10, 20, 40}, [](int order, int n) { return 3.0 * std::pow(n, -order); }, 2);
  ASSERT_EQ(tables.size(), 2u);
  EXPECT_FALSE(tables[0].rows[0].rate.has_value());
  EXPECT_NEAR(*tables[0].rows[2].rate, 2.0, 1e-12);
  EXPECT_NEAR(*tables[1].rows[1].rate, 4.0, 1e-12);
  std::ostringstream out;
  write_convergence_csv(out, tables);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "Steps,Err_2,Cvg_2,Err_4,Cvg_4");
  EXPECT_THROW(convergence_study({2}, {20, 10}, [](int, int) { return 1.0; }),
               std::invalid_argument);
}

TEST(RecommendSteps, InterpolatesPowerLawExactly) {
  const std::vector<int> steps{16, 32, 64, 128};
  std::vector<double> errs;
  for (int n : steps) errs.push_back(5.0 * std::pow(n, -4.0));
  const double target = 5.0 * std::pow(50.0, -4.0);
  EXPECT_NEAR(*recommend_steps(steps, errs, target), 50.0, 1e-9);
  // Beyond the sampled range the fit extrapolates along the same line.
  EXPECT_NEAR(*recommend_steps(steps, errs, 5.0 * std::pow(1000.0, -4.0)), 1000.0, 1e-6);
  // Already accurate at the coarsest grid.
  EXPECT_EQ(*recommend_steps(steps, errs, 1.0), 16.0);
  EXPECT_NEAR(interpolate_log_log(steps, errs, 50.0), target, 1e-15);
}

TEST(RecommendSteps, MonotoneInTarget) {
  const std::vector<int> steps{8, 16, 32, 64, 128};
  const std::vector<double> errs{3e-1, 4e-2, 2e-3, 1.5e-4, 9e-6};
  double previous = 0.0;
  for (double target : {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-8}) {
    const double n = *recommend_steps(steps, errs, target);
    EXPECT_GE(n, previous);
    previous = n;
  }
}

TEST(RecommendSteps, NoRecommendationWithoutUsableSamples) {
  EXPECT_FALSE(recommend_steps({8, 16}, {2.0, 3.0}, 1e-3).has_value());
  EXPECT_FALSE(recommend_steps({8, 16}, {1e-2, 2e-2}, 1e-3).has_value());
  EXPECT_THROW(recommend_steps({8}, {1.0, 2.0}, 1e-3), std::invalid_argument);
  EXPECT_THROW(recommend_steps({8}, {1.0}, 0.0), std::invalid_argument);
}

TEST(UnitarityL2, ZeroForNormPreservingHistoryAndScalesWithDrift) {
  const int steps = 10;
  StateHistory h(4, steps, 2);
  for (int k = 0; k <= steps; ++k) {
    h.snapshot(0, k) << 1, 0, 0, 0;
    h.snapshot(1, k) << 0, 0.6, 0, 0.8;
  }
  const TimeGrid grid(2.0, steps);
  EXPECT_EQ(unitarity_l2(h, grid), 0.0);
  for (Index c = 0; c < 2; ++c) h.column(c) *= 1.01;
  EXPECT_NEAR(unitarity_l2(h, grid), 0.01 * std::sqrt(2.0), 1e-14);
}

TEST(FineGridReference, UsesSmoothestAvailableOrder) {
  const auto problem = make_rabi_problem(3.0);
  const RabiSpec spec{std::polar(0.5, 0.2), 3.0};
  const auto theta = rabi_theta(spec);
  const auto ref = fine_grid_reference(problem, theta, 8);
  EXPECT_LT(relative_frobenius_error(ref, complex_to_real(rabi_unitary(spec, 3.0))), 1e-13);
}

namespace {

RabiSpec table_spec() {
  const double amplitude = 0.05;
  return {std::polar(amplitude, std::numbers::pi / 4), 9.5 * std::numbers::pi / amplitude};
}

/// Swapping (theta_1, theta_2) maps U(t) to D U(t)^T D^dagger with D = diag(1, -i),
/// so the infidelity against G at the swapped point equals that against D G^T D^dagger.
ComplexMatrix swapped_target(const ComplexMatrix& gate) {
  ComplexMatrix D = ComplexMatrix::Zero(2, 2);
  D(0, 0) = 1.0;
  D(1, 1) = -kI;
  return D * gate.transpose() * D.adjoint();
}

}  // namespace

TEST(Rabi, HalfPeriodTransfersPopulation) {
  const RabiSpec spec{0.3, 1.0};
  const ComplexMatrix U = rabi_unitary(spec, spec.period() / 2);
  EXPECT_NEAR(std::abs(U(1, 0)), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(U(0, 0)), 0.0, 1e-15);
}

TEST(Rabi, ReferenceStateErrors) {
  const auto spec = table_spec();
  EXPECT_NEAR(std::log(rabi_state_error(spec, 8, 16) / 1.6e-4), 0.0, std::log(2.0));
  EXPECT_NEAR(std::log(rabi_state_error(spec, 12, 32) / 2.2e-12), 0.0, std::log(3.0));
  EXPECT_NEAR(std::log(rabi_state_error(spec, 4, 64) / 1.9e-3), 0.0, std::log(2.0));
  EXPECT_NEAR(std::log(rabi_state_error(spec, 2, 256) / 3.4e-2), 0.0, std::log(2.0));
  const double rate4 = std::log2(rabi_state_error(spec, 4, 32) / rabi_state_error(spec, 4, 64));
  EXPECT_NEAR(rate4, 3.9, 0.3);
}

TEST(Rabi, ReferenceGradientErrors) {
  const auto spec = table_spec();
  EXPECT_NEAR(std::log(rabi_gradient_error(spec, hadamard(), 6, 128) / 1.4e-6), 0.0, std::log(2.0));
  EXPECT_NEAR(std::log(rabi_gradient_error(spec, hadamard(), 8, 256) / 1.1e-12), 0.0,
              std::log(5.0));
  EXPECT_LE(rabi_gradient_error(spec, hadamard(), 10, 128), 1e-13);
}

TEST(Rabi, SwapSymmetryOfGradients) {
  ComplexMatrix X(2, 2);
  X << 0, 1, 1, 0;
  const double a = 0.31, b = -0.12, T = 2.3;
  const Vector gx = rabi_infidelity_gradient({{a, b}, T}, X);
  const Vector gs = rabi_infidelity_gradient({{b, a}, T}, swapped_target(X));
  EXPECT_NEAR(gx[0], gs[1], 1e-14);
  EXPECT_NEAR(gx[1], gs[0], 1e-14);

  // The identity is invariant under the swap, so equal components stay equal.
  const Vector gi = rabi_infidelity_gradient({{0.2, 0.2}, T}, ComplexMatrix::Identity(2, 2));
  EXPECT_NEAR(gi[0], gi[1], 1e-14);

  // The discrete adjoint honours the same symmetry.
  const auto problem = make_rabi_problem(T);
  const auto scheme = HermiteScheme::of_order(6);
  const TimeGrid grid(T, 20);
  const GateObjective ox(GateTarget::from_gate(X, problem.initial), {});
  const GateObjective os(GateTarget::from_gate(swapped_target(X), problem.initial), {});
  const std::vector<double> ab{a, b}, ba{b, a};
  const Vector dx = compute_gradient(problem, ab, scheme, grid, ox).grad;
  const Vector ds = compute_gradient(problem, ba, scheme, grid, os).grad;
  EXPECT_NEAR(dx[0], ds[1], 1e-12);
  EXPECT_NEAR(dx[1], ds[0], 1e-12);
}

TEST(FiniteDifferences, LinearAndQuadraticExamples) {
  const Vector a = (Vector(3) << 1.5, -2.0, 0.25).finished();
  const ScalarFunction linear = [&](const Vector& x) { return a.dot(x); };
  EXPECT_LT((finite_difference_gradient(linear, Vector::Random(3), 1e-3) - a).norm(), 1e-12);
  const ScalarFunction quadratic = [](const Vector& x) { return x.squaredNorm(); };
  const Vector g = finite_difference_gradient(quadratic, Vector::Unit(3, 0), 1e-4);
  EXPECT_LT((g - 2.0 * Vector::Unit(3, 0)).norm(), 1e-10);
}

TEST(FiniteDifferences, AgreeWithAdjointOnRandomRabiParameters) {
  const double T = 7.0;
  const auto problem = make_rabi_problem(T);
  const GateObjective obj(GateTarget::from_gate(hadamard(), problem.initial), {});
  const auto scheme = HermiteScheme::of_order(8);
  const TimeGrid grid(T, 30);
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector theta = (Vector(2) << u(rng), u(rng)).finished();
    const Vector adj = compute_gradient(problem, as_span(theta), scheme, grid, obj).grad;
    const ScalarFunction J = [&](const Vector& th) {
      return evaluate_objective(problem, as_span(th), scheme, grid, obj).total;
    };
    const auto fd = best_finite_difference(J, theta, adj, default_fd_steps());
    EXPECT_LT(fd.relative_error, 1e-6);
  }
}

TEST(StepsizeStudy, SingleSampleMatchesConvergenceErrors) {
  const double T = 5.0;
  const auto problem = make_rabi_problem(T);
  const GateObjective obj(GateTarget::from_gate(hadamard(), problem.initial), {});
  const Vector theta = (Vector(2) << 0.3, -0.2).finished();
  const std::vector<int> steps{8, 16, 32};
  const auto rows = stepsize_study(problem, obj, {theta}, {4}, steps);
  const RealStateMatrix ref = fine_grid_reference(problem, as_span(theta), steps.back());
  ASSERT_EQ(rows.size(), steps.size());
  for (const auto& r : rows) {
    const auto fwd =
        forward_evolve(problem, as_span(theta), HermiteScheme::of_order(4), TimeGrid(T, r.steps));
    EXPECT_DOUBLE_EQ(r.mean_error, relative_frobenius_error(fwd.history.final_state(), ref));
    EXPECT_EQ(r.std_error, 0.0);
  }
}
