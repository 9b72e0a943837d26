// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hermite/adjoint.hpp"
#include "hermite/cli/commands.hpp"
#include "hermite/cli/config.hpp"
#include "hermite/model.hpp"
#include "hermite/objectives.hpp"
#include "hermite/optimize.hpp"
#include "hermite/verify.hpp"
#include "random_problem.hpp"

using namespace hermite;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string config_dir() {
  const char* dir = std::getenv("HERMITE_CONFIG_DIR");
  return dir ? dir : HERMITE_SOURCE_CONFIG_DIR;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("hermite_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

IntegratorOptions tight() {
  IntegratorOptions opts;
  opts.krylov.abs_tol = 1e-14;
  return opts;
}

bool within_factor(double measured, double reference, double factor) {
  return measured <= factor * reference && measured >= reference / factor;
}

// Reference errors for the 9.5-period Rabi run, indexed
// [steps 16..256][order 2..12].
constexpr std::array<int, 5> kTableSteps{16, 32, 64, 128, 256};
constexpr std::array<int, 6> kTableOrders{2, 4, 6, 8, 10, 12};
constexpr double kStateTable[5][6] = {{4.5e-1, 4.0e-1, 1.1e-2, 1.6e-4, 1.4e-6, 8.6e-9},
                                      {1.6, 3.0e-2, 1.9e-4, 6.6e-7, 1.4e-9, 2.2e-12},
                                      {5.2e-1, 1.9e-3, 3.0e-6, 2.6e-9, 1.4e-12, 3.4e-15},
                                      {1.3e-1, 1.2e-4, 4.7e-8, 1.0e-11, 1.5e-15, 2.2e-15},
                                      {3.4e-2, 7.7e-6, 7.4e-10, 3.5e-14, 1.4e-15, 4.6e-15}};
constexpr double kGradientTable[5][6] = {{6.3, 1.0e1, 3.2e-1, 4.6e-3, 4.2e-5, 2.6e-7},
                                         {7.9, 8.8e-1, 5.6e-3, 2.0e-5, 4.3e-8, 6.6e-11},
                                         {1.2e1, 5.8e-2, 9.0e-5, 7.8e-8, 4.3e-11, 8.3e-14},
                                         {3.9, 3.6e-3, 1.4e-6, 3.1e-10, 4.1e-15, 4.9e-14},
                                         {1.0, 2.3e-4, 2.2e-8, 1.1e-12, 7.1e-14, 1.3e-13}};
constexpr double kRoundoffFloor = 1e-13;

RabiSpec table_spec() {
  const double amplitude = 0.05;
  return {std::polar(amplitude, std::numbers::pi / 4), 9.5 * std::numbers::pi / amplitude};
}

ComplexMatrix hadamard() { return cli::named_gate("hadamard", 2); }

/// Compares a measured table with the published one cell by cell.
/// Rates are checked where the coarser published error is below 0.2, so that the
/// step is resolved, and both errors sit above the roundoff floor.
Outcome compare_table(const double (&table)[5][6], const std::function<double(int, int)>& error,
                      bool check_rates) {
  int cells = 0, rate_checks = 0;
  std::string failures;
  for (std::size_t o = 0; o < kTableOrders.size(); ++o) {
    double previous = 0.0;
    for (std::size_t s = 0; s < kTableSteps.size(); ++s) {
      const double measured = error(kTableOrders[o], kTableSteps[s]);
      const double reference = table[s][o];
      if (reference > kRoundoffFloor && measured > kRoundoffFloor) {
        ++cells;
        if (!within_factor(measured, reference, 3.0))
          failures += " order " + std::to_string(kTableOrders[o]) + "/" +
                      std::to_string(kTableSteps[s]) + ": " + fmt(measured) + " vs " +
                      fmt(reference) + ";";
      }
      if (check_rates && s > 0 && table[s - 1][o] < 0.2 && previous > kRoundoffFloor &&
          measured > kRoundoffFloor && reference > kRoundoffFloor) {
        ++rate_checks;
        const double rate = std::log2(previous / measured);
        if (std::abs(rate - kTableOrders[o]) > 0.3)
          failures += " rate order " + std::to_string(kTableOrders[o]) + " at " +
                      std::to_string(kTableSteps[s]) + " = " + fmt(rate) + ";";
      }
      previous = measured;
    }
  }
  Outcome out;
  out.pass = failures.empty();
  out.detail = std::to_string(cells) + " cells within factor 3";
  if (check_rates) out.detail += ", " + std::to_string(rate_checks) + " rates within 0.3 of 2p";
  if (!failures.empty()) out.detail += "; mismatches:" + failures;
  return out;
}

Outcome rabi_state_convergence() {
  const auto spec = table_spec();
  return compare_table(
      kStateTable, [&](int order, int steps) { return rabi_state_error(spec, order, steps); },
      true);
}

Outcome rabi_gradient_convergence() {
  const auto spec = table_spec();
  const ComplexMatrix target = hadamard();
  return compare_table(
      kGradientTable,
      [&](int order, int steps) { return rabi_gradient_error(spec, target, order, steps); }, false);
}

GateObjective random_objective(const ControlProblem& problem, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Index e = problem.n_columns();
  ComplexMatrix z(e, e);
  for (Index i = 0; i < e; ++i)
    for (Index j = 0; j < e; ++j) z(i, j) = {normal(rng), normal(rng)};
  const ComplexMatrix gate = Eigen::HouseholderQR<ComplexMatrix>(z).householderQ();
  ObjectiveConfig cfg;
  cfg.kind = seed % 2 == 0 ? InfidelityKind::generalized : InfidelityKind::trace;
  Vector weights(problem.dim_complex());
  for (Index i = 0; i < weights.size(); ++i) weights[i] = std::abs(normal(rng));
  cfg.guard = GuardWeights{weights};
  cfg.guard_coefficient = 0.5;
  cfg.regularization = 1e-3;
  return GateObjective(GateTarget::from_gate(gate, problem.initial), cfg);
}

// Criteria 3 and 5 share their random instances.
struct GradientSweep {
  int instances = 0;
  int checks = 0;
  double worst_fd = 0.0;
  double worst_naive = 0.0;
  double seconds = 0.0;
};

const GradientSweep& gradient_sweep() {
  static const GradientSweep sweep = [] {
    GradientSweep s;
    const auto start = std::chrono::steady_clock::now();
    for (int instance = 0; instance < 50; ++instance) {
      const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(instance);
      const auto problem = testing_support::random_problem(seed);
      const auto theta_vec = testing_support::random_theta(problem.n_params(), seed, 0.5);
      const Vector theta = Eigen::Map<const Vector>(theta_vec.data(), problem.n_params());
      const auto objective = random_objective(problem, seed);
      std::mt19937_64 rng(seed);
      const TimeGrid grid(problem.T, 4 + static_cast<int>(rng() % 13));
      for (int order : kTableOrders) {
        const auto scheme = HermiteScheme::of_order(order);
        GradientOptions gopts;
        gopts.integrator = tight();
        const auto efficient =
            compute_gradient(problem, as_span(theta), scheme, grid, objective, gopts);
        gopts.method = AccumulationMethod::naive;
        const auto naive =
            compute_gradient(problem, as_span(theta), scheme, grid, objective, gopts);
        const ScalarFunction J = [&](const Vector& th) {
          return evaluate_objective(problem, as_span(th), scheme, grid, objective, tight()).total;
        };
        const auto fd = best_finite_difference(J, theta, efficient.grad, default_fd_steps(), 1e-9);
        s.worst_fd = std::max(s.worst_fd, fd.relative_error);
        s.worst_naive =
            std::max(s.worst_naive, (efficient.grad - naive.grad).norm() / efficient.grad.norm());
        ++s.checks;
      }
      ++s.instances;
    }
    s.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
  }();
  return sweep;
}

Outcome discrete_gradient_exactness() {
  const auto& s = gradient_sweep();
  return {s.worst_fd <= 1e-6 && s.seconds < 120.0,
          std::to_string(s.instances) + " instances x 6 orders, worst relative error " +
              fmt(s.worst_fd) + " (limit 1e-6), " + fmt(s.seconds) + " s (limit 120)"};
}

Outcome efficient_vs_naive() {
  const auto& s = gradient_sweep();
  return {s.worst_naive <= 1e-12, std::to_string(s.checks) +
                                      " gradients, worst relative difference " +
                                      fmt(s.worst_naive) + " (limit 1e-12)"};
}

ControlProblem spline_problem(int n_basis) {
  SystemSpec sys;
  sys.subsystems = {{"q", 2, 1, 0.0, ghz_to_rad_per_ns(0.2)}};
  const auto ops = build_control_operators(sys, 0);
  ControlProblem p;
  p.drift = build_drift(sys);
  p.controls.add(std::make_shared<BsplineCarrierPulse>(
      11, n_basis, 20.0, std::vector<double>{0.0, ghz_to_rad_per_ns(-0.2)}, true));
  p.channel_ops = {ops.symmetric, ops.antisymmetric};
  p.initial = complex_to_real(ComplexMatrix(ComplexMatrix::Identity(3, 2)));
  p.T = 20.0;
  return p;
}

Outcome matvec_counts() {
  const auto problem = testing_support::random_problem(77);
  const auto theta = testing_support::random_theta(problem.n_params(), 77);
  const auto objective = random_objective(problem, 77);
  const TimeGrid grid(problem.T, 6);
  std::string fwd, adj;
  bool pass = true;
  for (int order : kTableOrders) {
    const int q = order / 2;
    const auto rep =
        compute_gradient(problem, theta, HermiteScheme::of_order(order), grid, objective);
    const double f = rep.stats.forward.matvecs_per_product();
    const double a = rep.stats.adjoint.matvecs_per_product();
    pass = pass && f == q * (q + 1) / 2 && a == (1 << q) - 1;
    fwd += (fwd.empty() ? "" : "/") + fmt(f);
    adj += (adj.empty() ? "" : "/") + fmt(a);
  }
  // Doubling the parameter count leaves accumulation work per step unchanged.
  auto accumulation_per_step = [](int n_basis) {
    const auto p = spline_problem(n_basis);
    const auto theta = random_initial_controls(p.n_params(), 0.05, 5);
    const GateObjective obj(GateTarget::from_gate(cli::named_gate("pauli_x", 2), p.initial), {});
    const TimeGrid grid(p.T, 40);
    const auto rep = compute_gradient(p, as_span(theta), HermiteScheme::of_order(8), grid, obj);
    return static_cast<double>(rep.stats.accumulation.matvecs) / grid.steps();
  };
  const double small = accumulation_per_step(12);
  const double large = accumulation_per_step(24);
  pass = pass && small == large;
  return {pass, "forward " + fwd + ", adjoint " + adj + ", accumulation per step " + fmt(small) +
                    " at N_P = 48 and " + fmt(large) + " at N_P = 96"};
}

Outcome adjoint_identity() {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto problem = testing_support::random_problem(5000 + static_cast<std::uint64_t>(trial));
    const auto theta = testing_support::random_theta(problem.n_params(), trial);
    std::mt19937_64 rng(trial);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const Index d = 2 * problem.dim_complex();
    Vector w(d), lambda(d);
    for (Index i = 0; i < d; ++i) {
      w[i] = u(rng);
      lambda[i] = u(rng);
    }
    const double t = problem.T * (0.5 + 0.5 * u(rng));
    const double dt = 0.05 + 0.2 * std::abs(u(rng));
    for (int order : kTableOrders) {
      const auto scheme = HermiteScheme::of_order(order);
      const auto derivs = problem.derivatives(t, scheme.q() - 1, theta);
      for (Side side : {Side::L, Side::R}) {
        Vector forward(d), transposed(d);
        std::vector<Vector> scaled;
        TransposeWorkspace ws;
        std::uint64_t matvecs = 0;
        apply_RL(scheme, derivs, dt, w, side, forward, scaled, matvecs);
        apply_RL_transpose(scheme, derivs, dt, lambda, side, transposed, ws, matvecs);
        const double scale = forward.norm() * lambda.norm();
        worst = std::max(worst, std::abs(forward.dot(lambda) - w.dot(transposed)) / scale);
      }
    }
  }
  return {worst <= 1e-13, "100 trials x 6 orders x {L, R}, worst relative mismatch " + fmt(worst) +
                              " (limit 1e-13)"};
}

Outcome objective_properties() {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  auto random_matrix = [&](Index rows, Index cols) {
    ComplexMatrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < cols; ++j) m(i, j) = {normal(rng), normal(rng)};
    return m;
  };
  double lowest = 1.0, unitary_gap = 0.0, phase_gap = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + static_cast<Index>(rng() % 7);
    const Index e = 1 + static_cast<Index>(rng() % n);
    const ComplexMatrix gate =
        Eigen::HouseholderQR<ComplexMatrix>(random_matrix(e, e)).householderQ();
    const auto target =
        GateTarget::from_gate(gate, complex_to_real(ComplexMatrix(ComplexMatrix::Identity(n, e))));
    // Half the inputs sit near a rescaled target, where the bound is tight.
    const ComplexMatrix noise = random_matrix(n, e);
    const std::complex<double> scale = std::polar(0.5 + std::abs(normal(rng)), normal(rng));
    const ComplexMatrix general =
        trial % 2 == 0 ? ComplexMatrix((0.2 + std::abs(normal(rng))) * noise)
                       : ComplexMatrix(scale * real_to_complex(target.target) + 1e-3 * noise);
    lowest = std::min(lowest, generalized_infidelity(complex_to_real(general), target));
    const ComplexMatrix unitary =
        ComplexMatrix(Eigen::HouseholderQR<ComplexMatrix>(random_matrix(n, n)).householderQ())
            .leftCols(e);
    const auto U = complex_to_real(unitary);
    unitary_gap = std::max(
        unitary_gap, std::abs(generalized_infidelity(U, target) - trace_infidelity(U, target)));
    const double phase = std::uniform_real_distribution<double>(0.0, 2 * std::numbers::pi)(rng);
    const auto rotated = complex_to_real(ComplexMatrix(std::polar(1.0, phase) * unitary));
    phase_gap =
        std::max(phase_gap, std::abs(trace_fidelity(rotated, target) - trace_fidelity(U, target)));
  }
  return {lowest >= -1e-12 && unitary_gap <= 1e-12 && phase_gap <= 1e-13,
          "min generalized infidelity " + fmt(lowest) + ", generalized vs trace on unitary " +
              fmt(unitary_gap) + ", phase invariance " + fmt(phase_gap)};
}

Outcome unitarity_drift() {
  // Three-level qudit, smooth envelope; norm drift shrinks at the order of the scheme.
  SystemSpec sys;
  sys.subsystems = {{"qudit", 2, 1, 0.0, ghz_to_rad_per_ns(0.2)}};
  const auto ops = build_control_operators(sys, 0);
  ControlProblem p;
  p.drift = build_drift(sys);
  p.controls.add(std::make_shared<BsplineCarrierPulse>(
      9, 10, 50.0, std::vector<double>{0.0, ghz_to_rad_per_ns(-0.2)}, true));
  p.channel_ops = {ops.symmetric, ops.antisymmetric};
  p.initial = complex_to_real(ComplexMatrix(ComplexMatrix::Identity(3, 2)));
  p.T = 50.0;
  const Vector theta = random_initial_controls(p.n_params(), 0.1, 3);
  const std::vector<int> steps{50, 100, 200, 400, 800, 1600};
  std::string detail;
  bool pass = true;
  for (int order : {2, 4, 6, 8}) {
    std::vector<double> drift;
    for (int n : steps) {
      const TimeGrid grid(p.T, n);
      const auto fwd =
          forward_evolve(p, as_span(theta), HermiteScheme::of_order(order), grid, tight());
      drift.push_back(unitarity_l2(fwd.history, grid));
    }
    // Asymptotic rate: last consecutive pair with both values above 1e-12 and the
    // coarser one resolved (below 1e-2).
    std::optional<double> rate;
    for (std::size_t k = 1; k < steps.size(); ++k)
      if (drift[k - 1] < 1e-2 && drift[k] > 1e-12) rate = std::log2(drift[k - 1] / drift[k]);
    const bool ok = rate && std::abs(*rate - order) <= 0.5;
    pass = pass && ok;
    detail += (detail.empty() ? "" : ", ") + std::string("order ") + std::to_string(order) +
              " rate " + (rate ? fmt(*rate) : std::string("n/a"));
  }
  return {pass, detail};
}

Outcome hadamard_design() {
  const fs::path out = scratch("hadamard");
  cli::CommandOptions o;
  o.config_path = config_dir() + "/hadamard.json";
  o.out_dir = out;
  std::ostringstream log;
  const auto start = std::chrono::steady_clock::now();
  const int code = cli::cmd_optimize(o, log);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (code != 0) return {false, "optimize exited with " + std::to_string(code)};
  const auto j = read_json(out / "theta.json");
  const double infidelity = j["objective"]["infidelity"].get<double>();
  const int iterations = j["iterations"].get<int>();
  return {infidelity < 1e-4 && iterations <= 500 && seconds < 300.0,
          "trace infidelity " + fmt(infidelity) + " after " + std::to_string(iterations) +
              " iterations in " + fmt(seconds) + " s"};
}

Outcome reduced_stepsize_speedup() {
  const fs::path out = scratch("stepsize");
  cli::CommandOptions o;
  o.config_path = config_dir() + "/reduced_two_qudit.json";
  o.out_dir = out;
  std::ostringstream log;
  if (const int code = cli::cmd_stepsize_study(o, log); code != 0)
    return {false, "stepsize-study exited with " + std::to_string(code)};
  const auto j = read_json(out / "recommendation.json");
  for (const auto& rec : j["recommendations"]) {
    if (std::abs(rec["target_error"].get<double>() - 1e-5) > 1e-12) continue;
    double best = 0.0;
    int best_order = 0;
    std::string detail;
    for (const auto& [key, entry] : rec["orders"].items()) {
      if (entry.is_null() || !entry.contains("speedup_vs_order_2")) continue;
      const int order = std::stoi(key);
      const double speedup = entry["speedup_vs_order_2"].get<double>();
      detail += "order " + key + " " + fmt(speedup) + "x (" +
                std::to_string(entry["steps"].get<long long>()) + " steps); ";
      if (order >= 4 && speedup > best) {
        best = speedup;
        best_order = order;
      }
    }
    return {best >= 3.0, "at 1e-5: " + detail + "best order " + std::to_string(best_order)};
  }
  return {false, "no recommendation for target 1e-5"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "Rabi state convergence", 10.0, rabi_state_convergence},
      {2, "Rabi gradient convergence", 30.0, rabi_gradient_convergence},
      {3, "discrete gradient exactness", 120.0, discrete_gradient_exactness},
      {4, "matvec counts", 60.0, matvec_counts},
      {5, "efficient vs naive accumulation", 120.0, efficient_vs_naive},
      {6, "adjoint identity", 60.0, adjoint_identity},
      {7, "objective properties", 60.0, objective_properties},
      {8, "unitarity drift order", 120.0, unitarity_drift},
      {9, "Hadamard gate design", 300.0, hadamard_design},
      {10, "reduced two-qudit stepsize speedup", 900.0, reduced_stepsize_speedup},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome result;
    try {
      result = c.run();
    } catch (const std::exception& e) {
      result = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.budget_seconds) {
      result.pass = false;
      result.detail += "; runtime " + fmt(seconds) + " s exceeds " + fmt(c.budget_seconds) + " s";
    }
    if (!result.pass) ++failed;
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (result.pass ? "PASS" : "FAIL")
              << " (" << fmt(seconds) << " s) " << result.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}
