#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hermite/krylov.hpp"
#include "hermite/model.hpp"
#include "hermite/objectives.hpp"
#include "hermite/problem.hpp"

namespace hermite::cli {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; `path` is a JSON pointer or "line L, column C" for syntax errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& message)
      : std::runtime_error("config error at " + (path.empty() ? std::string("/") : path) + ": " +
                           message),
        path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

enum class PulseKind { constant, bspline, bspline_carrier };
enum class OperatorKind { symmetric, antisymmetric };

struct PulseConfig {
  PulseKind kind = PulseKind::bspline_carrier;
  int subsystem = 0;                          ///< index into SystemSpec::subsystems
  OperatorKind op = OperatorKind::symmetric;  ///< constant and bspline pulses
  int degree = 3;
  int n_basis = 10;
  std::vector<double> carrier_freqs;  ///< rad/ns
  bool complex_channels = true;
};

struct GridConfig {
  double T = 0.0;  ///< ns
  std::optional<int> steps;
  std::optional<double> target_error;
  std::optional<std::string> stepsize_study;  ///< stepsize CSV used to resolve target_error
};

struct OptimizerConfig {
  double lower = -0.05;
  double upper = 0.05;
  int max_iterations = 200;
  double max_wall_seconds = std::numeric_limits<double>::infinity();
  double gradient_tolerance = 1e-10;
  double decrease_tolerance = 1e-14;
  double target_objective = 0.0;
  int memory = 10;
  double initial_amplitude = 0.005;
};

struct StudyConfig {
  std::vector<int> orders{2, 4, 6, 8};
  std::vector<int> steps{16, 32, 64, 128, 256};
  int samples = 25;
  double sample_amplitude = 0.05;
  std::vector<double> target_errors{1e-3, 1e-5, 1e-7};
  std::optional<int> reference_steps;
};

struct RabiConfig {
  double omega_abs = 0.05;  ///< rad/ns
  double omega_phase = 0.7853981633974483;
  double periods = 9.5;
  std::vector<int> orders{2, 4, 6, 8, 10, 12};
  std::vector<int> steps{16, 32, 64, 128, 256};
};

struct RunConfig {
  SystemSpec system;
  std::vector<PulseConfig> controls;
  std::string gate_name;  ///< empty when an explicit matrix was given
  std::optional<ComplexMatrix> gate;
  int order = 4;
  GridConfig grid;
  ObjectiveConfig objective;
  std::optional<GuardScheme> guard_scheme;
  OptimizerConfig optimizer;
  StudyConfig study;
  RabiConfig rabi;
  KrylovOptions krylov;
  std::optional<std::vector<double>> theta;  ///< explicit control parameters
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Parses and validates a config. Unknown keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Named gates: hadamard, pauli_x, pauli_y, pauli_z, identity, cnot.
/// CNOT needs four essential states; the slowest-varying qubit is the control.
ComplexMatrix named_gate(const std::string& name, Index essential_dim);

/// Unit vectors on the essential states, one column each.
RealStateMatrix essential_basis(const SystemSpec& system);

/// Problem built from the system, controls and grid duration.
ControlProblem build_problem(const RunConfig& config);

/// Gate objective with the configured kind, guard and regularization.
GateObjective build_objective(const RunConfig& config, const ControlProblem& problem);

/// Explicit parameters if configured, else uniform in +-initial_amplitude from the seed.
Vector initial_parameters(const RunConfig& config, Index n_params);

/// Step count: explicit, or resolved from target_error through a stepsize-study CSV.
int resolve_steps(const RunConfig& config);

}  // namespace hermite::cli
