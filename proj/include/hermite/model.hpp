#pragma once

#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "hermite/state.hpp"

namespace hermite {

/// Angular frequency in rad/ns for a frequency given in GHz.
constexpr double ghz_to_rad_per_ns(double ghz) { return 2.0 * std::numbers::pi * ghz; }

struct SubsystemSpec {
  std::string name;
  int essential_levels = 2;
  int guard_levels = 0;
  double transition_freq = 0.0;  ///< rad/ns
  double self_kerr = 0.0;        ///< rad/ns

  int levels() const { return essential_levels + guard_levels; }
};

struct CrossKerr {
  int p = 1;  ///< must exceed q
  int q = 0;
  double value = 0.0;  ///< rad/ns
};

enum class Frame { laboratory, rotating };

/// Subsystem 0 occupies the fastest-varying basis index.
struct SystemSpec {
  std::vector<SubsystemSpec> subsystems;
  std::vector<CrossKerr> cross_kerr;
  Frame frame = Frame::rotating;

  void validate() const;
  Index dim() const;
  Index essential_dim() const;
  Index guard_count() const { return dim() - essential_dim(); }
  Index stride(int q) const;
  /// Per-subsystem levels of a basis index, subsystem 0 first.
  std::vector<int> levels_of(Index index) const;
  /// Basis index from per-subsystem levels, subsystem 0 first.
  Index index_of(const std::vector<int>& levels) const;
  /// Basis index from a ket label written slowest subsystem first, e.g. |i_2 i_1 i_0>.
  Index index_of_label(const std::vector<int>& label) const;
  bool is_essential(Index index) const;
  /// Essential basis indices in increasing order; position k is essential state k.
  std::vector<Index> essential_indices() const;
};

Matrix lowering_operator(int n);
SparseMatrix embed_subsystem(const SystemSpec& sys, int q, const Matrix& op);
StructuredOperator build_drift(const SystemSpec& sys);

struct ControlOperatorPair {
  StructuredOperator symmetric;      ///< H = a + a^dagger
  StructuredOperator antisymmetric;  ///< H = i (a - a^dagger)
};
ControlOperatorPair build_control_operators(const SystemSpec& sys, int q);

struct UniformGuard {
  double weight = 1.0;
};
struct ExponentialGuard {
  double base = 0.001;
};
using GuardScheme = std::variant<UniformGuard, ExponentialGuard>;

/// Diagonal of the guard-penalty weight matrix; zero on essential states.
struct GuardWeights {
  Vector diagonal;
};
GuardWeights build_guard_weights(const SystemSpec& sys, const GuardScheme& scheme);

}  // namespace hermite
