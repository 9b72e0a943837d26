#pragma once

#include <span>
#include <vector>

#include "hermite/controls.hpp"
#include "hermite/state.hpp"

namespace hermite {

/// Everything the propagator needs: dA/dt structure, pulses and initial columns.
struct ControlProblem {
  StructuredOperator drift;
  /// One operator per control channel, in ensemble channel order.
  std::vector<StructuredOperator> channel_ops;
  ControlEnsemble controls;
  RealStateMatrix initial;
  double T = 0.0;

  Index dim_complex() const { return drift.dim_complex(); }
  Index n_columns() const { return initial.essential_dim(); }
  int n_params() const { return controls.n_params(); }
  /// Throws on inconsistent dimensions or pulses shorter than T.
  void validate() const;

  OperatorDerivatives derivatives(double t, int max_order, std::span<const double> theta) const {
    return assemble_A_derivatives(drift, channel_ops, controls, t, max_order, theta);
  }
};

}  // namespace hermite
