#include "hermite/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <ostream>

#include "hermite/adjoint.hpp"
#include "hermite/optimize.hpp"
#include "hermite/verify.hpp"

namespace hermite::cli {

namespace {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::ofstream open_output(const CommandOptions& opts, const std::string& name) {
  fs::create_directories(opts.out_dir);
  const fs::path path = opts.out_dir / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << std::setprecision(17);
  return out;
}

void write_json(const CommandOptions& opts, const std::string& name, ojson body) {
  ojson doc;
  doc["schema_version"] = kSchemaVersion;
  for (auto& [k, v] : body.items()) doc[k] = v;
  open_output(opts, name) << doc.dump(2) << '\n';
}

ojson phase_json(const PhaseStats& st, int steps, Index columns) {
  const double per = static_cast<double>(steps) * static_cast<double>(columns);
  return {{"matvecs", st.matvecs},
          {"matvecs_per_step_per_column", st.matvecs / per},
          {"explicit_products", st.explicit_products},
          {"matvecs_per_explicit_product", st.matvecs_per_product()},
          {"krylov_iterations", st.krylov_iterations},
          {"solves", st.solves},
          {"rounding_floor_solves", st.rounding_floor_solves},
          {"wall_seconds", st.wall_seconds}};
}

ojson value_json(const ObjectiveValue& v) {
  return {{"total", v.total},
          {"infidelity", v.infidelity},
          {"guard", v.guard},
          {"regularization", v.regularization}};
}

IntegratorOptions integrator_options(const RunConfig& c) {
  IntegratorOptions o;
  o.krylov = c.krylov;
  o.workers = c.workers;
  return o;
}

void report_warnings(const ControlProblem& problem, const HermiteScheme& scheme,
                     std::ostream& log) {
  for (const auto& w : smoothness_warnings(problem, scheme)) log << "warning: " << w << '\n';
}

std::vector<Vector> study_samples(const RunConfig& c, Index n_params) {
  std::vector<Vector> samples;
  if (c.study.samples == 1 && c.theta) {
    samples.push_back(initial_parameters(c, n_params));
    return samples;
  }
  for (int s = 0; s < c.study.samples; ++s)
    samples.push_back(random_initial_controls(n_params, c.study.sample_amplitude,
                                              c.seed + static_cast<std::uint64_t>(s)));
  return samples;
}

}  // namespace

RunConfig resolve_config(const CommandOptions& options) {
  if (!options.config_path) throw ConfigError("", "this command needs --config");
  RunConfig c = load_config(*options.config_path);
  if (options.workers) {
    if (*options.workers < 1) throw ConfigError("--workers", "must be >= 1");
    c.workers = *options.workers;
  }
  if (options.seed) c.seed = *options.seed;
  if (options.order) {
    try {
      (void)HermiteScheme::of_order(*options.order);
    } catch (const std::exception& e) {
      throw ConfigError("--order", e.what());
    }
    c.order = *options.order;
  }
  return c;
}

int cmd_simulate(const CommandOptions& options, std::ostream& log) {
  const RunConfig c = resolve_config(options);
  const ControlProblem problem = build_problem(c);
  const HermiteScheme scheme = HermiteScheme::of_order(c.order);
  const TimeGrid grid(c.grid.T, resolve_steps(c));
  const Vector theta = initial_parameters(c, problem.n_params());
  report_warnings(problem, scheme, log);
  const ForwardResult fwd =
      forward_evolve(problem, as_span(theta), scheme, grid, integrator_options(c));
  const StateHistory& h = fwd.history;
  const Index n = problem.dim_complex();
  const Index e = problem.n_columns();

  {
    auto out = open_output(options, "populations.csv");
    out << "step,time_ns,column";
    for (Index i = 0; i < n; ++i) out << ",p_" << i;
    out << '\n';
    for (int k = 0; k <= grid.steps(); ++k)
      for (Index col = 0; col < e; ++col) {
        const auto w = h.snapshot(col, k);
        out << k << ',' << grid.time(k) << ',' << col;
        for (Index i = 0; i < n; ++i) out << ',' << w[i] * w[i] + w[n + i] * w[n + i];
        out << '\n';
      }
  }
  {
    auto out = open_output(options, "norms.csv");
    out << "step,time_ns,scaled_norm\n";
    for (int k = 0; k <= grid.steps(); ++k)
      out << k << ',' << grid.time(k) << ',' << std::sqrt(h.at(k).data().squaredNorm() / e) << '\n';
  }
  const RealStateMatrix final_state = h.final_state();
  {
    auto out = open_output(options, "final_state.csv");
    out << "column,index,re,im\n";
    for (Index col = 0; col < e; ++col)
      for (Index i = 0; i < n; ++i)
        out << col << ',' << i << ',' << final_state.data()(i, col) << ','
            << final_state.data()(n + i, col) << '\n';
  }
  const GateObjective objective = build_objective(c, problem);
  const ObjectiveValue value = objective.evaluate(h, grid, as_span(theta));
  const double drift = unitarity_l2(h, grid);
  write_json(options, "summary.json",
             {{"command", "simulate"},
              {"order", c.order},
              {"steps", grid.steps()},
              {"T_ns", grid.T()},
              {"seed", c.seed},
              {"workers", c.workers},
              {"objective", value_json(value)},
              {"unitarity_l2", drift},
              {"forward", phase_json(fwd.stats.forward, grid.steps(), e)}});
  log << "simulate: order " << c.order << ", " << grid.steps() << " steps, infidelity "
      << value.infidelity << ", unitarity drift (L2) " << drift << '\n';
  return 0;
}

int cmd_gradient(const CommandOptions& options, std::ostream& log) {
  const RunConfig c = resolve_config(options);
  const ControlProblem problem = build_problem(c);
  const HermiteScheme scheme = HermiteScheme::of_order(c.order);
  const TimeGrid grid(c.grid.T, resolve_steps(c));
  const Vector theta = initial_parameters(c, problem.n_params());
  const GateObjective objective = build_objective(c, problem);
  report_warnings(problem, scheme, log);
  GradientOptions gopts;
  gopts.integrator = integrator_options(c);
  const GradientReport rep =
      compute_gradient(problem, as_span(theta), scheme, grid, objective, gopts);

  std::optional<FiniteDifferenceMatch> fd;
  if (options.check) {
    const ScalarFunction J = [&](const Vector& th) {
      return evaluate_objective(problem, as_span(th), scheme, grid, objective, gopts.integrator)
          .total;
    };
    fd = best_finite_difference(J, theta, rep.grad, default_fd_steps(), 1e-9);
  }
  {
    auto out = open_output(options, "gradient.csv");
    out << "index,gradient";
    if (fd) out << ",finite_difference,abs_difference";
    out << '\n';
    for (Index k = 0; k < rep.grad.size(); ++k) {
      out << k << ',' << rep.grad[k];
      if (fd) out << ',' << fd->gradient[k] << ',' << std::abs(fd->gradient[k] - rep.grad[k]);
      out << '\n';
    }
  }
  const Index e = problem.n_columns();
  ojson body = {{"command", "gradient"},
                {"order", c.order},
                {"steps", grid.steps()},
                {"n_params", problem.n_params()},
                {"seed", c.seed},
                {"workers", c.workers},
                {"objective", value_json(rep.value)},
                {"gradient_norm", rep.grad.norm()},
                {"per_step_matvecs",
                 {{"forward", rep.stats.forward.matvecs_per_product()},
                  {"adjoint", rep.stats.adjoint.matvecs_per_product()},
                  {"accumulation", static_cast<double>(rep.stats.accumulation.matvecs) /
                                       (static_cast<double>(grid.steps()) * e)}}},
                {"phases",
                 {{"forward", phase_json(rep.stats.forward, grid.steps(), e)},
                  {"adjoint", phase_json(rep.stats.adjoint, grid.steps(), e)},
                  {"accumulation", phase_json(rep.stats.accumulation, grid.steps(), e)}}}};
  int code = 0;
  if (fd) {
    const bool pass = fd->relative_error <= 1e-6;
    body["check"] = {{"finite_difference_step", fd->step},
                     {"relative_error", fd->relative_error},
                     {"tolerance", 1e-6},
                     {"pass", pass}};
    log << "gradient check: relative error " << fd->relative_error << " at h = " << fd->step
        << (pass ? " (pass)" : " (FAIL)") << '\n';
    if (!pass) code = 3;
  }
  write_json(options, "instrumentation.json", body);
  log << "gradient: " << problem.n_params() << " parameters, objective " << rep.value.total
      << ", |grad| " << rep.grad.norm() << '\n';
  return code;
}

int cmd_convergence(const CommandOptions& options, std::ostream& log) {
  const RunConfig c = resolve_config(options);
  const ControlProblem problem = build_problem(c);
  const Vector theta = initial_parameters(c, problem.n_params());
  const IntegratorOptions iopts = integrator_options(c);
  const int finest = c.study.steps.back();
  const int ref_quarter = c.study.reference_steps.value_or(4 * finest) / 4;
  const RealStateMatrix reference =
      fine_grid_reference(problem, as_span(theta), ref_quarter, iopts);
  IntegratorOptions serial = iopts;
  serial.workers = 1;
  const auto tables = convergence_study(
      c.study.orders, c.study.steps,
      [&](int order, int steps) {
        const ForwardResult fwd =
            forward_evolve(problem, as_span(theta), HermiteScheme::of_order(order),
                           TimeGrid(problem.T, steps), serial);
        return relative_frobenius_error(fwd.history.final_state(), reference);
      },
      c.workers);
  {
    auto out = open_output(options, "convergence.csv");
    write_convergence_csv(out, tables);
  }

  ojson recs = ojson::array();
  for (double target : c.study.target_errors) {
    ojson per_order = ojson::object();
    for (const auto& t : tables) {
      std::vector<int> steps;
      std::vector<double> errs;
      for (const auto& r : t.rows) {
        steps.push_back(r.steps);
        errs.push_back(r.error);
      }
      const auto rec = recommend_steps(steps, errs, target);
      per_order[std::to_string(t.order)] =
          rec ? ojson(static_cast<long long>(std::ceil(*rec - 1e-9))) : ojson(nullptr);
    }
    recs.push_back({{"target_error", target}, {"recommended_steps", per_order}});
  }
  write_json(
      options, "recommendation.json",
      {{"command", "convergence"},
       {"reference", {{"order", "highest supported, at most 12"}, {"steps", 4 * ref_quarter}}},
       {"recommendations", recs}});
  log << "convergence: " << tables.size() << " orders x " << c.study.steps.size()
      << " step counts written\n";
  return 0;
}

int cmd_stepsize_study(const CommandOptions& options, std::ostream& log) {
  const RunConfig c = resolve_config(options);
  const ControlProblem problem = build_problem(c);
  const GateObjective objective = build_objective(c, problem);
  const std::vector<Vector> samples = study_samples(c, problem.n_params());
  GradientOptions gopts;
  gopts.integrator = integrator_options(c);
  const auto rows = stepsize_study(problem, objective, samples, c.study.orders, c.study.steps,
                                   gopts, c.study.reference_steps);
  {
    auto out = open_output(options, "stepsize.csv");
    write_stepsize_csv(out, rows);
  }

  std::map<int, std::vector<const StepsizeSample*>> by_order;
  double worst_spread = 0.0;
  for (const auto& r : rows) {
    by_order[r.order].push_back(&r);
    if (r.mean_error > 0.0) worst_spread = std::max(worst_spread, r.std_error / r.mean_error);
  }
  ojson recs = ojson::array();
  for (double target : c.study.target_errors) {
    ojson per_order = ojson::object();
    std::optional<double> baseline;
    std::map<int, double> predicted;
    for (const auto& [order, list] : by_order) {
      std::vector<int> steps;
      std::vector<double> errs, secs;
      for (const auto* r : list) {
        steps.push_back(r->steps);
        errs.push_back(r->mean_error);
        secs.push_back(std::max(r->mean_seconds, 1e-9));
      }
      const auto rec = recommend_steps(steps, errs, target);
      if (!rec) {
        per_order[std::to_string(order)] = nullptr;
        continue;
      }
      predicted[order] = interpolate_log_log(steps, secs, *rec);
      if (order == 2) baseline = predicted[order];
      per_order[std::to_string(order)] = {{"steps", static_cast<long long>(std::ceil(*rec - 1e-9))},
                                          {"predicted_seconds", predicted[order]}};
    }
    if (baseline)
      for (const auto& [order, sec] : predicted)
        per_order[std::to_string(order)]["speedup_vs_order_2"] = *baseline / sec;
    recs.push_back({{"target_error", target}, {"orders", per_order}});
  }
  write_json(options, "recommendation.json",
             {{"command", "stepsize-study"},
              {"samples", samples.size()},
              {"seed", c.seed},
              {"max_std_over_mean_error", worst_spread},
              {"recommendations", recs}});
  log << "stepsize-study: " << rows.size() << " (order, steps) points over " << samples.size()
      << " samples; max std/mean error " << worst_spread << '\n';
  return 0;
}

int cmd_optimize(const CommandOptions& options, std::ostream& log) {
  const RunConfig c = resolve_config(options);
  const ControlProblem problem = build_problem(c);
  const HermiteScheme scheme = HermiteScheme::of_order(c.order);
  const TimeGrid grid(c.grid.T, resolve_steps(c));
  const GateObjective objective = build_objective(c, problem);
  const Index np = problem.n_params();
  const Vector theta0 = initial_parameters(c, np);
  report_warnings(problem, scheme, log);

  OptimizeOptions oo =
      OptimizeOptions::with_uniform_bounds(np, c.optimizer.lower, c.optimizer.upper);
  oo.max_iterations = c.optimizer.max_iterations;
  oo.max_wall_seconds = c.optimizer.max_wall_seconds;
  oo.gradient_tolerance = c.optimizer.gradient_tolerance;
  oo.decrease_tolerance = c.optimizer.decrease_tolerance;
  oo.target_objective = c.optimizer.target_objective;
  oo.memory = c.optimizer.memory;
  GradientOptions gopts;
  gopts.integrator = integrator_options(c);

  OptimizeResult res;
  try {
    res = optimize(problem, theta0, objective, scheme, grid, oo, gopts);
  } catch (const OptimizationAborted& e) {
    {
      auto out = open_output(options, "trace.csv");
      e.trace().write_csv(out);
    }
    log << "optimize aborted: " << e.what() << '\n';
    return 4;
  }
  {
    auto out = open_output(options, "trace.csv");
    res.trace.write_csv(out);
  }
  write_json(options, "theta.json",
             {{"command", "optimize"},
              {"order", c.order},
              {"steps", grid.steps()},
              {"seed", c.seed},
              {"iterations", res.trace.records.back().iteration},
              {"stop_reason", to_string(res.trace.stop_reason)},
              {"objective", value_json(res.value)},
              {"theta", std::vector<double>(res.theta.data(), res.theta.data() + np)}});
  {
    auto out = open_output(options, "pulses.csv");
    out << "time_ns";
    for (int ch = 0; ch < problem.controls.n_channels(); ++ch) out << ",channel_" << ch;
    out << '\n';
    for (int k = 0; k <= grid.steps(); ++k) {
      const Matrix v = problem.controls.eval_derivatives(grid.time(k), 0, as_span(res.theta));
      out << grid.time(k);
      for (int ch = 0; ch < v.rows(); ++ch) out << ',' << v(ch, 0);
      out << '\n';
    }
  }
  log << "optimize: " << res.trace.records.back().iteration << " iterations, objective "
      << res.value.total << ", infidelity " << res.value.infidelity << " ("
      << to_string(res.trace.stop_reason) << ")\n";
  return 0;
}

int cmd_rabi_verify(const CommandOptions& options, std::ostream& log) {
  RabiConfig rc;
  if (options.config_path) rc = resolve_config(options).rabi;
  const RabiSpec spec{std::polar(rc.omega_abs, rc.omega_phase),
                      rc.periods * std::numbers::pi / rc.omega_abs};
  const ComplexMatrix hadamard = named_gate("hadamard", 2);
  const int workers = options.workers.value_or(1);
  const auto state = convergence_study(
      rc.orders, rc.steps, [&](int o, int n) { return rabi_state_error(spec, o, n); }, workers);
  const auto grad = convergence_study(
      rc.orders, rc.steps, [&](int o, int n) { return rabi_gradient_error(spec, hadamard, o, n); },
      workers);
  {
    auto out = open_output(options, "rabi_state.csv");
    write_convergence_csv(out, state);
  }
  {
    auto out = open_output(options, "rabi_gradient.csv");
    write_convergence_csv(out, grad);
  }

  const Vector exact = rabi_infidelity_gradient(spec, hadamard);
  write_json(options, "rabi_summary.json",
             {{"command", "rabi-verify"},
              {"omega", {spec.omega.real(), spec.omega.imag()}},
              {"T_ns", spec.T},
              {"analytic_infidelity", rabi_infidelity(spec, hadamard)},
              {"analytic_gradient", {exact[0], exact[1]}},
              {"gradient_error_metric", "relative 2-norm"}});
  log << "rabi-verify: wrote rabi_state.csv and rabi_gradient.csv (" << rc.orders.size()
      << " orders)\n";
  return 0;
}

}  // namespace hermite::cli
