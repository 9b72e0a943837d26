#include "hermite/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "hermite/optimize.hpp"
#include "hermite/verify.hpp"

namespace hermite::cli {

namespace {

using json = nlohmann::json;

/// Typed view of one JSON object that remembers which keys were read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_ + "/" + key; }
  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError(key_path(key), "required key is missing");
    return j_.at(key);
  }

  ObjectReader object(const std::string& key) { return {raw(key), key_path(key)}; }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError(key_path(key), "expected a number");
    return v.get<double>();
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }
  int integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
    return v.get<int>();
  }
  int integer(const std::string& key, int fallback) { return has(key) ? integer(key) : fallback; }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_unsigned())
      throw ConfigError(key_path(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(key_path(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(key_path(key), "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    return has(key) ? string(key) : fallback;
  }
  template <class T>
  std::vector<T> list(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError(key_path(key), "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
      if (!ok)
        throw ConfigError(key_path(key) + "/" + std::to_string(i),
                          std::is_integral_v<T> ? "expected an integer" : "expected a number");
      out.push_back(v[i].get<T>());
    }
    return out;
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError(key_path(k), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

template <class F>
void at_path(const std::string& path, F&& f) {
  try {
    f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path, e.what());
  }
}

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

SystemSpec parse_system(ObjectReader r) {
  SystemSpec sys;
  const std::string frame = r.string("frame", "rotating");
  if (frame == "rotating")
    sys.frame = Frame::rotating;
  else if (frame == "laboratory")
    sys.frame = Frame::laboratory;
  else
    throw ConfigError(r.key_path("frame"), "expected \"rotating\" or \"laboratory\"");

  const json& subs = r.raw("subsystems");
  require(subs.is_array() && !subs.empty(), r.key_path("subsystems"), "expected a non-empty array");
  std::map<std::string, int> by_name;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    const std::string p = r.key_path("subsystems") + "/" + std::to_string(i);
    ObjectReader s(subs[i], p);
    SubsystemSpec spec;
    spec.name = s.string("name");
    spec.essential_levels = s.integer("essential_levels");
    spec.guard_levels = s.integer("guard_levels", 0);
    spec.transition_freq = ghz_to_rad_per_ns(s.number("transition_freq_ghz", 0.0));
    spec.self_kerr = ghz_to_rad_per_ns(s.number("self_kerr_ghz", 0.0));
    s.finish();
    require(spec.essential_levels >= 1, p + "/essential_levels", "must be >= 1");
    require(spec.guard_levels >= 0, p + "/guard_levels", "must be >= 0");
    require(!by_name.count(spec.name), p + "/name", "duplicate subsystem name");
    by_name[spec.name] = static_cast<int>(i);
    sys.subsystems.push_back(spec);
  }

  if (r.has("cross_kerr")) {
    const json& cks = r.raw("cross_kerr");
    require(cks.is_array(), r.key_path("cross_kerr"), "expected an array");
    for (std::size_t i = 0; i < cks.size(); ++i) {
      const std::string p = r.key_path("cross_kerr") + "/" + std::to_string(i);
      ObjectReader c(cks[i], p);
      const json& pair = c.raw("between");
      require(pair.is_array() && pair.size() == 2 && pair[0].is_string() && pair[1].is_string(),
              p + "/between", "expected two subsystem names");
      int idx[2];
      for (int k = 0; k < 2; ++k) {
        const auto it = by_name.find(pair[k].get<std::string>());
        require(it != by_name.end(), p + "/between/" + std::to_string(k), "unknown subsystem");
        idx[k] = it->second;
      }
      require(idx[0] != idx[1], p + "/between", "subsystems must differ");
      sys.cross_kerr.push_back({std::max(idx[0], idx[1]), std::min(idx[0], idx[1]),
                                ghz_to_rad_per_ns(c.number("value_ghz"))});
      c.finish();
    }
  }
  r.finish();
  at_path("/system", [&] { sys.validate(); });
  return sys;
}

int subsystem_index(const SystemSpec& sys, const std::string& name, const std::string& path) {
  for (std::size_t i = 0; i < sys.subsystems.size(); ++i)
    if (sys.subsystems[i].name == name) return static_cast<int>(i);
  throw ConfigError(path, "unknown subsystem '" + name + "'");
}

PulseConfig parse_pulse(ObjectReader r, const SystemSpec& sys) {
  PulseConfig p;
  const std::string type = r.string("type");
  p.subsystem = subsystem_index(sys, r.string("subsystem"), r.key_path("subsystem"));
  if (type == "constant" || type == "bspline") {
    p.kind = type == "constant" ? PulseKind::constant : PulseKind::bspline;
    const std::string op = r.string("operator");
    if (op == "symmetric")
      p.op = OperatorKind::symmetric;
    else if (op == "antisymmetric")
      p.op = OperatorKind::antisymmetric;
    else
      throw ConfigError(r.key_path("operator"), "expected \"symmetric\" or \"antisymmetric\"");
  } else if (type == "bspline_carrier") {
    p.kind = PulseKind::bspline_carrier;
    for (double f : r.list<double>("carrier_freqs_ghz"))
      p.carrier_freqs.push_back(ghz_to_rad_per_ns(f));
    require(!p.carrier_freqs.empty(), r.key_path("carrier_freqs_ghz"), "need at least one carrier");
    const std::string ch = r.string("channels", "complex");
    require(ch == "complex" || ch == "real", r.key_path("channels"),
            "expected \"complex\" or \"real\"");
    p.complex_channels = ch == "complex";
  } else {
    throw ConfigError(r.key_path("type"),
                      "expected \"constant\", \"bspline\" or \"bspline_carrier\"");
  }
  if (p.kind != PulseKind::constant) {
    p.degree = r.integer("degree");
    p.n_basis = r.integer("n_basis");
    require(p.degree >= 1, r.key_path("degree"), "must be >= 1");
    require(p.n_basis > p.degree, r.key_path("n_basis"), "must exceed the degree");
  }
  r.finish();
  return p;
}

ComplexMatrix parse_matrix(ObjectReader r) {
  const json& re = r.raw("re");
  require(re.is_array() && !re.empty(), r.key_path("re"), "expected a square array of rows");
  const Index n = static_cast<Index>(re.size());
  ComplexMatrix m = ComplexMatrix::Zero(n, n);
  auto fill = [&](const json& part, const std::string& path, bool imag) {
    require(part.is_array() && static_cast<Index>(part.size()) == n, path,
            "expected " + std::to_string(n) + " rows");
    for (Index i = 0; i < n; ++i) {
      const json& row = part[i];
      require(row.is_array() && static_cast<Index>(row.size()) == n, path + "/" + std::to_string(i),
              "expected " + std::to_string(n) + " entries");
      for (Index k = 0; k < n; ++k) {
        require(row[k].is_number(), path + "/" + std::to_string(i) + "/" + std::to_string(k),
                "expected a number");
        if (imag)
          m(i, k) += std::complex<double>(0.0, row[k].get<double>());
        else
          m(i, k) += row[k].get<double>();
      }
    }
  };
  fill(re, r.key_path("re"), false);
  if (r.has("im")) fill(r.raw("im"), r.key_path("im"), true);
  r.finish();
  return m;
}

void parse_grid(ObjectReader r, GridConfig& g) {
  g.T = r.number("T_ns");
  require(g.T > 0.0 && std::isfinite(g.T), r.key_path("T_ns"), "must be positive");
  if (r.has("steps")) {
    g.steps = r.integer("steps");
    require(*g.steps >= 1, r.key_path("steps"), "must be >= 1");
  }
  if (r.has("target_error")) {
    g.target_error = r.number("target_error");
    require(*g.target_error > 0.0, r.key_path("target_error"), "must be positive");
  }
  if (r.has("stepsize_study")) g.stepsize_study = r.string("stepsize_study");
  require(g.steps || g.target_error, r.key_path("steps"),
          "give either steps or target_error with stepsize_study");
  require(!(g.steps && g.target_error), r.key_path("target_error"),
          "steps and target_error are mutually exclusive");
  require(!g.target_error || g.stepsize_study, r.key_path("stepsize_study"),
          "target_error needs a stepsize_study CSV");
  r.finish();
}

void parse_objective(ObjectReader r, RunConfig& c) {
  const std::string kind = r.string("kind", "trace");
  if (kind == "trace")
    c.objective.kind = InfidelityKind::trace;
  else if (kind == "generalized")
    c.objective.kind = InfidelityKind::generalized;
  else
    throw ConfigError(r.key_path("kind"), "expected \"trace\" or \"generalized\"");
  if (r.has("guard")) {
    ObjectReader g = r.object("guard");
    const std::string type = g.string("type");
    if (type == "uniform") {
      c.guard_scheme = UniformGuard{g.number("weight", 1.0)};
    } else if (type == "exponential") {
      c.guard_scheme = ExponentialGuard{g.number("base", 0.001)};
    } else {
      throw ConfigError(g.key_path("type"), "expected \"uniform\" or \"exponential\"");
    }
    g.finish();
  }
  c.objective.guard_coefficient = r.number("guard_coefficient", 1.0);
  c.objective.regularization = r.number("regularization", 0.0);
  at_path(r.key_path("guard_coefficient"), [&] { c.objective.validate(); });
  r.finish();
}

void parse_optimizer(ObjectReader r, OptimizerConfig& o) {
  if (r.has("bounds")) {
    const auto b = r.list<double>("bounds");
    require(b.size() == 2 && b[0] <= b[1], r.key_path("bounds"), "expected [lower, upper]");
    o.lower = b[0];
    o.upper = b[1];
  }
  o.max_iterations = r.integer("max_iterations", o.max_iterations);
  o.max_wall_seconds = r.number("max_wall_seconds", o.max_wall_seconds);
  o.gradient_tolerance = r.number("gradient_tolerance", o.gradient_tolerance);
  o.decrease_tolerance = r.number("decrease_tolerance", o.decrease_tolerance);
  o.target_objective = r.number("target_objective", o.target_objective);
  o.memory = r.integer("memory", o.memory);
  o.initial_amplitude = r.number("initial_amplitude", o.initial_amplitude);
  require(o.max_iterations >= 0, r.key_path("max_iterations"), "must be >= 0");
  require(o.max_wall_seconds > 0.0, r.key_path("max_wall_seconds"), "must be positive");
  require(o.gradient_tolerance > 0.0, r.key_path("gradient_tolerance"), "must be positive");
  require(o.decrease_tolerance > 0.0, r.key_path("decrease_tolerance"), "must be positive");
  require(o.memory >= 1, r.key_path("memory"), "must be >= 1");
  require(o.initial_amplitude >= 0.0, r.key_path("initial_amplitude"), "must be >= 0");
  r.finish();
}

void check_steps(const std::vector<int>& steps, const std::string& path) {
  require(!steps.empty(), path, "need at least one step count");
  for (std::size_t i = 0; i < steps.size(); ++i) {
    require(steps[i] >= 1, path + "/" + std::to_string(i), "must be >= 1");
    if (i > 0)
      require(steps[i] > steps[i - 1], path + "/" + std::to_string(i),
              "step counts must increase strictly");
  }
}

void check_orders(const std::vector<int>& orders, const std::string& path) {
  require(!orders.empty(), path, "need at least one order");
  for (std::size_t i = 0; i < orders.size(); ++i)
    at_path(path + "/" + std::to_string(i), [&] { (void)HermiteScheme::of_order(orders[i]); });
}

void parse_study(ObjectReader r, StudyConfig& s) {
  if (r.has("orders")) s.orders = r.list<int>("orders");
  if (r.has("steps")) s.steps = r.list<int>("steps");
  s.samples = r.integer("samples", s.samples);
  s.sample_amplitude = r.number("sample_amplitude", s.sample_amplitude);
  if (r.has("target_errors")) s.target_errors = r.list<double>("target_errors");
  if (r.has("reference_steps")) s.reference_steps = r.integer("reference_steps");
  check_orders(s.orders, r.key_path("orders"));
  check_steps(s.steps, r.key_path("steps"));
  require(s.samples >= 1, r.key_path("samples"), "must be >= 1");
  require(s.sample_amplitude >= 0.0, r.key_path("sample_amplitude"), "must be >= 0");
  for (double t : s.target_errors)
    require(t > 0.0, r.key_path("target_errors"), "must be positive");
  require(!s.reference_steps || *s.reference_steps >= 1, r.key_path("reference_steps"),
          "must be >= 1");
  r.finish();
}

void parse_rabi(ObjectReader r, RabiConfig& q) {
  q.omega_abs = r.number("omega_abs", q.omega_abs);
  q.omega_phase = r.number("omega_phase", q.omega_phase);
  q.periods = r.number("periods", q.periods);
  if (r.has("orders")) q.orders = r.list<int>("orders");
  if (r.has("steps")) q.steps = r.list<int>("steps");
  require(q.omega_abs > 0.0, r.key_path("omega_abs"), "must be positive");
  require(q.periods > 0.0, r.key_path("periods"), "must be positive");
  check_orders(q.orders, r.key_path("orders"));
  check_steps(q.steps, r.key_path("steps"));
  r.finish();
}

void parse_krylov(ObjectReader r, KrylovOptions& k) {
  k.abs_tol = r.number("abs_tol", k.abs_tol);
  k.restart = r.integer("restart", k.restart);
  k.max_iterations = r.integer("max_iterations", k.max_iterations);
  require(k.abs_tol > 0.0, r.key_path("abs_tol"), "must be positive");
  require(k.restart >= 1, r.key_path("restart"), "must be >= 1");
  require(k.max_iterations >= 1, r.key_path("max_iterations"), "must be >= 1");
  r.finish();
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col),
                      "invalid JSON");
  }
  ObjectReader r(root, "");
  RunConfig c;
  const int version = r.integer("schema_version");
  require(version == kSchemaVersion, "/schema_version",
          "unsupported version " + std::to_string(version) + " (expected " +
              std::to_string(kSchemaVersion) + ")");

  c.system = parse_system(r.object("system"));

  if (r.has("controls")) {
    const json& ctl = r.raw("controls");
    require(ctl.is_array(), "/controls", "expected an array");
    for (std::size_t i = 0; i < ctl.size(); ++i)
      c.controls.push_back(
          parse_pulse(ObjectReader(ctl[i], "/controls/" + std::to_string(i)), c.system));
  }

  const Index e = c.system.essential_dim();
  if (r.has("gate")) {
    ObjectReader g = r.object("gate");
    if (g.has("name")) {
      c.gate_name = g.string("name");
      at_path("/gate/name", [&] { c.gate = named_gate(c.gate_name, e); });
    } else {
      c.gate = parse_matrix(g.object("matrix"));
      require(c.gate->rows() == e, "/gate/matrix",
              "gate must be " + std::to_string(e) + "x" + std::to_string(e));
    }
    g.finish();
  }

  if (r.has("scheme")) {
    ObjectReader s = r.object("scheme");
    c.order = s.integer("order");
    s.finish();
  }
  at_path("/scheme/order", [&] { (void)HermiteScheme::of_order(c.order); });

  parse_grid(r.object("grid"), c.grid);
  if (r.has("objective")) parse_objective(r.object("objective"), c);
  if (r.has("optimizer")) parse_optimizer(r.object("optimizer"), c.optimizer);
  if (r.has("study")) parse_study(r.object("study"), c.study);
  if (r.has("rabi")) parse_rabi(r.object("rabi"), c.rabi);
  if (r.has("krylov")) parse_krylov(r.object("krylov"), c.krylov);
  if (r.has("theta")) c.theta = r.list<double>("theta");
  c.seed = r.unsigned_integer("seed", 0);
  c.workers = r.integer("workers", 1);
  require(c.workers >= 1, "/workers", "must be >= 1");
  r.finish();

  if (c.theta) {
    int n = 0;
    for (const auto& p : c.controls)
      n += p.kind == PulseKind::constant ? 1
           : p.kind == PulseKind::bspline
               ? p.n_basis
               : 2 * static_cast<int>(p.carrier_freqs.size()) * p.n_basis;
    require(static_cast<int>(c.theta->size()) == n, "/theta",
            "expected " + std::to_string(n) + " parameters");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

ComplexMatrix named_gate(const std::string& name, Index essential_dim) {
  using cd = std::complex<double>;
  auto need = [&](Index n) {
    if (essential_dim != n)
      throw std::invalid_argument("gate '" + name + "' needs " + std::to_string(n) +
                                  " essential states, the system has " +
                                  std::to_string(essential_dim));
  };
  ComplexMatrix g;
  if (name == "identity") return ComplexMatrix::Identity(essential_dim, essential_dim);
  if (name == "hadamard") {
    need(2);
    g.resize(2, 2);
    g << 1.0, 1.0, 1.0, -1.0;
    return g / std::sqrt(2.0);
  }
  if (name == "pauli_x") {
    need(2);
    g.resize(2, 2);
    g << 0.0, 1.0, 1.0, 0.0;
    return g;
  }
  if (name == "pauli_y") {
    need(2);
    g.resize(2, 2);
    g << 0.0, cd(0.0, -1.0), cd(0.0, 1.0), 0.0;
    return g;
  }
  if (name == "pauli_z") {
    need(2);
    g.resize(2, 2);
    g << 1.0, 0.0, 0.0, -1.0;
    return g;
  }
  if (name == "cnot") {
    need(4);
    // Essential index k = i_fast + 2 i_slow; flips i_fast when i_slow = 1.
    g = ComplexMatrix::Zero(4, 4);
    g(0, 0) = g(1, 1) = 1.0;
    g(3, 2) = g(2, 3) = 1.0;
    return g;
  }
  throw std::invalid_argument("unknown gate '" + name +
                              "' (known: identity, hadamard, pauli_x, pauli_y, pauli_z, cnot)");
}

RealStateMatrix essential_basis(const SystemSpec& system) {
  const auto idx = system.essential_indices();
  RealStateMatrix out(system.dim(), static_cast<Index>(idx.size()));
  out.data().setZero();
  for (std::size_t k = 0; k < idx.size(); ++k) out.data()(idx[k], static_cast<Index>(k)) = 1.0;
  return out;
}

ControlProblem build_problem(const RunConfig& config) {
  ControlProblem p;
  p.drift = build_drift(config.system);
  p.initial = essential_basis(config.system);
  p.T = config.grid.T;
  for (const auto& pc : config.controls) {
    const ControlOperatorPair ops = build_control_operators(config.system, pc.subsystem);
    switch (pc.kind) {
      case PulseKind::constant:
        p.controls.add(std::make_shared<ConstantPulse>());
        p.channel_ops.push_back(pc.op == OperatorKind::symmetric ? ops.symmetric
                                                                 : ops.antisymmetric);
        break;
      case PulseKind::bspline:
        p.controls.add(std::make_shared<BsplinePulse>(pc.degree, pc.n_basis, config.grid.T));
        p.channel_ops.push_back(pc.op == OperatorKind::symmetric ? ops.symmetric
                                                                 : ops.antisymmetric);
        break;
      case PulseKind::bspline_carrier:
        p.controls.add(std::make_shared<BsplineCarrierPulse>(
            pc.degree, pc.n_basis, config.grid.T, pc.carrier_freqs, pc.complex_channels));
        p.channel_ops.push_back(ops.symmetric);
        if (pc.complex_channels) p.channel_ops.push_back(ops.antisymmetric);
        break;
    }
  }
  p.validate();
  return p;
}

GateObjective build_objective(const RunConfig& config, const ControlProblem& problem) {
  const ComplexMatrix gate =
      config.gate ? *config.gate
                  : ComplexMatrix::Identity(problem.n_columns(), problem.n_columns());
  ObjectiveConfig obj = config.objective;
  if (config.guard_scheme) obj.guard = build_guard_weights(config.system, *config.guard_scheme);
  return GateObjective(GateTarget::from_gate(gate, problem.initial), obj);
}

Vector initial_parameters(const RunConfig& config, Index n_params) {
  if (config.theta) {
    if (static_cast<Index>(config.theta->size()) != n_params)
      throw ConfigError("/theta", "expected " + std::to_string(n_params) + " parameters");
    return Eigen::Map<const Vector>(config.theta->data(), n_params);
  }
  Vector theta = random_initial_controls(n_params, config.optimizer.initial_amplitude, config.seed);
  return project_onto_box(theta, Vector::Constant(n_params, config.optimizer.lower),
                          Vector::Constant(n_params, config.optimizer.upper));
}

int resolve_steps(const RunConfig& config) {
  if (config.grid.steps) return *config.grid.steps;
  const std::string& path = *config.grid.stepsize_study;
  std::ifstream in(path);
  if (!in) throw ConfigError("/grid/stepsize_study", "cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  if (line.rfind("order,steps,mean_error", 0) != 0)
    throw ConfigError("/grid/stepsize_study", "'" + path + "' is not a stepsize-study CSV");
  std::vector<int> steps;
  std::vector<double> errors;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3) continue;
    if (std::stoi(cells[0]) != config.order) continue;
    steps.push_back(std::stoi(cells[1]));
    errors.push_back(std::stod(cells[2]));
  }
  if (steps.empty())
    throw ConfigError("/grid/stepsize_study",
                      "no rows for order " + std::to_string(config.order) + " in '" + path + "'");
  const auto rec = recommend_steps(steps, errors, *config.grid.target_error);
  if (!rec)
    throw ConfigError("/grid/target_error",
                      "target error cannot be reached from the study data for order " +
                          std::to_string(config.order));
  if (*rec > 1e8)
    throw ConfigError("/grid/target_error", "target error needs more than 1e8 steps for order " +
                                                std::to_string(config.order));
  return static_cast<int>(std::ceil(*rec - 1e-9));
}

}  // namespace hermite::cli
