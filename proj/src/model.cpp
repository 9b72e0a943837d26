#include "hermite/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace hermite {

void SystemSpec::validate() const {
  if (subsystems.empty()) throw std::invalid_argument("system: at least one subsystem required");
  for (const auto& s : subsystems) {
    if (s.essential_levels < 1)
      throw std::invalid_argument("system: subsystem '" + s.name + "' needs essential_levels >= 1");
    if (s.guard_levels < 0)
      throw std::invalid_argument("system: subsystem '" + s.name + "' has negative guard_levels");
  }
  const int nq = static_cast<int>(subsystems.size());
  for (const auto& ck : cross_kerr) {
    if (ck.p <= ck.q || ck.q < 0 || ck.p >= nq)
      throw std::invalid_argument("system: cross-Kerr pair (" + std::to_string(ck.p) + "," +
                                  std::to_string(ck.q) + ") must satisfy 0 <= q < p < " +
                                  std::to_string(nq));
  }
}

Index SystemSpec::dim() const {
  Index n = 1;
  for (const auto& s : subsystems) n *= s.levels();
  return n;
}

Index SystemSpec::essential_dim() const {
  Index n = 1;
  for (const auto& s : subsystems) n *= s.essential_levels;
  return n;
}

Index SystemSpec::stride(int q) const {
  if (q < 0 || q >= static_cast<int>(subsystems.size()))
    throw std::out_of_range("system: subsystem index " + std::to_string(q) + " out of range");
  Index s = 1;
  for (int r = 0; r < q; ++r) s *= subsystems[r].levels();
  return s;
}

std::vector<int> SystemSpec::levels_of(Index index) const {
  std::vector<int> out(subsystems.size());
  for (std::size_t q = 0; q < subsystems.size(); ++q) {
    out[q] = static_cast<int>(index % subsystems[q].levels());
    index /= subsystems[q].levels();
  }
  return out;
}

Index SystemSpec::index_of(const std::vector<int>& levels) const {
  if (levels.size() != subsystems.size())
    throw std::invalid_argument("system: level vector has wrong length");
  Index index = 0;
  Index stride_q = 1;
  for (std::size_t q = 0; q < subsystems.size(); ++q) {
    if (levels[q] < 0 || levels[q] >= subsystems[q].levels())
      throw std::out_of_range("system: level out of range for subsystem " + std::to_string(q));
    index += levels[q] * stride_q;
    stride_q *= subsystems[q].levels();
  }
  return index;
}

Index SystemSpec::index_of_label(const std::vector<int>& label) const {
  return index_of(std::vector<int>(label.rbegin(), label.rend()));
}

bool SystemSpec::is_essential(Index index) const {
  const auto lv = levels_of(index);
  for (std::size_t q = 0; q < subsystems.size(); ++q)
    if (lv[q] >= subsystems[q].essential_levels) return false;
  return true;
}

std::vector<Index> SystemSpec::essential_indices() const {
  std::vector<Index> out;
  for (Index i = 0; i < dim(); ++i)
    if (is_essential(i)) out.push_back(i);
  return out;
}

Matrix lowering_operator(int n) {
  if (n < 1) throw std::invalid_argument("lowering_operator: need at least one level");
  Matrix a = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

SparseMatrix embed_subsystem(const SystemSpec& sys, int q, const Matrix& op) {
  const Index st = sys.stride(q);
  const int nq = sys.subsystems[q].levels();
  if (op.rows() != nq || op.cols() != nq)
    throw std::invalid_argument("embed_subsystem: operator size does not match subsystem levels");
  const Index n = sys.dim();
  std::vector<Eigen::Triplet<double>> trips;
  for (Index i = 0; i < n; ++i) {
    const int li = static_cast<int>((i / st) % nq);
    const Index base = i - li * st;
    for (int lj = 0; lj < nq; ++lj) {
      const double val = op(li, lj);
      if (val != 0.0) trips.emplace_back(i, base + lj * st, val);
    }
  }
  SparseMatrix out(n, n);
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

StructuredOperator build_drift(const SystemSpec& sys) {
  sys.validate();
  const Index n = sys.dim();
  const int nq = static_cast<int>(sys.subsystems.size());
  Vector diag = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) {
    const auto lv = sys.levels_of(i);
    double e = 0.0;
    for (int q = 0; q < nq; ++q) {
      const double m = lv[q];
      const auto& s = sys.subsystems[q];
      if (sys.frame == Frame::laboratory) e += s.transition_freq * m;
      // a^dagger a^dagger a a has eigenvalue m (m - 1)
      e -= 0.5 * s.self_kerr * m * (m - 1.0);
    }
    for (const auto& ck : sys.cross_kerr) e -= ck.value * lv[ck.p] * lv[ck.q];
    diag[i] = e;
  }
  SparseMatrix K(n, n);
  K.reserve(Eigen::VectorXi::Constant(n, 1));
  for (Index i = 0; i < n; ++i)
    if (diag[i] != 0.0) K.insert(i, i) = diag[i];
  K.makeCompressed();
  return {K, SparseMatrix(n, n)};
}

ControlOperatorPair build_control_operators(const SystemSpec& sys, int q) {
  sys.validate();
  const Matrix a = lowering_operator(sys.subsystems.at(q).levels());
  const Index n = sys.dim();
  const SparseMatrix sym = embed_subsystem(sys, q, a + a.transpose());
  // i (a - a^dagger) has real part 0 and imaginary part (a - a^dagger)
  const SparseMatrix anti = embed_subsystem(sys, q, a - a.transpose());
  return {StructuredOperator(sym, SparseMatrix(n, n)),
          StructuredOperator(SparseMatrix(n, n), anti)};
}

GuardWeights build_guard_weights(const SystemSpec& sys, const GuardScheme& scheme) {
  sys.validate();
  const Index n = sys.dim();
  GuardWeights out{Vector::Zero(n)};
  const Index n_guard = sys.guard_count();
  if (n_guard == 0) return out;
  for (Index i = 0; i < n; ++i) {
    if (sys.is_essential(i)) continue;
    if (const auto* u = std::get_if<UniformGuard>(&scheme)) {
      out.diagonal[i] = u->weight;
      continue;
    }
    const double base = std::get<ExponentialGuard>(scheme).base;
    const auto lv = sys.levels_of(i);
    double w = 0.0;
    for (std::size_t q = 0; q < sys.subsystems.size(); ++q) {
      const auto& s = sys.subsystems[q];
      if (lv[q] < s.essential_levels) continue;
      w = std::max(w, std::pow(base, s.levels() - lv[q] - 1));
    }
    out.diagonal[i] = w / static_cast<double>(n_guard);
  }
  return out;
}

}  // namespace hermite
