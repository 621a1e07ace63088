// Copyright 2026 The qetkd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include "qetkd/parallel.hpp"
#include "qetkd/qet.hpp"

namespace qetkd {

enum class NoiseKind {
  classical_flip,
  depolarize,
  bit_flip,
  phase_flip,
  excited_mixture,
  excited_superposition,
  local_kraus
};

inline const char* to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::classical_flip: return "classical";
    case NoiseKind::depolarize: return "depolarize";
    case NoiseKind::bit_flip: return "bitflip";
    case NoiseKind::phase_flip: return "phaseflip";
    case NoiseKind::excited_mixture: return "mixture";
    case NoiseKind::excited_superposition: return "superposition";
    case NoiseKind::local_kraus: return "kraus";
  }
  return "?";
}

inline NoiseKind noise_kind_from_string(const std::string& s) {
  for (auto k : {NoiseKind::classical_flip, NoiseKind::depolarize, NoiseKind::bit_flip,
                 NoiseKind::phase_flip, NoiseKind::excited_mixture,
                 NoiseKind::excited_superposition, NoiseKind::local_kraus}) {
    if (s == to_string(k)) return k;
  }
  throw InvalidArgument("unknown noise family '" + s + "'");
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::classical_flip;
  double p = 0.0;
  std::optional<int> site;
  std::optional<double> alpha;
  std::vector<Operator> kraus_ops;

  void validate(int n_sites) const {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("noise probability outside [0, 1]");
    const bool needs_site = kind == NoiseKind::bit_flip || kind == NoiseKind::phase_flip ||
                            kind == NoiseKind::local_kraus;
    if (needs_site && !site) throw InvalidArgument(std::string(to_string(kind)) + " needs a site");
    if (site && (*site < 0 || *site >= n_sites)) throw InvalidArgument("noise site out of range");
    if (kind == NoiseKind::local_kraus && kraus_ops.empty()) {
      throw InvalidArgument("local Kraus noise needs at least one operator");
    }
  }
};

enum class BasisPolicy { fixed, two_basis };

/// A system together with the basis set Alice draws from.
struct RunContext {
  QetSystem system;
  std::vector<WeightedProtocol> bases;

  static RunContext make(PartitionedModel model, BasisPolicy policy = BasisPolicy::fixed,
                         const std::string& receiver = "", BitMap bit_map = BitMap::identity) {
    QetSystem sys(std::move(model));
    const std::string rx = receiver.empty() ? sys.model().receivers.front() : receiver;
    auto set = policy == BasisPolicy::fixed ? fixed_basis_set(sys, rx, bit_map)
                                            : two_basis_set(sys, rx, bit_map);
    return {std::move(sys), std::move(set)};
  }
};

/// Protocol run on an arbitrary input, averaged over the basis set.
inline QetOutcome run_on_input(const RunContext& ctx, const DensityMatrix& input,
                               double channel_flip = 0.0) {
  return average_over_bases(ctx.bases, [&](const Protocol& p) {
    return run_protocol(ctx.system, input, p, channel_flip);
  });
}

inline QetOutcome noiseless_run(const RunContext& ctx) {
  return run_on_input(ctx, ctx.system.ground_density());
}

inline QetOutcome apply_classical_flip(const RunContext& ctx, double p) {
  return run_on_input(ctx, ctx.system.ground_density(), p);
}

/// (1 - p) rho_gs + p sigma.
inline DensityMatrix mix_state(const DensityMatrix& rho_gs, const DensityMatrix& sigma, double p) {
  return mix(rho_gs, sigma, p);
}

/// Ground state mixed with I / 2^n.
inline QetOutcome depolarize_run(const RunContext& ctx, double p) {
  const auto& sys = ctx.system;
  return run_on_input(ctx,
                      mix_state(sys.ground_density(), DensityMatrix::maximally_mixed(sys.n_sites()), p));
}

/// First excited level: its eigenvectors (one per degenerate copy) and energy.
struct ExcitedLevel {
  std::vector<Vector> vectors;
  double energy = 0.0;
};

namespace detail {

inline Vector fix_phase(Vector v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  v *= std::conj(v(arg)) / std::abs(v(arg));
  return v;
}

}  // namespace detail

inline ExcitedLevel first_excited_level(const QetSystem& sys) {
  const auto es = eigendecompose(sys.hamiltonian());
  if (es.values.size() < 2) throw InvalidArgument("no excited level on a single-state register");
  ExcitedLevel level;
  level.energy = es.values(1);
  for (Eigen::Index i = 1; i < es.values.size(); ++i) {
    if (es.values(i) - level.energy > Tolerances::degeneracy) break;
    level.vectors.push_back(detail::fix_phase(es.vectors.col(i)));
  }
  return level;
}

/// Uniform mixture over the first excited eigenspace.
inline DensityMatrix first_excited_density(const QetSystem& sys) {
  const auto level = first_excited_level(sys);
  const auto d = sys.ground_state().dim();
  Matrix m = Matrix::Zero(d, d);
  for (const auto& v : level.vectors) m += v * v.adjoint();
  return DensityMatrix(m / static_cast<double>(level.vectors.size()));
}

inline QetOutcome excited_mixture_run(const RunContext& ctx, double p) {
  const auto& sys = ctx.system;
  return run_on_input(ctx, mix_state(sys.ground_density(), first_excited_density(sys), p));
}

/// sqrt(1 - p)|g> + e^{i alpha} sqrt(p)|psi_1>; the first vector of a degenerate level is used.
inline PureState excited_superposition(const QetSystem& sys, double p, double alpha) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("superposition weight outside [0, 1]");
  const auto level = first_excited_level(sys);
  const Vector v = std::sqrt(1.0 - p) * sys.ground_state().amplitudes() +
                   std::polar(std::sqrt(p), alpha) * level.vectors.front();
  return PureState::normalized(v);
}

inline QetOutcome excited_superposition_run(const RunContext& ctx, double p, double alpha = 0.0) {
  return run_on_input(ctx, DensityMatrix::from_pure(excited_superposition(ctx.system, p, alpha)));
}

/// (1 - p) rho_gs + p P rho_gs P with P = X or Z on one site.
inline QetOutcome pauli_flip_run(const RunContext& ctx, Axis axis, int site, double p) {
  if (axis == Axis::Y) throw InvalidArgument("flip noise is defined for X and Z only");
  const auto& sys = ctx.system;
  if (site < 0 || site >= sys.n_sites()) throw InvalidArgument("flip site out of range");
  const Matrix f = pauli_on_site(axis, site, sys.n_sites()).matrix();
  const DensityMatrix flipped(f * sys.ground_density().matrix() * f);
  return run_on_input(ctx, mix_state(sys.ground_density(), flipped, p));
}

/// Embeds a 2x2 matrix on one site of the register.
inline Operator embed_on_site(const Eigen::Matrix2cd& k, int site, int n_sites) {
  const Complex c0 = 0.5 * (k(0, 0) + k(1, 1));
  const Complex cx = 0.5 * (k(0, 1) + k(1, 0));
  const Complex cy = 0.5 * kI * (k(0, 1) - k(1, 0));
  const Complex cz = 0.5 * (k(0, 0) - k(1, 1));
  return c0 * Operator::identity(n_sites) + cx * pauli_on_site(Axis::X, site, n_sites) +
         cy * pauli_on_site(Axis::Y, site, n_sites) + cz * pauli_on_site(Axis::Z, site, n_sites);
}

struct KrausReport {
  QetOutcome outcome;
  bool preconditions_hold = true;
  double commutator_norm = 0.0;  // max ||[K, X]|| over X in {P_A(b), H_A, H_B}
};

/// Sum_a K_a rho_gs K_a^dagger with every K_a supported on `site`. The commutation
/// preconditions for invariance are checked and reported, not assumed.
inline KrausReport local_kraus_run(const RunContext& ctx, int site,
                                   const std::vector<Operator>& kraus) {
  const auto& sys = ctx.system;
  const int n = sys.n_sites();
  if (kraus.empty()) throw InvalidArgument("empty Kraus set");
  if (site < 0 || site >= n) throw InvalidArgument("Kraus site out of range");
  for (const auto& wp : ctx.bases) {
    if (site == wp.protocol.alice.site || site == wp.protocol.rule.site) {
      throw SupportViolation("Kraus noise on a party's own site");
    }
  }
  Matrix completeness = Matrix::Zero(1 << n, 1 << n);
  for (const auto& k : kraus) {
    if (k.n_sites() != n) throw InvalidOperator("Kraus operator has wrong dimension");
    for (int s = 0; s < n; ++s) {
      if (s == site) continue;
      for (Axis a : {Axis::X, Axis::Z}) {
        if (commutator(k, pauli_on_site(a, s, n)).frobenius_norm() > Tolerances::commutator) {
          throw SupportViolation("Kraus operator acts outside site " + std::to_string(site));
        }
      }
    }
    completeness += k.matrix().adjoint() * k.matrix();
  }
  if ((completeness - Matrix::Identity(1 << n, 1 << n)).norm() > Tolerances::kraus_completeness) {
    throw CompletenessViolation("sum K^dagger K differs from the identity");
  }

  KrausReport report;
  std::vector<const Operator*> checks{&sys.sender_operator()};
  std::vector<Operator> projectors;
  for (const auto& wp : ctx.bases) {
    checks.push_back(&sys.part(wp.protocol.receiver));
    for (int b = 0; b < 2; ++b) projectors.push_back(projector(wp.protocol.alice, b, n));
  }
  for (const auto& p : projectors) checks.push_back(&p);
  for (const auto& k : kraus) {
    for (const auto* op : checks) {
      report.commutator_norm = std::max(report.commutator_norm, commutator(k, *op).frobenius_norm());
    }
  }
  report.preconditions_hold = report.commutator_norm <= Tolerances::commutator;

  const Matrix& rho = sys.ground_density().matrix();
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (const auto& k : kraus) out += k.matrix() * rho * k.matrix().adjoint();
  report.outcome = run_on_input(ctx, DensityMatrix(out));
  return report;
}

/// Input state produced by a state-noise family; classical flips leave the state alone.
inline DensityMatrix noisy_state(const QetSystem& sys, const NoiseSpec& spec) {
  spec.validate(sys.n_sites());
  const auto& g = sys.ground_density();
  const int n = sys.n_sites();
  switch (spec.kind) {
    case NoiseKind::classical_flip: return g;
    case NoiseKind::depolarize: return mix_state(g, DensityMatrix::maximally_mixed(n), spec.p);
    case NoiseKind::bit_flip:
    case NoiseKind::phase_flip: {
      const Axis a = spec.kind == NoiseKind::bit_flip ? Axis::X : Axis::Z;
      const Matrix f = pauli_on_site(a, *spec.site, n).matrix();
      return mix_state(g, DensityMatrix(f * g.matrix() * f), spec.p);
    }
    case NoiseKind::excited_mixture: return mix_state(g, first_excited_density(sys), spec.p);
    case NoiseKind::excited_superposition:
      return DensityMatrix::from_pure(excited_superposition(sys, spec.p, spec.alpha.value_or(0.0)));
    case NoiseKind::local_kraus: {
      Matrix out = Matrix::Zero(g.dim(), g.dim());
      for (const auto& k : spec.kraus_ops) out += k.matrix() * g.matrix() * k.matrix().adjoint();
      return DensityMatrix(out);
    }
  }
  throw InvalidArgument("unhandled noise kind");
}

/// Dispatches one noise specification.
inline QetOutcome run_noise(const RunContext& ctx, const NoiseSpec& spec) {
  spec.validate(ctx.system.n_sites());
  switch (spec.kind) {
    case NoiseKind::classical_flip: return apply_classical_flip(ctx, spec.p);
    case NoiseKind::depolarize: return depolarize_run(ctx, spec.p);
    case NoiseKind::bit_flip: return pauli_flip_run(ctx, Axis::X, *spec.site, spec.p);
    case NoiseKind::phase_flip: return pauli_flip_run(ctx, Axis::Z, *spec.site, spec.p);
    case NoiseKind::excited_mixture: return excited_mixture_run(ctx, spec.p);
    case NoiseKind::excited_superposition:
      return excited_superposition_run(ctx, spec.p, spec.alpha.value_or(0.0));
    case NoiseKind::local_kraus: return local_kraus_run(ctx, *spec.site, spec.kraus_ops).outcome;
  }
  throw InvalidArgument("unhandled noise kind");
}

enum class CrossingStatus { crossing, no_crossing };

struct ThresholdReport {
  std::string family;
  std::vector<double> grid;
  std::vector<double> alice_energy;
  std::vector<double> bob_energy;
  std::vector<double> crossings;  // every sign change, bisection-refined, ascending
  CrossingStatus status = CrossingStatus::no_crossing;

  std::optional<double> p_star() const {
    if (crossings.empty()) return std::nullopt;
    return crossings.front();
  }
};

/// Scans E_B(p) over the grid and refines each sign change by bisection to 1e-4.
template <class Run>
ThresholdReport threshold_scan_with(std::string family, std::vector<double> grid, Run&& run) {
  ThresholdReport r;
  r.family = std::move(family);
  r.grid = std::move(grid);
  const auto outcomes = parallel_map(r.grid, [&](double p) { return run(p); });
  for (const auto& o : outcomes) {
    r.alice_energy.push_back(o.alice_energy);
    r.bob_energy.push_back(o.bob_energy);
  }
  const auto f = [&](double p) { return run(p).bob_energy; };
  const auto tol = [](double a, double b) { return std::abs(b - a) <= Tolerances::threshold_bisection; };
  // rounding-level energies (e.g. a fully depolarized state) carry no sign; a sign
  // change is only counted between points that clearly have one
  const auto sign = [](double e) { return std::abs(e) <= Tolerances::energy_zero ? 0 : (e < 0 ? -1 : 1); };
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < r.grid.size(); ++i) {
    const int s = sign(r.bob_energy[i]);
    if (s == 0) continue;
    if (last && sign(r.bob_energy[*last]) != s) {
      const auto [lo, hi] = boost::math::tools::bisect(f, r.grid[*last], r.grid[i], tol);
      r.crossings.push_back(0.5 * (lo + hi));
    }
    last = i;
  }
  r.status = r.crossings.empty() ? CrossingStatus::no_crossing : CrossingStatus::crossing;
  return r;
}

inline ThresholdReport threshold_scan(const RunContext& ctx, NoiseSpec family,
                                      std::vector<double> grid = linspace(0.0, 1.0, 101)) {
  family.validate(ctx.system.n_sites());
  return threshold_scan_with(to_string(family.kind), std::move(grid), [&ctx, family](double p) {
    NoiseSpec s = family;
    s.p = p;
    return run_noise(ctx, s);
  });
}

struct CouplingOptimum {
  double coupling = 0.0;
  double bob_energy = 0.0;
};

/// Coupling J of the three-site chain that minimises the noiseless E_B (Brent, 1e-3).
inline CouplingOptimum optimal_chain3_coupling(BasisPolicy policy = BasisPolicy::two_basis,
                                               double lo = 0.05, double hi = 6.0) {
  const auto f = [policy](double j) {
    return noiseless_run(RunContext::make(chain3(j), policy)).bob_energy;
  };
  const auto [j, e] = boost::math::tools::brent_find_minima(f, lo, hi, 12);
  return {j, e};
}

}  // namespace qetkd
