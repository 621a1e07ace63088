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

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qetkd/linalg.hpp"
#include "qetkd/model.hpp"
#include "qetkd/rng.hpp"

namespace qetkd {

using Vec3 = std::array<double, 3>;

inline double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

inline Vec3 axis_vector(Axis a) {
  switch (a) {
    case Axis::X: return {1, 0, 0};
    case Axis::Y: return {0, 1, 0};
    case Axis::Z: return {0, 0, 1};
  }
  return {0, 0, 0};
}

/// Alice's measurement: sigma_A = n · sigma on one site.
struct MeasurementBasis {
  int site = 0;
  Vec3 axis{1, 0, 0};

  static MeasurementBasis along(Axis a, int site) { return {site, axis_vector(a)}; }

  void validate() const {
    if (std::abs(norm3(axis) - 1.0) > Tolerances::basis_norm) {
      throw InvalidArgument("measurement axis is not a unit vector");
    }
  }

  Operator observable(int n_sites) const {
    validate();
    return pauli_vector_on_site(axis, site, n_sites);
  }
};

/// P_A(b) = (1 - (-1)^b sigma_A) / 2.
inline Operator projector(const MeasurementBasis& basis, int b, int n_sites) {
  if (b != 0 && b != 1) throw InvalidArgument("measurement bit must be 0 or 1");
  const double sign = b == 0 ? 1.0 : -1.0;
  return 0.5 * (Operator::identity(n_sites) - sign * basis.observable(n_sites));
}

/// xi, eta and the rotation angle they fix.
struct ThetaParams {
  double xi = 0.0;
  double eta = 0.0;
  double theta = 0.0;

  double radius() const { return std::hypot(xi, eta); }
  /// Receiver energy at this theta with the straightforward bit map: (xi - R) / 2.
  double optimal_energy() const { return 0.5 * (xi - radius()); }
  /// Receiver energy at this theta when the announced bit is flipped.
  double flipped_energy() const {
    return 0.5 * xi * (1.0 - std::cos(2 * theta)) + 0.5 * eta * std::sin(2 * theta);
  }
};

inline ThetaParams make_theta_params(double xi, double eta) {
  return {xi, eta, 0.5 * std::atan2(eta, xi)};
}

enum class BitMap { identity, flip };

/// Bob's conditioned rotation U_B(b') = exp(-i theta (-1)^{b'} sigma_B).
struct FeedbackRule {
  int site = 0;
  Vec3 axis{0, 1, 0};
  double theta = 0.0;
  BitMap bit_map = BitMap::identity;

  int applied_bit(int announced) const {
    return bit_map == BitMap::identity ? announced : announced ^ 1;
  }

  Operator unitary(int bit, int n_sites) const {
    const double s = bit == 0 ? 1.0 : -1.0;
    const Operator sigma = pauli_vector_on_site(axis, site, n_sites);
    return Complex{std::cos(theta), 0.0} * Operator::identity(n_sites) -
           Complex{0.0, s * std::sin(theta)} * sigma;
  }
};

struct OutcomeBranch {
  double probability = 0.0;
  double energy = 0.0;  // receiver energy conditioned on this outcome
};

struct QetOutcome {
  double alice_energy = 0.0;
  double bob_energy = 0.0;
  std::array<OutcomeBranch, 2> per_outcome{};
};

/// Everything needed to run the protocol on one model: ground state,
/// shifted Hamiltonians, partition operators. Immutable after construction.
class QetSystem {
 public:
  explicit QetSystem(PartitionedModel model)
      : model_(std::move(model)),
        hamiltonian_(model_.spec.assemble()),
        ground_(lowest_eigenpair(hamiltonian_)),
        shifted_(hamiltonian_.shifted(-ground_.energy)),
        ground_density_(DensityMatrix::from_pure(ground_.state)) {
    for (const auto& p : model_.partition.parts) {
      parts_.emplace(p.label, p.shifted_operator(n_sites()));
    }
  }

  const PartitionedModel& model() const noexcept { return model_; }
  int n_sites() const noexcept { return model_.spec.n_sites; }
  const Operator& hamiltonian() const noexcept { return hamiltonian_; }
  /// H - E_0, zero expectation in the ground state.
  const Operator& shifted_hamiltonian() const noexcept { return shifted_; }
  const PureState& ground_state() const noexcept { return ground_.state; }
  double ground_energy() const noexcept { return ground_.energy; }
  double gap() const noexcept { return ground_.gap; }
  const DensityMatrix& ground_density() const noexcept { return ground_density_; }

  const Operator& part(const std::string& label) const {
    auto it = parts_.find(label);
    if (it == parts_.end()) throw InvalidArgument("no part labelled '" + label + "'");
    return it->second;
  }
  const Operator& sender_operator() const { return part(model_.sender); }
  int site_of(const std::string& label) const { return model_.partition.at(label).site; }

 private:
  PartitionedModel model_;
  Operator hamiltonian_;
  GroundPair ground_;
  Operator shifted_;
  DensityMatrix ground_density_;
  std::map<std::string, Operator> parts_;
};

/// Ground state with its energy; throws DegenerateGround on a degenerate ground level.
inline GroundPair ground_state(const HamiltonianSpec& spec) {
  return lowest_eigenpair(spec.assemble());
}

struct PartitionCheck {
  bool ok = true;
  double commutator_norm = 0.0;  // max over b of ||[P_A(b), H_B]||_F
};

inline PartitionCheck validate_partition(const MeasurementBasis& basis, const Operator& part_b) {
  PartitionCheck check;
  for (int b = 0; b < 2; ++b) {
    const double n = commutator(projector(basis, b, part_b.n_sites()), part_b).frobenius_norm();
    check.commutator_norm = std::max(check.commutator_norm, n);
  }
  check.ok = check.commutator_norm <= Tolerances::commutator;
  return check;
}

inline void require_partition(const MeasurementBasis& basis, const Operator& part_b) {
  const auto check = validate_partition(basis, part_b);
  if (!check.ok) {
    throw PartitionViolation("Alice's projector does not commute with the receiver Hamiltonian "
                             "(||[P,H_B]|| = " + std::to_string(check.commutator_norm) + ")",
                             check.commutator_norm);
  }
}

/// xi = <g|s_B H s_B|g>, eta = <g|(P_A(0) - P_A(1)) i[H, s_B]|g>, with H shifted so
/// that <g|H|g> = 0. The bit-sign observable P_A(0) - P_A(1) equals -sigma_A.
inline ThetaParams theta_params(const PureState& gs, const Operator& shifted_h,
                                const Operator& sigma_a, const Operator& sigma_b) {
  const auto& g = gs.amplitudes();
  const Vector sb_g = sigma_b.matrix() * g;
  const double xi = detail::real_or_throw(sb_g.dot(shifted_h.matrix() * sb_g), "xi");
  const Operator sigma_b_dot = kI * commutator(shifted_h, sigma_b);
  const Complex eta_c = -g.dot(sigma_a.matrix() * (sigma_b_dot.matrix() * g));
  const double eta = detail::real_or_throw(eta_c, "eta");
  return make_theta_params(xi, eta);
}

inline ThetaParams theta_params(const QetSystem& sys, const MeasurementBasis& alice,
                                const Vec3& bob_axis, int bob_site) {
  return theta_params(sys.ground_state(), sys.shifted_hamiltonian(), alice.observable(sys.n_sites()),
                      pauli_vector_on_site(bob_axis, bob_site, sys.n_sites()));
}

struct BobChoice {
  Vec3 axis;
  ThetaParams params;
};

/// eta is linear in Bob's axis m, eta(m) = sum_i m_i eta(sigma_i); its maximiser over
/// the sphere is the normalised coefficient vector.
inline BobChoice optimize_bob_basis(const QetSystem& sys, const MeasurementBasis& alice,
                                    int bob_site) {
  Vec3 c{};
  for (int i = 0; i < 3; ++i) {
    c[i] = theta_params(sys, alice, axis_vector(static_cast<Axis>(i)), bob_site).eta;
  }
  const double n = norm3(c);
  if (n < Tolerances::objective_norm) {
    throw DegenerateObjective("no receiver basis teleports energy for this measurement basis");
  }
  const Vec3 m{c[0] / n, c[1] / n, c[2] / n};
  return {m, theta_params(sys, alice, m, bob_site)};
}

/// One complete protocol choice: Alice's basis, the receiver, and its feedback rule.
struct Protocol {
  MeasurementBasis alice;
  std::string receiver = "bob";
  FeedbackRule rule;
  ThetaParams params;
};

/// Protocol with a given Bob axis and the optimal theta for it.
inline Protocol make_protocol(const QetSystem& sys, const MeasurementBasis& alice,
                              const Vec3& bob_axis, const std::string& receiver,
                              BitMap bit_map = BitMap::identity) {
  const int site = sys.site_of(receiver);
  const auto params = theta_params(sys, alice, bob_axis, site);
  return {alice, receiver, FeedbackRule{site, bob_axis, params.theta, bit_map}, params};
}

/// Protocol with Bob's axis chosen by optimize_bob_basis.
inline Protocol optimal_protocol(const QetSystem& sys, const MeasurementBasis& alice,
                                 const std::string& receiver, BitMap bit_map = BitMap::identity) {
  const int site = sys.site_of(receiver);
  const auto choice = optimize_bob_basis(sys, alice, site);
  return {alice, receiver, FeedbackRule{site, choice.axis, choice.params.theta, bit_map},
          choice.params};
}

/// Fixed pairing for the two-basis policy: X on Alice -> Y on Bob, Y on Alice -> X on Bob.
inline Vec3 paired_bob_axis(const MeasurementBasis& alice) {
  if (alice.axis == axis_vector(Axis::X)) return axis_vector(Axis::Y);
  if (alice.axis == axis_vector(Axis::Y)) return axis_vector(Axis::X);
  throw InvalidArgument("fixed pairing defined only for X and Y measurement bases");
}

/// Runs the protocol on an arbitrary input state. Energies are measured against the
/// input itself, Tr[rho_A H_A] - Tr[rho H_A] and Tr[rho_B H_B] - Tr[rho H_B].
/// `channel_flip` is the probability that the receiver gets the complemented bit.
inline QetOutcome run_protocol(const QetSystem& sys, const DensityMatrix& input,
                               const Protocol& proto, double channel_flip = 0.0) {
  if (!(channel_flip >= 0.0 && channel_flip <= 1.0)) {
    throw InvalidArgument("channel flip probability outside [0, 1]");
  }
  const int n = sys.n_sites();
  const Operator& h_a = sys.sender_operator();
  const Operator& h_b = sys.part(proto.receiver);
  require_partition(proto.alice, h_b);

  const Matrix& rho = input.matrix();
  const double ref_a = expectation(input, h_a);
  const double ref_b = expectation(input, h_b);

  QetOutcome out;
  Matrix rho_a = Matrix::Zero(rho.rows(), rho.cols());
  double total_b = 0.0;
  for (int b = 0; b < 2; ++b) {
    const Matrix p = projector(proto.alice, b, n).matrix();
    const Matrix branch = p * rho * p;
    rho_a += branch;
    const double prob = std::max(0.0, branch.trace().real());
    const int a = proto.rule.applied_bit(b);
    const Matrix u = proto.rule.unitary(a, n).matrix();
    const Matrix uf = proto.rule.unitary(a ^ 1, n).matrix();
    const Matrix after = (1.0 - channel_flip) * (u * branch * u.adjoint()) +
                         channel_flip * (uf * branch * uf.adjoint());
    const double e = trace_product(after, h_b);
    total_b += e;
    out.per_outcome[b].probability = prob;
    out.per_outcome[b].energy = prob > 0.0 ? e / prob - ref_b : 0.0;
  }
  out.alice_energy = trace_product(rho_a, h_a) - ref_a;
  out.bob_energy = total_b - ref_b;
  return out;
}

/// Exact ensemble run on the ground state.
inline QetOutcome run_ensemble(const QetSystem& sys, const Protocol& proto) {
  return run_protocol(sys, sys.ground_density(), proto);
}

/// Post-measurement and post-feedback density matrices.
struct EnsembleStates {
  DensityMatrix after_alice;
  DensityMatrix after_bob;
};

inline EnsembleStates ensemble_states(const QetSystem& sys, const DensityMatrix& input,
                                      const Protocol& proto) {
  const int n = sys.n_sites();
  Matrix ra = Matrix::Zero(input.dim(), input.dim());
  Matrix rb = Matrix::Zero(input.dim(), input.dim());
  for (int b = 0; b < 2; ++b) {
    const Matrix p = projector(proto.alice, b, n).matrix();
    const Matrix branch = p * input.matrix() * p;
    const Matrix u = proto.rule.unitary(proto.rule.applied_bit(b), n).matrix();
    ra += branch;
    rb += u * branch * u.adjoint();
  }
  return {DensityMatrix(ra), DensityMatrix(rb)};
}

struct WeightedProtocol {
  double weight = 1.0;
  Protocol protocol;
};

inline void check_weights(const std::vector<WeightedProtocol>& set) {
  if (set.empty()) throw InvalidArgument("empty basis set");
  double total = 0.0;
  for (const auto& w : set) {
    if (w.weight < 0.0) throw InvalidArgument("negative basis weight");
    total += w.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("basis weights must sum to 1");
}

/// Weighted average of per-basis outcomes on an arbitrary input. The per-outcome
/// table merges bases: p(b) = sum_w w p_w(b), energy is the p-weighted mean.
template <class RunOne>
QetOutcome average_over_bases(const std::vector<WeightedProtocol>& set, RunOne&& run_one) {
  check_weights(set);
  QetOutcome out;
  std::array<double, 2> weighted_energy{};
  for (const auto& w : set) {
    if (w.weight == 0.0) continue;
    const QetOutcome o = run_one(w.protocol);
    out.alice_energy += w.weight * o.alice_energy;
    out.bob_energy += w.weight * o.bob_energy;
    for (int b = 0; b < 2; ++b) {
      out.per_outcome[b].probability += w.weight * o.per_outcome[b].probability;
      weighted_energy[b] += w.weight * o.per_outcome[b].probability * o.per_outcome[b].energy;
    }
  }
  for (int b = 0; b < 2; ++b) {
    const double p = out.per_outcome[b].probability;
    out.per_outcome[b].energy = p > 0.0 ? weighted_energy[b] / p : 0.0;
  }
  return out;
}

inline QetOutcome run_ensemble_random_basis(const QetSystem& sys,
                                            const std::vector<WeightedProtocol>& set) {
  return average_over_bases(set, [&](const Protocol& p) { return run_ensemble(sys, p); });
}

/// Alice picks X or Y with equal probability; Bob uses the fixed pairing.
inline std::vector<WeightedProtocol> two_basis_set(const QetSystem& sys,
                                                   const std::string& receiver = "bob",
                                                   BitMap bit_map = BitMap::identity) {
  const int a = sys.site_of(sys.model().sender);
  std::vector<WeightedProtocol> set;
  for (Axis ax : {Axis::X, Axis::Y}) {
    const auto basis = MeasurementBasis::along(ax, a);
    set.push_back({0.5, make_protocol(sys, basis, paired_bob_axis(basis), receiver, bit_map)});
  }
  return set;
}

/// Single X basis with Bob on Y.
inline std::vector<WeightedProtocol> fixed_basis_set(const QetSystem& sys,
                                                     const std::string& receiver = "bob",
                                                     BitMap bit_map = BitMap::identity) {
  const auto basis = MeasurementBasis::along(Axis::X, sys.site_of(sys.model().sender));
  return {{1.0, make_protocol(sys, basis, paired_bob_axis(basis), receiver, bit_map)}};
}

/// Outcome probabilities and receiver energies for every (measured bit, applied bit)
/// pair on a given input. energy[b][a] = Tr[U(a) P(b) rho P(b) U(a)^dagger H_B] / p(b)
/// - Tr[rho H_B]; `a` is the raw unitary bit, the bit map is not applied.
struct ConditionalTable {
  std::array<double, 2> probability{};
  std::array<std::array<double, 2>, 2> energy{};
  std::array<double, 2> unmeasured{};  // U(a) on the input with no measurement at all
};

inline ConditionalTable conditional_table(const QetSystem& sys, const DensityMatrix& input,
                                          const Protocol& proto) {
  const int n = sys.n_sites();
  const Operator& h_b = sys.part(proto.receiver);
  require_partition(proto.alice, h_b);
  const Matrix& rho = input.matrix();
  const double ref = expectation(input, h_b);
  std::array<Matrix, 2> u{proto.rule.unitary(0, n).matrix(), proto.rule.unitary(1, n).matrix()};
  ConditionalTable t;
  for (int b = 0; b < 2; ++b) {
    const Matrix p = projector(proto.alice, b, n).matrix();
    const Matrix branch = p * rho * p;
    t.probability[b] = std::max(0.0, branch.trace().real());
    for (int a = 0; a < 2; ++a) {
      t.energy[b][a] = t.probability[b] > 0.0
                           ? trace_product(u[a] * branch * u[a].adjoint(), h_b) / t.probability[b] - ref
                           : 0.0;
    }
  }
  for (int a = 0; a < 2; ++a) t.unmeasured[a] = trace_product(u[a] * rho * u[a].adjoint(), h_b) - ref;
  return t;
}

/// Energy-sign decoding: -1 marks an erasure (|E| <= eps). Under the identity bit map
/// negative energy means logical 1; the flip map reverses the sign.
inline int decode_energy(double energy, double eps, BitMap bit_map = BitMap::identity) {
  if (std::abs(energy) <= eps) return -1;
  const bool negative = energy < 0.0;
  return (negative == (bit_map == BitMap::identity)) ? 1 : 0;
}

/// Bit Alice announces: her outcome b for logical 1, b xor 1 for logical 0.
inline int encode_bit(int outcome, int logical) { return logical ? outcome : outcome ^ 1; }

enum class EnergyReadout { expectation, shot };

struct RoundRecord {
  int outcome = 0;          // Alice's measured bit b
  int transmitted_bit = 0;  // what Alice announced
  int applied_bit = 0;      // what the receiver actually used
  double energy = 0.0;      // receiver's post-feedback energy for this round
};

/// One sampled round on the ground state. The receiver's energy is the exact
/// conditional expectation, or one sampled H_B eigenvalue in shot mode.
inline RoundRecord run_round(const QetSystem& sys, const Protocol& proto, CounterRng& rng,
                             EnergyReadout readout = EnergyReadout::expectation,
                             double channel_flip = 0.0) {
  const int n = sys.n_sites();
  const Operator& h_b = sys.part(proto.receiver);
  require_partition(proto.alice, h_b);
  const Vector& g = sys.ground_state().amplitudes();

  const Vector g0 = projector(proto.alice, 0, n).matrix() * g;
  const double p0 = g0.squaredNorm();
  RoundRecord rec;
  rec.outcome = rng.uniform() < p0 ? 0 : 1;
  const Vector branch =
      rec.outcome == 0 ? g0 : Vector(projector(proto.alice, 1, n).matrix() * g);
  const PureState post = PureState::normalized(branch);

  rec.transmitted_bit = proto.rule.applied_bit(rec.outcome);
  rec.applied_bit = rec.transmitted_bit;
  if (channel_flip > 0.0 && rng.uniform() < channel_flip) rec.applied_bit ^= 1;
  // applied_bit already carries the bit map, so use the raw unitary.
  const Vector psi = proto.rule.unitary(rec.applied_bit, n).matrix() * post.amplitudes();

  if (readout == EnergyReadout::expectation) {
    rec.energy = detail::real_or_throw(psi.dot(h_b.matrix() * psi), "round energy");
  } else {
    const auto es = eigendecompose(h_b);
    const Eigen::VectorXd weights = (es.vectors.adjoint() * psi).cwiseAbs2();
    double u = rng.uniform() * weights.sum();
    Eigen::Index k = 0;
    while (k + 1 < weights.size() && u >= weights(k)) u -= weights(k++);
    rec.energy = es.values(k);
  }
  return rec;
}

}  // namespace qetkd
