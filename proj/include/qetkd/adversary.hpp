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
#include <cstdint>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "qetkd/qet.hpp"

namespace qetkd {

enum class AttackKind { independent, postselect, split_entanglement };
enum class SplitCase { eve_waits, eve_measures_first_silent, eve_measures_first_sends };
enum class Detection { none, double_message, verification_mismatch };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::independent: return "independent";
    case AttackKind::postselect: return "postselect";
    case AttackKind::split_entanglement: return "split";
  }
  return "?";
}

inline const char* to_string(SplitCase c) {
  switch (c) {
    case SplitCase::eve_waits: return "eve-waits";
    case SplitCase::eve_measures_first_silent: return "eve-measures-first-silent";
    case SplitCase::eve_measures_first_sends: return "eve-measures-first-sends";
  }
  return "?";
}

inline const char* to_string(Detection d) {
  switch (d) {
    case Detection::none: return "none";
    case Detection::double_message: return "double_message";
    case Detection::verification_mismatch: return "verification_mismatch";
  }
  return "?";
}

inline SplitCase split_case_from_string(const std::string& s) {
  for (auto c : {SplitCase::eve_waits, SplitCase::eve_measures_first_silent,
                 SplitCase::eve_measures_first_sends}) {
    if (s == to_string(c)) return c;
  }
  throw InvalidArgument("unknown split sub-case '" + s + "'");
}

struct AttackReport {
  AttackKind kind = AttackKind::independent;
  std::optional<SplitCase> sub_case;
  std::optional<DensityMatrix> eve_state;  // the state the attacked receiver ends up with
  double trace_distance_to_bob = 0.0;
  double frobenius_gap = 0.0;
  double key_match_rate_alice_bob = 1.0;
  double key_match_rate_alice_bob_se = 0.0;
  double key_match_rate_eve_bob = 0.0;
  double key_match_rate_eve_bob_se = 0.0;
  double key_match_rate_eve_alice = 0.0;
  double mutual_information_bits = 0.0;  // between Eve's outcome and Alice's outcome
  Detection detection = Detection::none;
  int verification_bits = 0;
  int verification_mismatches = 0;
  int rounds = 0;
  std::uint64_t seed = 0;

  /// Flat key=value block, one field per line.
  std::string serialize() const {
    std::string s;
    const auto kv = [&s](const char* k, const auto& v) { s += fmt::format("{}={}\n", k, v); };
    const auto kf = [&s](const char* k, double v) { s += fmt::format("{}={:.12g}\n", k, v); };
    kv("kind", to_string(kind));
    kv("sub_case", sub_case ? to_string(*sub_case) : "none");
    kv("rounds", rounds);
    kv("seed", seed);
    kf("trace_distance_to_bob", trace_distance_to_bob);
    kf("frobenius_gap", frobenius_gap);
    kf("key_match_rate_alice_bob", key_match_rate_alice_bob);
    kf("key_match_rate_alice_bob_se", key_match_rate_alice_bob_se);
    kf("key_match_rate_eve_bob", key_match_rate_eve_bob);
    kf("key_match_rate_eve_bob_se", key_match_rate_eve_bob_se);
    kf("key_match_rate_eve_alice", key_match_rate_eve_alice);
    kf("mutual_information_bits", mutual_information_bits);
    kv("verification_bits", verification_bits);
    kv("verification_mismatches", verification_mismatches);
    kv("detection", to_string(detection));
    return s;
  }
};

namespace detail {

inline double binomial_se(double rate, int n) {
  return n > 0 ? std::sqrt(rate * (1.0 - rate) / n) : 0.0;
}

/// Plug-in mutual information (bits) of a 2x2 count table.
inline double mutual_information(const std::array<std::array<long, 2>, 2>& c) {
  const double n = static_cast<double>(c[0][0] + c[0][1] + c[1][0] + c[1][1]);
  if (n == 0) return 0.0;
  double mi = 0.0;
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) {
      if (c[x][y] == 0) continue;
      const double pxy = c[x][y] / n;
      const double px = (c[x][0] + c[x][1]) / n;
      const double py = (c[0][y] + c[1][y]) / n;
      mi += pxy * std::log2(pxy / (px * py));
    }
  }
  return mi;
}

inline int sample_bit(const std::array<double, 2>& prob, CounterRng& rng) {
  return rng.uniform() * (prob[0] + prob[1]) < prob[0] ? 0 : 1;
}

/// sum_{b,a} w(b,a) U(a) P(b) rho P(b) U(a)^dagger for the protocol's operators.
template <class Weight>
Matrix feedback_ensemble(const QetSystem& sys, const MeasurementBasis& basis, const Protocol& proto,
                         Weight&& weight) {
  const int n = sys.n_sites();
  const Matrix& rho = sys.ground_density().matrix();
  Matrix out = Matrix::Zero(rho.rows(), rho.cols());
  for (int b = 0; b < 2; ++b) {
    const Matrix p = projector(basis, b, n).matrix();
    const Matrix branch = p * rho * p;
    for (int a = 0; a < 2; ++a) {
      const double w = weight(b, a);
      if (w == 0.0) continue;
      const Matrix u = proto.rule.unitary(a, n).matrix();
      out += w * (u * branch * u.adjoint());
    }
  }
  return out;
}

}  // namespace detail

/// Bob's honest post-feedback ensemble.
inline DensityMatrix bob_state(const QetSystem& sys, const Protocol& proto) {
  return ensemble_states(sys, sys.ground_density(), proto).after_bob;
}

/// Eve runs the feedback on her own ground-state copy, measured in `eve_basis`
/// independently of Alice; she only learns Alice's announced bit.
inline AttackReport eve_independent(const QetSystem& sys, const Protocol& proto,
                                    std::optional<MeasurementBasis> eve_basis, int rounds,
                                    std::uint64_t seed) {
  if (rounds < 0) throw InvalidArgument("negative round count");
  const MeasurementBasis eb = eve_basis.value_or(proto.alice);
  Protocol eve_proto = proto;
  eve_proto.alice = eb;
  const auto alice_t = conditional_table(sys, sys.ground_density(), proto);
  const auto eve_t = conditional_table(sys, sys.ground_density(), eve_proto);

  AttackReport r;
  r.kind = AttackKind::independent;
  r.rounds = rounds;
  r.seed = seed;
  // rho_E = sum p(b_A) p(b_E) U(b'_A) P_E(b_E) rho P_E(b_E) U(b'_A)^dagger, with the branch
  // P_E rho P_E already carrying p(b_E).
  r.eve_state = DensityMatrix(detail::feedback_ensemble(sys, eb, proto, [&](int, int a) {
    double w = 0.0;
    for (int ba = 0; ba < 2; ++ba) {
      if (proto.rule.applied_bit(ba) == a) w += alice_t.probability[ba];
    }
    return w;
  }));
  const auto rho_b = bob_state(sys, proto);
  r.trace_distance_to_bob = trace_distance(*r.eve_state, rho_b);
  r.frobenius_gap = (r.eve_state->matrix() - rho_b.matrix()).norm();

  CounterRng rng(seed);
  long ab = 0, eb_match = 0, ea = 0;
  std::array<std::array<long, 2>, 2> counts{};
  for (int i = 0; i < rounds; ++i) {
    const int b = detail::sample_bit(alice_t.probability, rng);
    const int logical = rng.coin() ? 1 : 0;
    const int a = proto.rule.applied_bit(encode_bit(b, logical));
    const int bob = decode_energy(alice_t.energy[b][a], 0.0, proto.rule.bit_map);
    const int be = detail::sample_bit(eve_t.probability, rng);
    const int eve = decode_energy(eve_t.energy[be][a], 0.0, proto.rule.bit_map);
    ab += bob == logical;
    eb_match += eve == bob;
    ea += eve == logical;
    ++counts[be][b];
  }
  if (rounds > 0) {
    r.key_match_rate_alice_bob = static_cast<double>(ab) / rounds;
    r.key_match_rate_eve_bob = static_cast<double>(eb_match) / rounds;
    r.key_match_rate_eve_alice = static_cast<double>(ea) / rounds;
  }
  r.key_match_rate_alice_bob_se = detail::binomial_se(r.key_match_rate_alice_bob, rounds);
  r.key_match_rate_eve_bob_se = detail::binomial_se(r.key_match_rate_eve_bob, rounds);
  r.mutual_information_bits = detail::mutual_information(counts);
  return r;
}

/// Post-selecting Eve: conditions her copy on Alice's actual outcome. Built from
/// post-selected state vectors and compared against Bob's density-matrix ensemble.
inline AttackReport eve_postselect(const QetSystem& sys, const Protocol& proto) {
  const int n = sys.n_sites();
  const Vector& g = sys.ground_state().amplitudes();
  Matrix rho = Matrix::Zero(g.size(), g.size());
  for (int b = 0; b < 2; ++b) {
    const Vector psi =
        proto.rule.unitary(proto.rule.applied_bit(b), n).matrix() * (projector(proto.alice, b, n).matrix() * g);
    rho += psi * psi.adjoint();
  }
  AttackReport r;
  r.kind = AttackKind::postselect;
  r.eve_state = DensityMatrix(rho);
  const auto rho_b = bob_state(sys, proto);
  r.frobenius_gap = (r.eve_state->matrix() - rho_b.matrix()).norm();
  r.trace_distance_to_bob = trace_distance(*r.eve_state, rho_b);
  r.key_match_rate_eve_bob = 1.0;
  r.key_match_rate_eve_alice = 1.0;
  return r;
}

/// Man in the middle holding two independent ground-state pairs, Eve-Alice and
/// Eve-Bob. Eve plays receiver on her pair with Alice and learns Alice's key; what
/// Bob sees depends on the sub-case. Verification compares the first
/// `verification_bits` key bits of Alice and Bob.
inline AttackReport split_attack(const QetSystem& sys, const Protocol& proto, SplitCase sub_case,
                                 int rounds, std::uint64_t seed, int verification_bits = 64) {
  if (rounds < 0) throw InvalidArgument("negative round count");
  const auto t = conditional_table(sys, sys.ground_density(), proto);
  const auto& map = proto.rule;

  AttackReport r;
  r.kind = AttackKind::split_entanglement;
  r.sub_case = sub_case;
  r.rounds = rounds;
  r.seed = seed;
  if (sub_case == SplitCase::eve_waits) {
    // Bob's partner site is never measured; announced bits are uniform.
    const Matrix& rho = sys.ground_density().matrix();
    Matrix m = Matrix::Zero(rho.rows(), rho.cols());
    for (int a = 0; a < 2; ++a) {
      const Matrix u = proto.rule.unitary(a, sys.n_sites()).matrix();
      m += 0.5 * (u * rho * u.adjoint());
    }
    r.eve_state = DensityMatrix(m);
  } else {
    r.eve_state = DensityMatrix(
        detail::feedback_ensemble(sys, proto.alice, proto, [](int, int) { return 0.5; }));
  }
  r.trace_distance_to_bob = trace_distance(*r.eve_state, bob_state(sys, proto));

  CounterRng rng(seed);
  long ab = 0, eb = 0, ea = 0;
  std::array<std::array<long, 2>, 2> counts{};
  r.verification_bits = std::min(verification_bits, rounds);
  for (int i = 0; i < rounds; ++i) {
    const int b = detail::sample_bit(t.probability, rng);  // Alice, on the Eve-Alice pair
    const int logical = rng.coin() ? 1 : 0;
    const int sent = encode_bit(b, logical);
    const int eve = decode_energy(t.energy[b][map.applied_bit(sent)], 0.0, map.bit_map);
    int bob = -1;
    switch (sub_case) {
      case SplitCase::eve_waits:
        bob = decode_energy(t.unmeasured[map.applied_bit(sent)], 0.0, map.bit_map);
        break;
      case SplitCase::eve_measures_first_silent: {
        const int be = detail::sample_bit(t.probability, rng);
        bob = decode_energy(t.energy[be][map.applied_bit(sent)], 0.0, map.bit_map);
        ++counts[be][b];
        break;
      }
      case SplitCase::eve_measures_first_sends: {
        // Eve re-encodes the key she learned against her own outcome; Bob now
        // holds two announced bits and uses Eve's.
        const int be = detail::sample_bit(t.probability, rng);
        const int forged = encode_bit(be, eve < 0 ? 0 : eve);
        bob = decode_energy(t.energy[be][map.applied_bit(forged)], 0.0, map.bit_map);
        ++counts[be][b];
        break;
      }
    }
    ab += bob == logical;
    eb += eve == bob;
    ea += eve == logical;
    if (i < r.verification_bits && bob != logical) ++r.verification_mismatches;
  }
  if (rounds > 0) {
    r.key_match_rate_alice_bob = static_cast<double>(ab) / rounds;
    r.key_match_rate_eve_bob = static_cast<double>(eb) / rounds;
    r.key_match_rate_eve_alice = static_cast<double>(ea) / rounds;
  }
  r.key_match_rate_alice_bob_se = detail::binomial_se(r.key_match_rate_alice_bob, rounds);
  r.key_match_rate_eve_bob_se = detail::binomial_se(r.key_match_rate_eve_bob, rounds);
  r.mutual_information_bits = detail::mutual_information(counts);
  if (sub_case == SplitCase::eve_measures_first_sends && rounds > 0) {
    r.detection = Detection::double_message;
  } else if (r.verification_mismatches > 0) {
    r.detection = Detection::verification_mismatch;
  }
  return r;
}

}  // namespace qetkd
