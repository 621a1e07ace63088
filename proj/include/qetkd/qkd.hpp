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

#include <algorithm>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "qetkd/noise.hpp"

namespace qetkd {

/// Too large a fraction of rounds fell inside the decode threshold.
class TooManyErasures : public ProtocolAbort {
 public:
  using ProtocolAbort::ProtocolAbort;
};

enum class ModelKind { two_site, star, chain3 };

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::two_site: return "two-site";
    case ModelKind::star: return "star";
    case ModelKind::chain3: return "chain3";
  }
  return "?";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  for (auto k : {ModelKind::two_site, ModelKind::star, ModelKind::chain3}) {
    if (s == to_string(k)) return k;
  }
  throw InvalidArgument("unknown model '" + s + "'");
}

struct ModelParams {
  ModelKind kind = ModelKind::chain3;
  double k = 1.0;
  double h = 1.0;
  double J = 1.0;
  int N = 2;
  bool alternative_partition = false;

  PartitionedModel build() const {
    switch (kind) {
      case ModelKind::two_site:
        return two_site_model(k, h, alternative_partition ? TwoSitePartition::alternative
                                                          : TwoSitePartition::standard);
      case ModelKind::star: return star(N, J);
      case ModelKind::chain3: return chain3(J);
    }
    throw InvalidArgument("unhandled model kind");
  }
};

enum class SessionPolicy { fixed, two_basis, haar };

inline const char* to_string(SessionPolicy p) {
  switch (p) {
    case SessionPolicy::fixed: return "fixed";
    case SessionPolicy::two_basis: return "two-basis";
    case SessionPolicy::haar: return "haar";
  }
  return "?";
}

inline SessionPolicy session_policy_from_string(const std::string& s) {
  for (auto p : {SessionPolicy::fixed, SessionPolicy::two_basis, SessionPolicy::haar}) {
    if (s == to_string(p)) return p;
  }
  throw InvalidArgument("unknown basis policy '" + s + "'");
}

struct SessionConfig {
  ModelParams model;
  int rounds = 256;
  SessionPolicy policy = SessionPolicy::fixed;
  std::optional<double> epsilon;  // default: |noiseless E_B| / 10 per basis draw
  int verification_bits = 64;
  std::optional<NoiseSpec> noise;
  std::uint64_t seed = 0;
  EnergyReadout readout = EnergyReadout::expectation;

  void validate() const {
    if (rounds < 0) throw InvalidArgument("negative round count");
    if (verification_bits < 0) throw InvalidArgument("negative verification bit count");
    if (epsilon && !(*epsilon > 0.0)) throw InvalidArgument("decode threshold must be positive");
  }
};

inline constexpr int kErasure = -1;

struct PartyResult {
  std::string label;
  std::vector<int> bits;  // 0, 1 or kErasure
  std::vector<double> energies;
  int erasures = 0;
  double match_rate = 0.0;  // agreement with Alice's key over all rounds
};

struct RoundLog {
  Vec3 basis{};
  int announced_bit = 0;
};

struct VerificationVerdict {
  bool passed = true;
  int bits_compared = 0;
  int mismatches = 0;
};

struct SessionResult {
  std::vector<int> alice_key;
  std::vector<PartyResult> parties;
  std::vector<RoundLog> rounds;
  VerificationVerdict verification;

  /// One line per (round, party): round,basis_n1,basis_n2,basis_n3,announced_bit,party,
  /// cond_energy,decoded_bit. Erasures are written as "e".
  std::string transcript() const {
    std::string s = "round,basis_n1,basis_n2,basis_n3,announced_bit,party,cond_energy,decoded_bit\n";
    for (std::size_t r = 0; r < rounds.size(); ++r) {
      const auto& log = rounds[r];
      for (const auto& p : parties) {
        const int bit = p.bits[r];
        s += fmt::format("{},{:.12g},{:.12g},{:.12g},{},{},{:.12g},{}\n", r, log.basis[0],
                         log.basis[1], log.basis[2], log.announced_bit, p.label, p.energies[r],
                         bit == kErasure ? std::string("e") : std::to_string(bit));
      }
    }
    return s;
  }
};

namespace detail {

struct PartyProtocol {
  Protocol protocol;
  ConditionalTable table;
  double epsilon = 0.0;
  bool degenerate = false;  // no receiver basis carries energy for this draw
};

/// Shot-mode energy: one H_B eigenvalue sampled from the post-feedback branch, minus
/// the input reference.
inline double shot_energy(const QetSystem& sys, const DensityMatrix& input, const Protocol& proto,
                          int b, int applied, CounterRng& rng) {
  const int n = sys.n_sites();
  const Operator& h_b = sys.part(proto.receiver);
  const Matrix p = projector(proto.alice, b, n).matrix();
  const Matrix u = proto.rule.unitary(applied, n).matrix();
  const Matrix sigma = u * p * input.matrix() * p * u.adjoint();
  const auto es = eigendecompose(h_b);
  const Eigen::VectorXd w = (es.vectors.adjoint() * sigma * es.vectors).diagonal().real();
  double x = rng.uniform() * w.sum();
  Eigen::Index k = 0;
  while (k + 1 < w.size() && x >= w(k)) x -= w(k++);
  return es.values(k) - expectation(input, h_b);
}

}  // namespace detail

/// One-round-per-bit key session. Alice draws a uniform logical key; each round she
/// measures, announces b (logical 1) or b xor 1 (logical 0) to every receiver, and
/// each receiver decodes the sign of its conditional energy. `cheat` lists parties
/// that are sent the complemented bit.
inline SessionResult run_session(const SessionConfig& cfg, const std::set<std::string>& cheat = {}) {
  cfg.validate();
  const QetSystem sys(cfg.model.build());
  const auto& receivers = sys.model().receivers;
  for (const auto& c : cheat) {
    if (std::find(receivers.begin(), receivers.end(), c) == receivers.end()) {
      throw InvalidArgument("cheat plan names unknown party '" + c + "'");
    }
  }
  const int alice_site = sys.site_of(sys.model().sender);
  double channel_flip = 0.0;
  std::optional<DensityMatrix> noisy;
  if (cfg.noise) {
    if (cfg.noise->kind == NoiseKind::classical_flip) {
      cfg.noise->validate(sys.n_sites());
      channel_flip = cfg.noise->p;
    } else {
      noisy = noisy_state(sys, *cfg.noise);
    }
  }
  const DensityMatrix& input = noisy ? *noisy : sys.ground_density();

  const auto prepare = [&](const MeasurementBasis& basis) {
    std::vector<detail::PartyProtocol> out;
    for (const auto& rx : receivers) {
      detail::PartyProtocol pp;
      try {
        pp.protocol = cfg.policy == SessionPolicy::two_basis
                          ? make_protocol(sys, basis, paired_bob_axis(basis), rx)
                          : optimal_protocol(sys, basis, rx);
      } catch (const DegenerateObjective&) {
        pp.protocol = {basis, rx, FeedbackRule{sys.site_of(rx), {0, 1, 0}, 0.0}, {}};
        pp.degenerate = true;
      }
      pp.table = conditional_table(sys, input, pp.protocol);
      if (cfg.epsilon) {
        pp.epsilon = *cfg.epsilon;
      } else {
        const auto clean = noisy ? conditional_table(sys, sys.ground_density(), pp.protocol) : pp.table;
        double e = 0.0;
        for (int b = 0; b < 2; ++b) e += clean.probability[b] * clean.energy[b][pp.protocol.rule.applied_bit(b)];
        pp.epsilon = std::abs(e) / 10.0;
      }
      out.push_back(std::move(pp));
    }
    return out;
  };

  std::map<int, std::vector<detail::PartyProtocol>> cache;  // fixed and two-basis draws
  SessionResult res;
  res.parties.resize(receivers.size());
  for (std::size_t i = 0; i < receivers.size(); ++i) res.parties[i].label = receivers[i];

  const CounterRng root(cfg.seed);
  for (int r = 0; r < cfg.rounds; ++r) {
    CounterRng rng = root.substream(static_cast<std::uint64_t>(r));
    MeasurementBasis basis;
    std::vector<detail::PartyProtocol> haar_draw;
    const std::vector<detail::PartyProtocol>* draw = nullptr;
    switch (cfg.policy) {
      case SessionPolicy::fixed:
      case SessionPolicy::two_basis: {
        const int key = cfg.policy == SessionPolicy::two_basis && rng.coin() ? 1 : 0;
        basis = MeasurementBasis::along(key ? Axis::Y : Axis::X, alice_site);
        auto it = cache.find(key);
        if (it == cache.end()) it = cache.emplace(key, prepare(basis)).first;
        draw = &it->second;
        break;
      }
      case SessionPolicy::haar:
        basis = {alice_site, random_unit_vector(rng)};
        haar_draw = prepare(basis);
        draw = &haar_draw;
        break;
    }
    const auto& probs = draw->front().table.probability;
    const int b = rng.uniform() * (probs[0] + probs[1]) < probs[0] ? 0 : 1;
    const int logical = rng.coin() ? 1 : 0;
    const int announced = encode_bit(b, logical);
    res.alice_key.push_back(logical);
    res.rounds.push_back({basis.axis, announced});

    for (std::size_t i = 0; i < receivers.size(); ++i) {
      const auto& pp = (*draw)[i];
      int received = cheat.count(receivers[i]) ? announced ^ 1 : announced;
      if (channel_flip > 0.0 && rng.uniform() < channel_flip) received ^= 1;
      const int applied = pp.protocol.rule.applied_bit(received);
      double e = pp.table.energy[b][applied];
      if (cfg.readout == EnergyReadout::shot) {
        e = detail::shot_energy(sys, input, pp.protocol, b, applied, rng);
      }
      const int bit = pp.degenerate ? kErasure : decode_energy(e, pp.epsilon, pp.protocol.rule.bit_map);
      auto& party = res.parties[i];
      party.bits.push_back(bit);
      party.energies.push_back(e);
      party.erasures += bit == kErasure;
    }
  }

  res.verification.bits_compared = std::min(cfg.verification_bits, cfg.rounds);
  for (auto& p : res.parties) {
    int match = 0;
    for (int r = 0; r < cfg.rounds; ++r) {
      const bool ok = p.bits[r] == res.alice_key[r];
      match += ok;
      if (r < res.verification.bits_compared && !ok) ++res.verification.mismatches;
    }
    p.match_rate = cfg.rounds > 0 ? static_cast<double>(match) / cfg.rounds : 1.0;
    if (cfg.rounds > 0 && p.erasures > 0.1 * cfg.rounds) {
      throw TooManyErasures(fmt::format("party {} erased {} of {} rounds", p.label, p.erasures,
                                        cfg.rounds));
    }
  }
  res.verification.passed = res.verification.mismatches == 0;
  return res;
}

struct CheatVerdict {
  bool inconsistent = false;
  int inconsistent_rounds = 0;
  double agreement_rate = 1.0;         // fraction of rounds with unanimous energy signs
  std::optional<std::string> suspect;  // minority party by sign vote (needs three or more)
};

struct MultipartyResult {
  SessionResult session;
  CheatVerdict verdict;
};

/// Star session with sign comparison between the receiving parties.
inline MultipartyResult run_multiparty(const SessionConfig& cfg,
                                       const std::set<std::string>& cheat = {}) {
  if (cfg.model.kind != ModelKind::star || cfg.model.N < 2) {
    throw InvalidArgument("multi-party sessions need the star model with at least two parties");
  }
  MultipartyResult out{run_session(cfg, cheat), {}};
  const auto& parties = out.session.parties;
  std::vector<int> dissent(parties.size(), 0);
  int unanimous = 0;
  for (int r = 0; r < cfg.rounds; ++r) {
    int negative = 0;
    for (const auto& p : parties) negative += p.energies[r] < 0.0;
    const int n = static_cast<int>(parties.size());
    if (negative == 0 || negative == n) {
      ++unanimous;
      continue;
    }
    ++out.verdict.inconsistent_rounds;
    const bool majority_negative = 2 * negative > n;
    if (2 * negative == n) continue;  // tie, nobody singled out
    for (std::size_t i = 0; i < parties.size(); ++i) {
      if ((parties[i].energies[r] < 0.0) != majority_negative) ++dissent[i];
    }
  }
  out.verdict.inconsistent = out.verdict.inconsistent_rounds > 0;
  out.verdict.agreement_rate = cfg.rounds > 0 ? static_cast<double>(unanimous) / cfg.rounds : 1.0;
  const auto top = std::max_element(dissent.begin(), dissent.end());
  if (top != dissent.end() && *top > 0) {
    out.verdict.suspect = parties[static_cast<std::size_t>(top - dissent.begin())].label;
  }
  return out;
}

struct ResourceVerdict {
  bool passed = true;
  double mean = 0.0;
  double standard_error = 0.0;
  double prediction = 0.0;
  int rounds = 0;
};

/// Runs the teleporting branch on candidate resource states and compares the mean
/// conditional energy with the trusted prediction (5 standard errors, 1e-12 floor).
template <class Source>
  requires std::invocable<Source&, CounterRng&>
ResourceVerdict verify_resource_state(const QetSystem& sys, const Protocol& proto, Source&& source,
                                      int rounds, std::uint64_t seed) {
  if (rounds <= 0) throw InvalidArgument("resource verification needs at least one round");
  ResourceVerdict v;
  v.rounds = rounds;
  v.prediction = run_ensemble(sys, proto).bob_energy;
  CounterRng rng(seed);
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < rounds; ++r) {
    const DensityMatrix rho = source(rng);
    if (rho.dim() != sys.ground_state().dim()) throw InvalidOperator("candidate state has wrong dimension");
    const auto t = conditional_table(sys, rho, proto);
    const int b = rng.uniform() * (t.probability[0] + t.probability[1]) < t.probability[0] ? 0 : 1;
    const double e = t.energy[b][proto.rule.applied_bit(b)];
    sum += e;
    sum2 += e * e;
  }
  v.mean = sum / rounds;
  const double var = rounds > 1 ? std::max(0.0, (sum2 - rounds * v.mean * v.mean) / (rounds - 1)) : 0.0;
  v.standard_error = std::sqrt(var / rounds);
  v.passed = std::abs(v.mean - v.prediction) <= 5.0 * v.standard_error + 1e-12;
  return v;
}

inline ResourceVerdict verify_resource_state(const QetSystem& sys, const Protocol& proto,
                                             const DensityMatrix& candidate, int rounds,
                                             std::uint64_t seed) {
  return verify_resource_state(sys, proto, [&](CounterRng&) { return candidate; }, rounds, seed);
}

}  // namespace qetkd
