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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qetkd/qkd.hpp"

namespace qetkd {
namespace {

SessionConfig chain_session(int rounds, std::uint64_t seed = 7) {
  SessionConfig c;
  c.model = {ModelKind::chain3, 1, 1, 1.0};
  c.rounds = rounds;
  c.seed = seed;
  return c;
}

TEST(Session, NoiselessKeyIsExact) {
  for (auto policy : {SessionPolicy::fixed, SessionPolicy::two_basis}) {
    auto cfg = chain_session(256);
    cfg.policy = policy;
    const auto r = run_session(cfg);
    ASSERT_EQ(r.parties.size(), 1u);
    const auto& bob = r.parties[0];
    EXPECT_EQ(bob.label, "bob");
    EXPECT_EQ(bob.match_rate, 1.0) << to_string(policy);
    EXPECT_EQ(bob.erasures, 0);
    EXPECT_TRUE(r.verification.passed);
    EXPECT_EQ(r.verification.bits_compared, 64);
    EXPECT_EQ(bob.bits, r.alice_key);
  }
}

TEST(Session, HaarDrawsDecodeOnlyNearTheEquator) {
  // A z component in Alice's axis breaks the chain's spin-flip parity: the receiver's
  // conditional energy picks up an outcome-dependent offset -/+<sigma_A H_B>/(2 p_b)
  // that outweighs the teleported term, so sign decoding fails for those draws.
  auto cfg = chain_session(1000);
  cfg.policy = SessionPolicy::haar;
  cfg.verification_bits = 0;
  const auto r = run_session(cfg);
  int near_equator = 0;
  for (int i = 0; i < cfg.rounds; ++i) {
    if (std::abs(r.rounds[i].basis[2]) < 0.1) {
      ++near_equator;
      EXPECT_EQ(r.parties[0].bits[i], r.alice_key[i]) << "round " << i;
    }
  }
  EXPECT_GT(near_equator, 50);
  EXPECT_LT(r.parties[0].match_rate, 0.9);
}

TEST(Session, NoiselessMarginExceedsThreshold) {
  const auto cfg = chain_session(256);
  const auto r = run_session(cfg);
  const QetSystem sys(chain3(1.0));
  const double eps = std::abs(run_ensemble(sys, optimal_protocol(sys, MeasurementBasis::along(Axis::X, 0),
                                                                 "bob")).bob_energy) / 10;
  double margin = 1e300;
  for (double e : r.parties[0].energies) margin = std::min(margin, std::abs(e));
  EXPECT_GT(margin, eps);
}

TEST(Session, ClassicalFlipAboveThresholdFailsVerification) {
  auto cfg = chain_session(256);
  cfg.noise = NoiseSpec{NoiseKind::classical_flip, 0.4};
  const auto r = run_session(cfg);
  EXPECT_LT(r.parties[0].match_rate, 0.8);
  EXPECT_FALSE(r.verification.passed);
  EXPECT_GT(r.verification.mismatches, 0);
}

TEST(Session, ZeroRoundsIsVacuous) {
  const auto r = run_session(chain_session(0));
  EXPECT_TRUE(r.alice_key.empty());
  EXPECT_TRUE(r.verification.passed);
  EXPECT_EQ(r.verification.bits_compared, 0);
}

TEST(Session, DeterministicTranscripts) {
  const auto a = run_session(chain_session(256, 7)).transcript();
  const auto b = run_session(chain_session(256, 7)).transcript();
  const auto c = run_session(chain_session(256, 8)).transcript();
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Session, TranscriptFormat) {
  auto cfg = chain_session(3);
  const auto text = run_session(cfg).transcript();
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "round,basis_n1,basis_n2,basis_n3,announced_bit,party,cond_energy,decoded_bit");
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 7);
    EXPECT_EQ(line.rfind(std::to_string(rows) + ",1,0,0,", 0), 0u) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 3);
}

TEST(Session, ComplementedBitsDecodeComplemented) {
  const auto honest = run_session(chain_session(128, 3));
  const auto flipped = run_session(chain_session(128, 3), {"bob"});
  for (int r = 0; r < 128; ++r) {
    EXPECT_EQ(flipped.parties[0].bits[r], 1 - honest.parties[0].bits[r]);
  }
}

TEST(Session, ErasureAbort) {
  auto cfg = chain_session(64);
  cfg.epsilon = 1.0;
  EXPECT_THROW(run_session(cfg), TooManyErasures);
  cfg.epsilon = -1.0;
  EXPECT_THROW(run_session(cfg), InvalidArgument);
}

TEST(Session, ShotReadoutStillDecodesMostBits) {
  auto cfg = chain_session(400);
  cfg.readout = EnergyReadout::shot;
  cfg.epsilon = 1e-9;
  const auto r = run_session(cfg);
  // single eigenvalue samples are noisy; the key carries only a weak bias
  EXPECT_GT(r.parties[0].match_rate, 0.4);
  EXPECT_EQ(r.transcript(), run_session(cfg).transcript());
}

TEST(Session, PartitionViolationSurfaces) {
  SessionConfig cfg;
  cfg.model = {ModelKind::star, 1, 1, 1.0, 2};
  cfg.rounds = 16;
  cfg.policy = SessionPolicy::two_basis;
  EXPECT_THROW(run_session(cfg), PartitionViolation);
  EXPECT_THROW(run_session(chain_session(4), {"nobody"}), InvalidArgument);
}

SessionConfig star_session(int n, int rounds) {
  SessionConfig cfg;
  cfg.model = {ModelKind::star, 1, 1, 1.0, n};
  cfg.rounds = rounds;
  cfg.seed = 21;
  return cfg;
}

TEST(Multiparty, HonestIsUnanimous) {
  const auto r = run_multiparty(star_session(2, 200));
  EXPECT_FALSE(r.verdict.inconsistent);
  EXPECT_EQ(r.verdict.agreement_rate, 1.0);
  EXPECT_FALSE(r.verdict.suspect);
  for (const auto& p : r.session.parties) EXPECT_EQ(p.match_rate, 1.0);
}

TEST(Multiparty, VictimSignOpposesHonestParty) {
  const auto r = run_multiparty(star_session(2, 200), {"party2"});
  const auto& a = r.session.parties[0].energies;
  const auto& b = r.session.parties[1].energies;
  for (int i = 0; i < 200; ++i) EXPECT_LT(a[i] * b[i], 0.0);
  EXPECT_TRUE(r.verdict.inconsistent);
  EXPECT_EQ(r.verdict.inconsistent_rounds, 200);
  EXPECT_FALSE(r.verdict.suspect);  // two parties cannot tell who was cheated
}

TEST(Multiparty, MajorityIdentifiesVictim) {
  const auto r = run_multiparty(star_session(3, 100), {"party3"});
  ASSERT_TRUE(r.verdict.suspect);
  EXPECT_EQ(*r.verdict.suspect, "party3");
  EXPECT_THROW(run_multiparty(chain_session(4)), InvalidArgument);
}

struct ResourceFixture {
  QetSystem sys{chain3(1.0)};
  Protocol proto = make_protocol(sys, MeasurementBasis::along(Axis::X, 0), {0, 1, 0}, "bob");
};

TEST(ResourceState, GroundStatePasses) {
  ResourceFixture f;
  const auto v = verify_resource_state(f.sys, f.proto, f.sys.ground_density(), 10000, 1);
  EXPECT_TRUE(v.passed) << v.mean << " vs " << v.prediction;
}

TEST(ResourceState, MaximallyMixedFails) {
  ResourceFixture f;
  const auto v = verify_resource_state(f.sys, f.proto, DensityMatrix::maximally_mixed(3), 1000, 1);
  EXPECT_FALSE(v.passed);
  EXPECT_NEAR(v.mean, 0.0, 1e-12);
  EXPECT_LT(v.prediction, 0.0);
}

TEST(ResourceState, SplitPairsFail) {
  ResourceFixture f;
  const auto product = product_of_marginals(f.sys.ground_density(), 0);
  const auto v = verify_resource_state(f.sys, f.proto, product, 10000, 2);
  EXPECT_FALSE(v.passed) << v.mean << " +- " << v.standard_error;
}

}  // namespace
}  // namespace qetkd
