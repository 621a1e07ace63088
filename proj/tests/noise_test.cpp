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

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "qetkd/noise.hpp"

namespace qetkd {
namespace {

// Values below were produced by a separate numpy implementation (dense matrices,
// scipy brentq for crossings) and frozen here.
constexpr double kOptimalJ = 2.6857;          // minimiser of the two-basis E_B for chain3
constexpr double kOptimalEB = -0.011643;      // E_B at that coupling
constexpr double kStarClassicalPStar = 0.25492;

RunContext chain_fixed(double j) { return RunContext::make(chain3(j)); }

TEST(ParallelMap, PreservesOrderAndPropagatesErrors) {
  std::vector<int> in(100);
  for (int i = 0; i < 100; ++i) in[i] = i;
  const auto out = parallel_map(in, [](int x) { return x * x; }, 4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(out[i], i * i);
  EXPECT_THROW(parallel_map(in, [](int x) -> int {
                 if (x == 37) throw std::runtime_error("boom");
                 return x;
               }, 3),
               std::runtime_error);
  const auto g = linspace(0, 1, 101);
  EXPECT_EQ(g.size(), 101u);
  EXPECT_EQ(g[50], 0.5);
  EXPECT_EQ(g.back(), 1.0);
}

TEST(NoiseSpec, Validation) {
  EXPECT_THROW((NoiseSpec{NoiseKind::classical_flip, 1.5}.validate(3)), InvalidArgument);
  EXPECT_THROW((NoiseSpec{NoiseKind::bit_flip, 0.1}.validate(3)), InvalidArgument);
  EXPECT_THROW((NoiseSpec{NoiseKind::bit_flip, 0.1, 3}.validate(3)), InvalidArgument);
  EXPECT_NO_THROW((NoiseSpec{NoiseKind::phase_flip, 0.1, 2}.validate(3)));
  EXPECT_EQ(noise_kind_from_string("superposition"), NoiseKind::excited_superposition);
  EXPECT_THROW(noise_kind_from_string("nope"), InvalidArgument);
}

TEST(ClassicalFlip, ZeroIsNoiseless) {
  const auto ctx = chain_fixed(1.0);
  EXPECT_EQ(apply_classical_flip(ctx, 0.0).bob_energy, noiseless_run(ctx).bob_energy);
}

TEST(ClassicalFlip, LinearInFlipProbability) {
  const auto id = chain_fixed(1.3);
  const auto fl = RunContext::make(chain3(1.3), BasisPolicy::fixed, "bob", BitMap::flip);
  const double e0 = noiseless_run(id).bob_energy, e1 = noiseless_run(fl).bob_energy;
  for (double p : {0.1, 0.25, 0.6, 0.9}) {
    EXPECT_NEAR(apply_classical_flip(id, p).bob_energy, (1 - p) * e0 + p * e1, 1e-10);
  }
}

TEST(ClassicalFlip, HalfFlipGivesXiSinSquared) {
  const auto ctx = chain_fixed(1.0);
  const auto& t = ctx.bases[0].protocol.params;
  const double s = std::sin(t.theta);
  EXPECT_NEAR(apply_classical_flip(ctx, 0.5).bob_energy, t.xi * s * s, 1e-10);
  EXPECT_GE(apply_classical_flip(ctx, 0.5).bob_energy, 0.0);
}

TEST(ClassicalFlip, StarThresholdNearQuarter) {
  const auto ctx = RunContext::make(star(2, 1.0));
  const auto r = threshold_scan(ctx, {NoiseKind::classical_flip});
  ASSERT_EQ(r.status, CrossingStatus::crossing);
  ASSERT_EQ(r.crossings.size(), 1u);
  EXPECT_NEAR(*r.p_star(), 0.25, 0.03);
  EXPECT_NEAR(*r.p_star(), kStarClassicalPStar, 2e-4);
  EXPECT_LT(r.bob_energy.front(), 0.0);
  EXPECT_GT(r.bob_energy.back(), 0.0);
}

TEST(ClassicalFlip, ThresholdIdentityOverCouplings) {
  // p* = R / (2 (R + xi)) = 1 / (4 cos^2 theta)
  for (double j : {0.5, 1.0, 2.0, 3.0}) {
    const auto ctx = chain_fixed(j);
    const auto& t = ctx.bases[0].protocol.params;
    const auto r = threshold_scan(ctx, {NoiseKind::classical_flip});
    ASSERT_TRUE(r.p_star());
    EXPECT_NEAR(*r.p_star(), t.radius() / (2 * (t.radius() + t.xi)), 1e-4) << "J = " << j;
    EXPECT_NEAR(*r.p_star(), 0.25 / std::pow(std::cos(t.theta), 2), 1e-4);
  }
}

TEST(MixState, Endpoints) {
  const auto& g = chain_fixed(1.0).system.ground_density();
  const auto mm = DensityMatrix::maximally_mixed(3);
  EXPECT_LT((mix_state(g, mm, 0.0).matrix() - g.matrix()).norm(), 1e-15);
  EXPECT_LT((mix_state(g, mm, 1.0).matrix() - mm.matrix()).norm(), 1e-15);
  EXPECT_NEAR(mix_state(g, mm, 0.37).matrix().trace().real(), 1.0, 1e-12);
  EXPECT_THROW(mix_state(g, DensityMatrix::maximally_mixed(2), 0.5), InvalidOperator);
}

TEST(Depolarize, ExactScaling) {
  const auto ctx = chain_fixed(1.0);
  const auto e0 = noiseless_run(ctx);
  for (int i = 1; i <= 9; ++i) {
    const double p = 0.1 * i;
    const auto e = depolarize_run(ctx, p);
    EXPECT_NEAR(e.bob_energy / e0.bob_energy, 1 - p, 1e-10);
    EXPECT_NEAR(e.alice_energy / e0.alice_energy, 1 - p, 1e-10);
  }
  const auto one = depolarize_run(ctx, 1.0);
  EXPECT_NEAR(one.bob_energy, 0.0, 1e-14);
  EXPECT_NEAR(one.alice_energy, 0.0, 1e-14);
}

TEST(Depolarize, NoCrossing) {
  const auto r = threshold_scan(RunContext::make(chain3(1.0), BasisPolicy::two_basis),
                                {NoiseKind::depolarize}, linspace(0.0, 0.99, 100));
  EXPECT_EQ(r.status, CrossingStatus::no_crossing);
  for (double e : r.bob_energy) EXPECT_LT(e, 0.0);
}

TEST(OptimalCoupling, MatchesOracle) {
  const auto opt = optimal_chain3_coupling();
  EXPECT_NEAR(opt.coupling, kOptimalJ, 5e-3);
  EXPECT_NEAR(opt.bob_energy, kOptimalEB, 1e-5);
}

TEST(Excited, DegenerateLevelAtZeroCoupling) {
  const QetSystem sys(chain3(0.0));
  EXPECT_EQ(first_excited_level(sys).vectors.size(), 3u);
  EXPECT_NEAR(first_excited_density(sys).matrix().trace().real(), 1.0, 1e-12);
  EXPECT_EQ(first_excited_level(QetSystem(chain3(1.0))).vectors.size(), 1u);
}

TEST(Excited, MixtureIsConvexCombination) {
  const auto ctx = RunContext::make(chain3(1.0), BasisPolicy::two_basis);
  const auto g = noiseless_run(ctx);
  const auto s = run_on_input(ctx, first_excited_density(ctx.system));
  for (double p : {0.0, 0.2, 0.7}) {
    const auto e = excited_mixture_run(ctx, p);
    EXPECT_NEAR(e.bob_energy, (1 - p) * g.bob_energy + p * s.bob_energy, 1e-10);
    EXPECT_NEAR(e.alice_energy, (1 - p) * g.alice_energy + p * s.alice_energy, 1e-10);
  }
}

TEST(Excited, ThresholdsInExpectedBand) {
  for (auto policy : {BasisPolicy::fixed, BasisPolicy::two_basis}) {
    const auto ctx = RunContext::make(chain3(kOptimalJ), policy);
    for (auto kind : {NoiseKind::excited_mixture, NoiseKind::excited_superposition}) {
      const auto r = threshold_scan(ctx, {kind});
      ASSERT_TRUE(r.p_star()) << to_string(kind);
      EXPECT_GE(*r.p_star(), 0.15);
      EXPECT_LE(*r.p_star(), 0.30);
    }
  }
}

TEST(Excited, SuperpositionPhaseHasNegligibleEffect) {
  const auto ctx = RunContext::make(chain3(1.0), BasisPolicy::two_basis);
  const double e0 = noiseless_run(ctx).bob_energy;
  const double ref = excited_superposition_run(ctx, 0.1, 0.0).bob_energy;
  for (int k = 1; k < 8; ++k) {
    const double e = excited_superposition_run(ctx, 0.1, k * std::numbers::pi / 4).bob_energy;
    EXPECT_LE(std::abs(e - ref), 0.05 * std::abs(e0));
  }
  EXPECT_EQ(excited_superposition_run(ctx, 0.0).bob_energy, e0);
}

TEST(Excited, SuperpositionLowersAliceEnergy) {
  const auto ctx = RunContext::make(chain3(kOptimalJ), BasisPolicy::two_basis);
  double prev = noiseless_run(ctx).alice_energy;
  for (double p = 0.1; p <= 0.5; p += 0.1) {
    const double e = excited_superposition_run(ctx, p).alice_energy;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(PauliFlip, XAtAliceLeavesBobInvariant) {
  const auto ctx = chain_fixed(kOptimalJ);
  const double e0 = noiseless_run(ctx).bob_energy;
  for (double p : {0.1, 0.5, 0.9, 1.0}) {
    EXPECT_NEAR(pauli_flip_run(ctx, Axis::X, 0, p).bob_energy, e0, 1e-10);
  }
  const auto r = threshold_scan(ctx, {NoiseKind::bit_flip, 0.0, 0});
  EXPECT_EQ(r.status, CrossingStatus::no_crossing);
}

TEST(PauliFlip, XAtBobCrossesEarly) {
  const auto r = threshold_scan(chain_fixed(kOptimalJ), {NoiseKind::bit_flip, 0.0, 2});
  ASSERT_TRUE(r.p_star());
  EXPECT_LT(*r.p_star(), 0.05);
  EXPECT_NEAR(*r.p_star(), 0.036, 2e-3);
}

TEST(PauliFlip, ZFlipChangesBobEnergyAtBothSites) {
  const auto ctx = chain_fixed(kOptimalJ);
  const double e0 = noiseless_run(ctx).bob_energy;
  for (int site : {0, 2}) {
    const double e = pauli_flip_run(ctx, Axis::Z, site, 0.1).bob_energy;
    EXPECT_GE(std::abs(e - e0), 0.1 * std::abs(e0)) << "site " << site;
  }
  EXPECT_THROW(pauli_flip_run(ctx, Axis::Y, 0, 0.1), InvalidArgument);
}

TEST(LocalKraus, StarSpectatorSiteIsInvariant) {
  const auto ctx = RunContext::make(star(2, 1.0));
  const double g = 0.3;
  Eigen::Matrix2cd k0, k1;
  k0 << 1, 0, 0, std::sqrt(1 - g);
  k1 << 0, std::sqrt(g), 0, 0;
  const auto r = local_kraus_run(ctx, 2, {embed_on_site(k0, 2, 3), embed_on_site(k1, 2, 3)});
  const auto e0 = noiseless_run(ctx);
  EXPECT_TRUE(r.preconditions_hold);
  EXPECT_NEAR(r.outcome.bob_energy, e0.bob_energy, 1e-10);
  EXPECT_NEAR(r.outcome.alice_energy, e0.alice_energy, 1e-10);
}

TEST(LocalKraus, ChainBufferBitFlipIsInvariant) {
  const auto ctx = chain_fixed(1.0);
  const double p = 0.4;
  const auto r = local_kraus_run(ctx, 1, {std::sqrt(1 - p) * Operator::identity(3),
                                          std::sqrt(p) * pauli_on_site(Axis::X, 1, 3)});
  EXPECT_TRUE(r.preconditions_hold);
  EXPECT_NEAR(r.outcome.bob_energy, noiseless_run(ctx).bob_energy, 1e-10);
}

TEST(LocalKraus, ChainBufferDephasingViolationIsReported) {
  const auto ctx = chain_fixed(1.0);
  const double p = 0.4;
  const auto r = local_kraus_run(ctx, 1, {std::sqrt(1 - p) * Operator::identity(3),
                                          std::sqrt(p) * pauli_on_site(Axis::Z, 1, 3)});
  EXPECT_FALSE(r.preconditions_hold);
  EXPECT_GT(r.commutator_norm, 1.0);
  EXPECT_GT(std::abs(r.outcome.bob_energy - noiseless_run(ctx).bob_energy), 1e-6);
}

TEST(LocalKraus, IdentityChannelAndErrors) {
  const auto ctx = chain_fixed(1.0);
  const auto r = local_kraus_run(ctx, 1, {Operator::identity(3)});
  EXPECT_TRUE(r.preconditions_hold);
  EXPECT_NEAR(r.outcome.bob_energy, noiseless_run(ctx).bob_energy, 1e-14);
  EXPECT_THROW(local_kraus_run(ctx, 0, {Operator::identity(3)}), SupportViolation);
  EXPECT_THROW(local_kraus_run(ctx, 2, {Operator::identity(3)}), SupportViolation);
  EXPECT_THROW(local_kraus_run(ctx, 1, {pauli_on_site(Axis::X, 0, 3)}), SupportViolation);
  EXPECT_THROW(local_kraus_run(ctx, 1, {0.5 * Operator::identity(3)}), CompletenessViolation);
}

TEST(EmbedOnSite, MatchesPauli) {
  Eigen::Matrix2cd y;
  y << 0, Complex(0, -1), Complex(0, 1), 0;
  EXPECT_LT((embed_on_site(y, 1, 3) - pauli_on_site(Axis::Y, 1, 3)).frobenius_norm(), 1e-15);
}

TEST(ThresholdScan, ReportsEveryCrossing) {
  const auto r = threshold_scan_with("cos", linspace(0, 10, 101), [](double p) {
    QetOutcome o;
    o.bob_energy = std::cos(p);
    return o;
  });
  ASSERT_EQ(r.crossings.size(), 3u);
  EXPECT_NEAR(r.crossings[0], std::numbers::pi / 2, 1e-4);
  EXPECT_NEAR(r.crossings[2], 5 * std::numbers::pi / 2, 1e-4);
}

TEST(ThresholdScan, RoundingZerosHaveNoSign) {
  // linear decay to a value that is zero up to rounding: no crossing at the endpoint
  const auto r = threshold_scan_with("ramp", linspace(0, 1, 11), [](double p) {
    QetOutcome o;
    o.bob_energy = p == 1.0 ? 3e-17 : -(1 - p);
    return o;
  });
  EXPECT_EQ(r.status, CrossingStatus::no_crossing);
  // a grid point landing on a zero does not hide a real crossing
  const auto s = threshold_scan_with("line", linspace(0, 1, 11), [](double p) {
    QetOutcome o;
    o.bob_energy = std::abs(p - 0.5) < 1e-15 ? 0.0 : p - 0.5;
    return o;
  });
  ASSERT_EQ(s.crossings.size(), 1u);
  EXPECT_NEAR(s.crossings[0], 0.5, 1e-4);
}

TEST(NoisyState, AgreesWithDirectRuns) {
  const auto ctx = chain_fixed(1.4);
  for (auto kind : {NoiseKind::depolarize, NoiseKind::excited_mixture,
                    NoiseKind::excited_superposition}) {
    NoiseSpec s{kind, 0.3};
    EXPECT_NEAR(run_on_input(ctx, noisy_state(ctx.system, s)).bob_energy, run_noise(ctx, s).bob_energy,
                1e-12);
  }
  NoiseSpec flip{NoiseKind::bit_flip, 0.2, 2};
  EXPECT_NEAR(run_on_input(ctx, noisy_state(ctx.system, flip)).bob_energy,
              run_noise(ctx, flip).bob_energy, 1e-12);
  EXPECT_EQ(noisy_state(ctx.system, {NoiseKind::classical_flip, 0.3}).matrix(),
            ctx.system.ground_density().matrix());
}

}  // namespace
}  // namespace qetkd
