#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace nibc;

namespace {

const NormTag kInf = NormTag::infinity();
NormTag P(double p) { return NormTag::finite(p); }

}  // namespace

TEST(LinearFloor, Examples) {
  for (std::size_t m : {1u, 3u, 8u}) EXPECT_NEAR(linear_floor(Problem::identity(P(2), kInf, m), 0.3).claimed_bound, 0.3, 1e-15);
  EXPECT_NEAR(linear_floor(Problem::diagonal({0.8, 0.1}, 0.0, kInf), 0.5).claimed_bound, 0.4, 1e-15);
  EXPECT_EQ(linear_floor(Problem::identity(kInf, kInf, 2), 0.0).claimed_bound, 0.0);
  // p > q: the floor scales with the embedding norm
  EXPECT_NEAR(linear_floor(Problem::identity(kInf, P(1), 4), 0.25).claimed_bound, 1.0, 1e-12);
}

TEST(LinearFloor, WitnessesShareZeroInformation) {
  oracle::Gen g(3);
  for (int t = 0; t < 50; ++t) {
    const auto prob = Problem::identity(g.norm_tag(), g.norm_tag(), 1 + g.index(4));
    const double delta = g.uniform(0.0, 0.99);
    const auto cert = linear_floor(prob, delta, 3);
    ASSERT_TRUE(cert.verified);
    // every linear functional of dual norm <= 1 stays within delta on both witnesses
    for (int k = 0; k < 20; ++k) {
      std::vector<double> w = g.vec(prob.dim(), -1, 1);
      const double dn = norm(w, prob.domain_norm().dual());
      if (dn == 0.0) continue;
      for (double& x : w) x /= dn * (1 + 1e-12);
      const Functional lam{LinearForm{Point(w)}, DeclaredClass::linear()};
      if (!validate(lam, prob).admissible()) continue;
      for (const auto& wit : cert.witnesses) EXPECT_LE(std::abs(evaluate(lam, prob, wit.f)), delta);
    }
  }
}

TEST(LinearFloor, VerifiesAgainstLinearPoliciesOnly) {
  const auto d = Problem::diagonal({1, 0.5, 0.25}, 0.0, kInf);
  const auto cert = linear_floor(d, 0.2, 2);
  const auto chk = verify_against(cert, build_diag_truncation_policy(d, 2), d);
  EXPECT_TRUE(chk.ok) << chk.reason;
  EXPECT_GE(chk.witnessed_error, cert.claimed_bound);
  const auto box = Problem::identity(kInf, kInf, 1);
  const auto c2 = linear_floor(box, 0.5, 2);
  EXPECT_FALSE(verify_against(c2, build_coord_refine_policy(1, 2, 0.5), box).ok);
}

TEST(LipschitzFloor, Examples) {
  for (std::size_t m : {1u, 2u, 3u}) {
    const auto prob = Problem::identity(kInf, kInf, m);
    const auto cert = lipschitz_floor(prob, 1.0, 0.25);
    EXPECT_EQ(cert.claimed_bound, 0.25);
    EXPECT_EQ(cert.witnesses[0].f, Point::zeros(m));
    EXPECT_EQ(cert.witnesses[1].f, Point::basis(m, 0, 0.5));
    EXPECT_TRUE(cert.verified);
  }
  for (double delta : {0.25, 0.5})
    for (int r = 1; r <= 3; ++r) {
      const auto prob = Problem::identity(kInf, kInf, 2);
      const auto cert = lipschitz_floor(prob, std::pow(delta, 1 - r), delta);
      EXPECT_NEAR(cert.claimed_bound, std::pow(delta, r), 1e-12);
      const auto chk = verify_against(cert, build_coord_refine_policy(2, r, delta), prob);
      EXPECT_TRUE(chk.ok) << chk.reason;
      EXPECT_GE(chk.witnessed_error, cert.claimed_bound - 1e-15);
    }
  EXPECT_LT(lipschitz_floor(Problem::identity(kInf, kInf, 1), 1e9, 0.5).claimed_bound, 1e-9);
}

TEST(LipschitzFloor, RejectsPolicyWithLargerConstant) {
  // a refinement policy with more rounds uses steeper functionals
  const auto prob = Problem::identity(kInf, kInf, 1);
  const auto cert = lipschitz_floor(prob, 1.0, 0.5);
  EXPECT_FALSE(verify_against(cert, build_coord_refine_policy(1, 4, 0.5), prob).ok);
}

TEST(BoundsProperty, LipschitzFloorMonotone) {
  oracle::Gen g(13);
  for (int t = 0; t < 300; ++t) {
    const auto prob = g.coin() ? Problem::identity(g.norm_tag(), g.norm_tag(), 1 + g.index(3))
                               : Problem::diagonal({1.0, 0.5}, 0.25, g.norm_tag());
    const double L1 = g.uniform(0.1, 10), L2 = L1 * g.uniform(1, 4);
    const double d1 = g.uniform(0.01, 0.9), d2 = d1 + g.uniform(0, 0.99 - d1);
    EXPECT_GE(lipschitz_floor(prob, L1, d1).claimed_bound + 1e-12, lipschitz_floor(prob, L2, d1).claimed_bound);
    EXPECT_LE(lipschitz_floor(prob, L1, d1).claimed_bound, lipschitz_floor(prob, L1, d2).claimed_bound + 1e-12);
    const auto c = lipschitz_floor(prob, L1, d1);
    EXPECT_TRUE(c.verified);
    EXPECT_NEAR(c.claimed_bound, modulus(prob, 2 * d1 / L1) / 2, 1e-9);
  }
}

TEST(GridAdversary, OutputsCollapseToDyadicCount) {
  const double delta = 0.5;
  const auto line = Problem::identity(kInf, kInf, 1);
  const auto box = Problem::identity(kInf, kInf, 2);
  const auto cover = grid_cover_linf(2, 2);
  const std::vector<std::pair<Policy, Problem>> cases{
      {build_coord_refine_policy(1, 2, delta), line},
      {build_coord_refine_policy(2, 1, delta), box},
      {build_bisection_policy(cover, default_bisection_params(delta, 2, cover.radius)), box},
      {build_encoder_policy(grid_cover_linf(1, 3), 3, delta), line}};
  for (const auto& [pol, prob] : cases) {
    const auto cert = grid_adversary(pol, prob, delta);
    EXPECT_TRUE(cert.verified);
    EXPECT_LE(cert.distinct_outputs, std::size_t{1} << pol.budget()) << pol.name();
    const auto chk = verify_against(cert, pol, prob);
    EXPECT_TRUE(chk.ok) << chk.reason;
  }
}

TEST(GridAdversary, EncoderMatchedCover) {
  const double delta = 0.4;  // k = 2, k' = 1
  const auto line = Problem::identity(kInf, kInf, 1);
  const std::size_t n = 2;
  const auto pol = build_encoder_policy(grid_cover_linf(1, n), n, delta);
  const auto cert = grid_adversary(pol, line, delta);
  const double eps_nk = grid_cover_linf(1, n * k_delta(delta)).radius;
  EXPECT_GE(cert.claimed_bound, eps_nk - cert.resolution);
  EXPECT_LE(cert.claimed_bound, grid_cover_linf(1, n).radius + 1e-15);
}

TEST(GridAdversary, ZeroMeasurementPolicy) {
  const auto box = Problem::identity(kInf, kInf, 2);
  const auto cert = grid_adversary(constant_policy(Point{0, 0}), box, 0.3);
  EXPECT_EQ(cert.claimed_bound, 1.0);
  EXPECT_GE(cert.claimed_bound, packing_lower(box, 0));
  EXPECT_EQ(cert.distinct_outputs, 1u);
}

TEST(BoundsProperty, ForcedTranscriptsReverifyExactly) {
  oracle::Gen g(17);
  for (int t = 0; t < 20; ++t) {
    const double delta = g.uniform(0.05, 0.95);
    const std::size_t m = 1 + g.index(2);
    const auto box = Problem::identity(kInf, kInf, m);
    const auto pol = build_coord_refine_policy(m, 1 + static_cast<int>(g.index(2)), delta);
    GridAdversaryOptions go;
    go.sample.grid_bits = 4;
    const auto cert = grid_adversary(pol, box, delta, go);
    ASSERT_TRUE(cert.verified);
    for (const auto& w : cert.witnesses) {
      EXPECT_TRUE(transcript_admissible(w.forced, box, w.f, delta));
      for (const auto& obs : w.forced.entries)
        EXPECT_TRUE(std::abs(obs.y - evaluate(obs.functional, box, w.f)) <= std::exp2(-k_delta(delta)));
    }
  }
}

TEST(Certificate, CsvShape) {
  const auto cert = lipschitz_floor(Problem::identity(kInf, kInf, 2), 1.0, 0.25);
  EXPECT_EQ(cert.to_csv(), "LipschitzFloor,0.25,true,\"[0.0,0.0]\"\nLipschitzFloor,0.25,true,\"[0.5,0.0]\"\n");
}
