#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace nibc;

namespace {

const NormTag kInf = NormTag::infinity();
NormTag P(double p) { return NormTag::finite(p); }

void expect_error(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

/// Direct scan of sup_k 2^{-n/k} (prod sigma)^{1/k} for k up to kmax, sigma
/// continued by the tail bound.
double scan_formula(const DiagonalInstance& d, std::size_t n, std::size_t kmax) {
  double best = 0.0, log_prod = 0.0;
  for (std::size_t k = 1; k <= kmax; ++k) {
    const double s = d.at(k);
    if (s <= 0.0) break;
    log_prod += std::log(s);
    best = std::max(best, std::exp((log_prod - static_cast<double>(n) * std::log(2.0)) / static_cast<double>(k)));
  }
  return best;
}

}  // namespace

TEST(FormulaDiagonal, Examples) {
  EXPECT_EQ(formula_diagonal({{1, 1}, 0.0, kInf}, 2), 0.5);
  // all ones continued forever: sup over k of 2^{-n/k} tends to 1
  for (std::size_t n : {0u, 3u, 50u}) EXPECT_EQ(formula_diagonal({{1, 1, 1}, 1.0, kInf}, n), 1.0);
  const auto s = power_sigma(1.0, 64);
  const DiagonalInstance d{s.sigma, s.tail_bound, kInf};
  const double v = formula_diagonal(d, 16);
  EXPECT_NEAR(v, scan_formula(d, 16, 64), 1e-15);
  EXPECT_GT(v * 16.0, 0.1);  // same order as 1/n
  EXPECT_LT(v * 16.0, 10.0);
  expect_error(ErrorKind::invalid_input, [] { formula_diagonal({{}, 0.0, NormTag::infinity()}, 1); });
}

TEST(FormulaDiagonal, TailExtensionMatchesLongScan) {
  oracle::Gen g(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> s = g.vec(1 + g.index(5), 0.05, 1.0);
    std::sort(s.rbegin(), s.rend());
    const DiagonalInstance d{s, s.back() * g.uniform(0.2, 1.0), kInf};
    const std::size_t n = g.index(12);
    EXPECT_GE(formula_diagonal(d, n), scan_formula(d, n, 20000) - 1e-12);
    EXPECT_NEAR(formula_diagonal(d, n), scan_formula(d, n, 20000), 1e-3);
  }
}

TEST(FormulaDiagonal, OnesGiveDyadicPowers) {
  for (std::size_t m = 1; m <= 6; ++m)
    for (std::size_t r = 0; r <= 5; ++r)
      EXPECT_EQ(formula_diagonal({std::vector<double>(m, 1.0), 0.0, kInf}, r * m), std::exp2(-static_cast<double>(r)));
}

TEST(FormulaDiagonal, Monotone) {
  const auto s = power_sigma(0.7, 20);
  const DiagonalInstance finite{s.sigma, 0.0, kInf};
  for (std::size_t n = 0; n < 60; ++n) EXPECT_LT(formula_diagonal(finite, n + 1), formula_diagonal(finite, n));
  // with a tail the supremum flattens at the tail bound
  const DiagonalInstance tailed{s.sigma, s.tail_bound, kInf};
  for (std::size_t n = 0; n < 60; ++n) {
    EXPECT_LE(formula_diagonal(tailed, n + 1), formula_diagonal(tailed, n));
    EXPECT_GE(formula_diagonal(tailed, n), s.tail_bound);
  }
}

TEST(FormulaIdentity, Examples) {
  EXPECT_EQ(formula_identity(kInf, kInf, 3, 6).value, 0.25);
  for (std::size_t n : {4u, 10u, 100u})
    EXPECT_NEAR(formula_identity(P(1), P(2), n, n).value, std::sqrt(std::log(2.0) / n), 1e-15);
  const auto f = formula_identity(P(2), kInf, 1024, 100);
  EXPECT_NEAR(f.value, std::sqrt(std::log(1024.0 / 100.0 + 1.0) / 100.0), 1e-15);
  EXPECT_TRUE(f.in_regime);
  EXPECT_TRUE(f.asymptotic);
  const auto out = formula_identity(P(2), kInf, 1024, 5);
  EXPECT_FALSE(out.in_regime);
  EXPECT_FALSE(out.warning.empty());
  expect_error(ErrorKind::invalid_input, [] { formula_identity(NormTag::infinity(), NormTag::finite(2), 4, 2); });
}

TEST(FormulaIdentity, MonotoneInNAndM) {
  for (NormTag p : {P(1), P(2)})
    for (NormTag q : {P(2), kInf}) {
      if (!(p <= q) || p == q) continue;
      for (std::size_t m : {64u, 1024u})
        for (std::size_t n = 6; n < m; n *= 2) {
          EXPECT_GT(formula_identity(p, q, m, n).value, formula_identity(p, q, m, 2 * n).value);
          EXPECT_LT(formula_identity(p, q, m, n).value, formula_identity(p, q, 2 * m, n).value);
        }
    }
}

TEST(GridCover, Examples) {
  const auto c = grid_cover_linf(2, 2);
  EXPECT_EQ(c.size(), 4u);
  EXPECT_EQ(c.radius, 0.5);
  for (const auto& x : c.centers) EXPECT_EQ(norm(x, kInf), 0.5);
  EXPECT_EQ(grid_cover_linf(1, 3).size(), 8u);
  EXPECT_EQ(grid_cover_linf(1, 3).radius, 0.125);
  EXPECT_EQ(grid_cover_linf(3, 6).size(), 64u);
  EXPECT_EQ(grid_cover_linf(3, 6).radius, 0.25);
  expect_error(ErrorKind::invalid_input, [] { grid_cover_linf(2, 3); });
  expect_error(ErrorKind::budget_exceeded, [] { grid_cover_linf(1, 21); });
}

TEST(GridCover, CoversEverySample) {
  for (std::size_t m = 1; m <= 3; ++m)
    for (std::size_t r = 0; r <= 3; ++r) {
      const auto c = grid_cover_linf(m, r * m);
      EXPECT_EQ(c.radius, std::exp2(-static_cast<double>(r)));
      const auto pts = oracle::grid(m, m == 3 ? 17 : 65, kInf);
      EXPECT_LE(certified_radius(pts, c.centers, kInf), c.radius);
    }
}

TEST(GreedyCover, Examples) {
  const auto box2 = Problem::identity(kInf, kInf, 2);
  const auto c = greedy_cover(box2, 2);
  EXPECT_LE(c.size(), 4u);
  EXPECT_LE(c.radius, 0.5 + c.resolution);
  for (const auto& x : c.centers) EXPECT_NEAR(norm(x, kInf), 0.5, c.resolution);
  const auto c1 = greedy_cover(Problem::identity(kInf, kInf, 1), 1);
  EXPECT_NEAR(c1.radius, 0.5, c1.resolution);
  const auto d = Problem::diagonal({1, 0.5}, 0.0, kInf);
  const auto cd = greedy_cover(d, 2);
  EXPECT_LE(cd.radius, 6 * formula_diagonal(d.as_diagonal(), 2) + cd.resolution);
  EXPECT_TRUE(cd.sample_certified);
  expect_error(ErrorKind::budget_exceeded, [&] { greedy_cover(box2, 21); });
  expect_error(ErrorKind::unsupported_instance, [] { greedy_cover(Problem::identity(NormTag::infinity(), NormTag::infinity(), 7), 1); });
}

TEST(PackingLower, Examples) {
  EXPECT_GE(packing_lower(Problem::identity(kInf, kInf, 1), 1), 0.5);
  EXPECT_GE(packing_lower(Problem::identity(kInf, kInf, 2), 2), 0.5 - 1e-15);
  EXPECT_EQ(packing_lower(Problem::diagonal({0}, 0.0, kInf), 3), 0.0);
  EXPECT_NEAR(volume_lower(Problem::identity(kInf, kInf, 2), 2), 0.5, 1e-15);
}

TEST(Sandwich, Examples) {
  const auto e = sandwich(Problem::identity(kInf, kInf, 2), 2);
  EXPECT_NEAR(e.lower, 0.5, 1e-15);
  EXPECT_NEAR(e.upper, 0.5, e.resolution);
  EXPECT_EQ(e.formula, 0.5);
  for (std::size_t n : {1u, 2u, 3u}) {
    const auto d = sandwich(Problem::diagonal({1, 0.5}, 0.0, kInf), n);
    EXPECT_TRUE(d.band_checked);
    EXPECT_LE(std::max(d.formula, d.lower), std::min(6 * d.formula, d.upper + d.resolution));
  }
  const auto z = sandwich(Problem::diagonal({0}, 0.0, kInf), 2);
  EXPECT_EQ(z.lower, 0.0);
  EXPECT_EQ(z.upper, 0.0);
  EXPECT_EQ(z.formula, 0.0);
}

TEST(EntropyProperty, CoverMonotoneAndAboveLower) {
  const std::vector<Problem> probs{Problem::identity(kInf, kInf, 2), Problem::identity(P(2), P(2), 2),
                                   Problem::identity(P(1), kInf, 2), Problem::diagonal({1, 0.4}, 0.0, kInf),
                                   Problem::diagonal({1, 0.7, 0.2}, 0.0, P(2))};
  CoverOptions opt;
  opt.sample.grid_bits = 5;
  for (const auto& prob : probs) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n <= 5; ++n) {
      const auto c = greedy_cover(prob, n, opt);
      EXPECT_LE(c.radius, prev + c.resolution) << prob.describe() << " n=" << n;
      EXPECT_LE(packing_lower(prob, n, opt.sample), c.radius + c.resolution) << prob.describe() << " n=" << n;
      prev = c.radius;
    }
  }
}

TEST(EntropyProperty, DiagonalBandOverlapOnRandomSigma) {
  oracle::Gen g(9);
  CoverOptions opt;
  opt.sample.grid_bits = 6;
  for (int t = 0; t < 10; ++t) {
    std::vector<double> s = g.vec(2, 0.1, 1.0);
    std::sort(s.rbegin(), s.rend());
    const auto prob = Problem::diagonal(s, 0.0, kInf);
    for (std::size_t n = 0; n <= 4; ++n) EXPECT_NO_THROW(sandwich(prob, n, opt)) << s[0] << "," << s[1] << " n=" << n;
  }
}
