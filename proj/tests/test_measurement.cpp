#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"

using namespace nibc;

namespace {

const NormTag kInf = NormTag::infinity();

void expect_error(ErrorKind kind, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << to_string(kind);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

Functional linear(Point w) { return {LinearForm{std::move(w)}, DeclaredClass::linear()}; }

}  // namespace

TEST(Validate, Examples) {
  const auto box = Problem::identity(kInf, kInf, 2);
  const auto rep = validate(linear(Point{1, 0}), box);
  ASSERT_TRUE(rep.dual_norm);
  EXPECT_EQ(*rep.dual_norm, 1.0);
  EXPECT_TRUE(rep.admissible());
  expect_error(ErrorKind::class_mismatch, [&] { validate(linear(Point{2, 0}), box); });

  const auto line = Problem::identity(kInf, kInf, 1);
  const Functional cr{CoordRefine{0, nullptr, 0.1, 2, 0.5}, DeclaredClass::lipschitz(2.0)};
  const auto r2 = validate(cr, line);
  ASSERT_TRUE(r2.lipschitz_estimate);
  EXPECT_EQ(*r2.lipschitz_estimate, 2.0);
  EXPECT_TRUE(r2.admissible());
  // finite-difference confirmation
  double worst = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const double x = -1.0 + 2.0 * i / 1999.0, y = std::min(1.0, x + 1e-4);
    if (y == x) continue;
    const double d = std::abs(evaluate(cr, line, Point{y}) - evaluate(cr, line, Point{x})) / (y - x);
    worst = std::max(worst, d);
  }
  EXPECT_LE(worst, 2.0 + 1e-9);
  EXPECT_GE(worst, 2.0 - 1e-6);
}

TEST(Validate, LipschitzDeclarationTooSmallIsInadmissible) {
  const auto line = Problem::identity(kInf, kInf, 1);
  const Functional cr{CoordRefine{0, nullptr, 0.0, 3, 0.5}, DeclaredClass::lipschitz(2.0)};
  EXPECT_FALSE(validate(cr, line).admissible());
  expect_error(ErrorKind::admissibility_violation, [&] { require_admissible(cr, line); });
}

TEST(Validate, DualNormMatchesSphereSearch) {
  oracle::Gen g(21);
  for (int t = 0; t < 16; ++t) {
    const std::size_t m = 1 + g.index(4);
    const NormTag p = g.norm_tag();
    const auto prob = Problem::identity(p, p, m);
    std::vector<double> w = g.vec(m, -1, 1);
    const double dn = norm(w, p.dual());
    for (double& x : w) x /= std::max(dn, 1.0) * 1.0000001;
    const auto rep = validate(linear(Point(w)), prob);
    ASSERT_TRUE(rep.dual_norm);
    const double brute = oracle::maximize_on_sphere(
        [&](const std::vector<double>& x) {
          double s = 0.0;
          for (std::size_t i = 0; i < m; ++i) s += w[i] * x[i];
          return s;
        },
        m, p, 100 + t);
    EXPECT_NEAR(*rep.dual_norm, brute, 1e-6) << "p=" << p.to_string() << " m=" << m;
  }
}

TEST(Observe, Examples) {
  EXPECT_NEAR(NoiseAdversary(0.1, noise::FixedShift{0.1}).observe(0.3, 0), 0.4, 1e-15);
  EXPECT_LE(std::abs(NoiseAdversary(0.1, noise::FixedShift{0.1}).observe(0.3, 0) - 0.3), 0.1);
  EXPECT_EQ(NoiseAdversary(0.5, noise::Zero{}).observe(0.3, 0), 0.3);
  EXPECT_EQ(NoiseAdversary(0.2, noise::SignPattern{{1}}).observe(1.0, 0), 1.2);
  expect_error(ErrorKind::invalid_parameters, [] { NoiseAdversary(0.1, noise::FixedShift{0.2}); });
  expect_error(ErrorKind::invalid_parameters, [] { NoiseAdversary(1.0, noise::Zero{}); });
  expect_error(ErrorKind::invalid_parameters, [] { NoiseAdversary(0.3, noise::GridSnap{1}); });
}

TEST(Observe, GridSnapBoundaryRule) {
  // k = 1: cells [-1, 0) -> -0.5 and [0, 1] -> 0.5
  EXPECT_EQ(NoiseAdversary::grid_snap(-1.0, 1), -0.5);
  EXPECT_EQ(NoiseAdversary::grid_snap(-1e-17, 1), -0.5);
  EXPECT_EQ(NoiseAdversary::grid_snap(0.0, 1), 0.5);
  EXPECT_EQ(NoiseAdversary::grid_snap(1.0, 1), 0.5);
  // k = 2: w = -0.75, -0.25, 0.25, 0.75
  EXPECT_EQ(NoiseAdversary::grid_snap(-0.5, 2), -0.25);
  EXPECT_EQ(NoiseAdversary::grid_snap(0.5, 2), 0.75);
  EXPECT_EQ(NoiseAdversary::grid_snap(1.0, 2), 0.75);
}

TEST(MeasurementProperty, EveryStrategyIsExactlyAdmissible) {
  oracle::Gen g(31);
  for (int t = 0; t < 3000; ++t) {
    const double delta = g.uniform(0.0, 0.999);
    const double v = g.uniform(-1, 1);
    const std::size_t step = g.index(20);
    std::vector<NoiseStrategy> strategies{noise::Zero{},
                                          noise::FixedShift{g.uniform(-delta, delta)},
                                          noise::SignPattern{{g.coin() ? 1 : -1}},
                                          noise::SeededRandom{t * 77ULL},
                                          noise::SearchDriven{{g.uniform(-3, 3)}},
                                          noise::Replay{{g.uniform(-3, 3)}}};
    if (delta > 0.0) {
      int k = 0;
      while (std::exp2(-k) > delta) ++k;
      strategies.push_back(noise::GridSnap{k});
    }
    for (const auto& s : strategies) {
      const NoiseAdversary adv(delta, s);
      const double y = adv.observe(v, step);
      EXPECT_TRUE(std::abs(y - v) <= delta) << "strategy " << s.index() << " delta " << delta;
      EXPECT_EQ(y, adv.observe(v, step));  // deterministic
    }
  }
}

TEST(Session, Examples) {
  const auto line = Problem::identity(kInf, kInf, 1);
  const auto zero = constant_policy(Point{0});
  EXPECT_EQ(run_session(zero, Point{0}, line, NoiseAdversary::zero(0.3)).error, 0.0);
  EXPECT_EQ(run_session(zero, Point{1}, line, NoiseAdversary::zero(0.3)).error, 1.0);
  const auto pol = build_coord_refine_policy(1, 2, 0.5);
  const auto r = run_session(pol, Point{0.3}, line, NoiseAdversary(0.5, noise::SignPattern{{1, 1}}));
  EXPECT_EQ(r.transcript.size(), 2u);
  EXPECT_LE(r.error, 0.25 + 1e-15);
  expect_error(ErrorKind::domain_violation,
               [&] { run_session(zero, Point{1.5}, line, NoiseAdversary::zero()); });
}

TEST(Session, InadmissibleFunctionalAborts) {
  const auto box = Problem::identity(kInf, kInf, 2);
  const Policy bad("bad", 1, false,
                   [](const Transcript& t) -> std::optional<Functional> {
                     if (t.size() >= 1) return std::nullopt;
                     return Functional{LinearForm{Point{0.9, 0.9}}, DeclaredClass::linear()};
                   },
                   [](const Transcript&) { return Point{0, 0}; });
  expect_error(ErrorKind::admissibility_violation,
               [&] { run_session(bad, Point{0, 0}, box, NoiseAdversary::zero()); });
}

TEST(Session, TranscriptCsvAndReplay) {
  const auto box = Problem::identity(kInf, kInf, 2);
  const auto pol = build_coord_refine_policy(2, 2, 0.5);
  const auto r = run_session(pol, Point{0.3, -0.7}, box, NoiseAdversary(0.5, noise::SeededRandom{9}));
  EXPECT_TRUE(replay_matches(pol, r.transcript));
  EXPECT_TRUE(transcript_admissible(r.transcript, box, Point{0.3, -0.7}, 0.5));
  const std::string csv = transcript_csv("s1", r.transcript);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_EQ(csv.rfind("s1,1,CoordRefine,\"{", 0), 0u) << csv;
  // same seed, same bytes
  const auto r2 = run_session(pol, Point{0.3, -0.7}, box, NoiseAdversary(0.5, noise::SeededRandom{9}));
  EXPECT_EQ(csv, transcript_csv("s1", r2.transcript));
}

TEST(MeasurementProperty, ReplayReproducesAdaptivePolicies) {
  oracle::Gen g(41);
  const auto box = Problem::identity(kInf, kInf, 2);
  const auto cover = grid_cover_linf(2, 2);
  const auto bis = build_bisection_policy(cover, default_bisection_params(0.3, 2, cover.radius));
  const auto ref = build_coord_refine_policy(2, 3, 0.25);
  for (int t = 0; t < 100; ++t) {
    const Point f = g.in_ball(2, kInf);
    const NoiseAdversary adv(0.25, noise::SeededRandom{static_cast<std::uint64_t>(t)});
    EXPECT_TRUE(replay_matches(ref, run_session(ref, f, box, adv).transcript));
    const NoiseAdversary adv3(0.3, noise::SeededRandom{static_cast<std::uint64_t>(t)});
    EXPECT_TRUE(replay_matches(bis, run_session(bis, f, box, adv3).transcript));
  }
}

TEST(MeasurementProperty, NonadaptivePolicyIgnoresNoise) {
  oracle::Gen g(51);
  const auto diag = Problem::diagonal({1, 0.5, 0.25}, 0.0, kInf);
  const auto trunc = build_diag_truncation_policy(diag, 3);
  const auto box = Problem::identity(kInf, kInf, 1);
  const auto enc = build_encoder_policy(grid_cover_linf(1, 4), 2, 0.2);
  EXPECT_FALSE(trunc.adaptive());
  EXPECT_FALSE(enc.adaptive());
  for (int t = 0; t < 50; ++t) {
    const Point f = g.in_ball(3, kInf), h = g.in_ball(1, kInf);
    auto kinds = [](const Transcript& tr) { return tr.entries.size() ? functional_params(tr[0].functional) : nlohmann::json(); };
    const auto a = run_session(trunc, f, diag, NoiseAdversary(0.2, noise::SeededRandom{1}));
    const auto b = run_session(trunc, f, diag, NoiseAdversary(0.2, noise::FixedShift{-0.2}));
    ASSERT_EQ(a.transcript.size(), b.transcript.size());
    for (std::size_t i = 0; i < a.transcript.size(); ++i)
      EXPECT_EQ(functional_params(a.transcript[i].functional), functional_params(b.transcript[i].functional));
    const auto c = run_session(enc, h, box, NoiseAdversary(0.2, noise::SeededRandom{2}));
    const auto d = run_session(enc, h, box, NoiseAdversary(0.2, noise::SignPattern{{1, -1}}));
    for (std::size_t i = 0; i < c.transcript.size(); ++i)
      EXPECT_EQ(functional_params(c.transcript[i].functional), functional_params(d.transcript[i].functional));
    (void)kinds;
  }
}

TEST(UnboundedRange, Examples) {
  const auto line = Problem::identity(kInf, kInf, 1);
  auto lam = [](double v) {
    // lambda(f) = v for every f, built as an unclamped affine map of a zero form
    auto zero = std::make_shared<const Functional>(Functional{LinearForm{Point{0}}, DeclaredClass::linear()});
    return Functional{AffineClamp{zero, 1.0, v, false}, DeclaredClass::continuous()};
  };
  // lambda(f) = 0.3, delta 0.5, target 0.005
  auto est = exploit_unbounded_range(lam(0.3), 0.5, 0.005);
  EXPECT_EQ(est.eta(), 100.0);
  for (int s : {-1, 1}) {
    const double y = est.estimate(line, Point{0.2}, NoiseAdversary(0.5, noise::SignPattern{{s}}));
    EXPECT_LE(std::abs(y - 0.3), 0.005 + 1e-15);
  }
  auto est0 = exploit_unbounded_range(lam(0.0), 0.3, 0.01);
  EXPECT_LE(std::abs(est0.estimate(line, Point{0}, NoiseAdversary(0.3, noise::FixedShift{0.3}))), 0.01 + 1e-15);
  auto est2 = exploit_unbounded_range(lam(0.7), 0.5, 0.25);
  EXPECT_NEAR(est2.estimate(line, Point{0}, NoiseAdversary(0.5, noise::FixedShift{0.5})), 0.95, 1e-15);
  // with the clamp active the exploit is refused
  auto clamped = lam(0.7);
  std::get<AffineClamp>(clamped.descriptor).clamped = true;
  expect_error(ErrorKind::range_violation, [&] { exploit_unbounded_range(clamped, 0.5, 0.25); });
  // and an unclamped functional leaving [-1, 1] fails evaluation
  expect_error(ErrorKind::range_violation, [&] {
    auto big = lam(1.5);
    evaluate(big, line, Point{0});
  });
}
