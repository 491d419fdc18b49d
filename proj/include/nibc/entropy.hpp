#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "nibc/cover.hpp"
#include "nibc/error.hpp"
#include "nibc/format.hpp"
#include "nibc/rng.hpp"
#include "nibc/spaces.hpp"

namespace nibc {

// ---------------------------------------------------------------------------
// Closed forms

/// sup_k 2^{-n/k} (sigma_1 ... sigma_k)^{1/k}, the entropy numbers of D_sigma
/// up to a factor in [1, 6]. Indices past the last positive sigma are
/// excluded. A positive tail bound continues sigma as constant beyond the
/// truncation, which makes the supremum over k > M explicit:
/// t * exp(c / k) with c = sum_i ln(sigma_i / t) - n ln 2.
inline double formula_diagonal(const DiagonalInstance& d, std::size_t n) {
  require(!d.sigma.empty(), ErrorKind::invalid_input, "sigma must be nonempty");
  const double nn = static_cast<double>(n);
  double best = 0.0;
  double log_prod = 0.0;
  std::size_t k = 0;
  for (double s : d.sigma) {
    if (s <= 0.0) break;
    ++k;
    log_prod += std::log(s);
    const double kk = static_cast<double>(k);
    best = std::max(best, std::exp2(-nn / kk) * std::exp(log_prod / kk));
  }
  if (d.tail_bound > 0.0 && k == d.sigma.size()) {
    const double t = d.tail_bound;
    double c = -nn * std::log(2.0);
    for (double s : d.sigma) c += std::log(s / t);
    const double beyond = c <= 0.0 ? t : t * std::exp(c / static_cast<double>(k + 1));
    best = std::max(best, beyond);
  }
  return best;
}

struct IdentityFormula {
  double value = 0.0;
  bool asymptotic = true;  // hidden constants; never an absolute pass/fail number
  bool in_regime = true;
  std::string warning;
};

/// (log(m/n + 1)/n)^{1/p - 1/q} for p < q, 2^{-n/m} for p = q.
inline IdentityFormula formula_identity(NormTag p, NormTag q, std::size_t m, std::size_t n) {
  require(m >= 1, ErrorKind::invalid_input, "dimension must be positive");
  require(p <= q, ErrorKind::invalid_input, "entropy shape formula needs p <= q");
  IdentityFormula out;
  const double mm = static_cast<double>(m), nn = static_cast<double>(n);
  if (p == q) {
    out.value = std::exp2(-nn / mm);
    return out;
  }
  require(n >= 1, ErrorKind::invalid_input, "formula needs n >= 1 when p < q");
  out.value = std::pow(std::log(mm / nn + 1.0) / nn, p.inverse() - q.inverse());
  if (nn < std::log2(mm) || nn > mm) {
    out.in_regime = false;
    out.warning = "out of regime: n outside [log2(m), m]";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Covers of B_inf^m

/// 2^{n/m} cells per axis; the 2^n cubes have radius 2^{-n/m}.
inline CoverSpec grid_cover_linf(std::size_t m, std::size_t n) {
  require(m >= 1, ErrorKind::invalid_input, "dimension must be positive");
  require(n % m == 0, ErrorKind::invalid_input, "grid cover needs m | n");
  require(n <= 20, ErrorKind::budget_exceeded, "grid cover larger than 2^20 cells");
  const std::size_t per_axis = std::size_t{1} << (n / m);
  const double radius = std::exp2(-static_cast<double>(n / m));
  CoverSpec cover;
  cover.radius = radius;
  cover.budget_bits = n;
  cover.q = NormTag::infinity();
  cover.target = "B_inf^" + std::to_string(m);
  const std::size_t total = std::size_t{1} << n;
  cover.centers.reserve(total);
  std::vector<double> c(m);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t axis = m; axis-- > 0;) {
      const std::size_t t = rest % per_axis;
      rest /= per_axis;
      c[axis] = -1.0 + radius * static_cast<double>(2 * t + 1);
    }
    cover.centers.emplace_back(c);
  }
  return cover;
}

// ---------------------------------------------------------------------------
// Dense samples of S(F)

struct SampleOptions {
  int grid_bits = 7;                          // dyadic resolution 2^{-g} per axis
  std::size_t max_points = std::size_t{1} << 21;
};

struct ImageSample {
  std::vector<Point> images;
  double resolution = 0.0;  // every point of S(F) lies this close to a sample
  int grid_bits = 0;
};

inline constexpr std::size_t kMaxSampledDimension = 6;

struct DomainSample {
  std::vector<Point> points;
  int grid_bits = 0;
  double spacing = 0.0;
};

/// Dyadic grid points -1 + 2t/2^g (per axis) that lie in the domain ball;
/// g is lowered until the full grid has at most `max_points` nodes.
inline DomainSample sample_domain(const Problem& prob, const SampleOptions& opt = {}) {
  const std::size_t m = prob.dim();
  require(m <= kMaxSampledDimension, ErrorKind::unsupported_instance,
          "sampled estimators support dimension <= 6, got " + std::to_string(m));
  int g = std::max(1, opt.grid_bits);
  while (g > 1 && std::pow(std::exp2(g) + 1.0, static_cast<double>(m)) > static_cast<double>(opt.max_points)) --g;
  const std::size_t per_axis = (std::size_t{1} << g) + 1;
  DomainSample out;
  out.grid_bits = g;
  out.spacing = 2.0 / std::exp2(g);
  std::size_t total = 1;
  for (std::size_t i = 0; i < m; ++i) total *= per_axis;
  std::vector<double> x(m);
  const NormTag p = prob.domain_norm();
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t axis = m; axis-- > 0;) {
      x[axis] = -1.0 + out.spacing * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
    if (norm(x, p) > 1.0) continue;
    out.points.emplace_back(x);
  }
  return out;
}

/// S applied to the domain grid. For p = inf the nearest grid point is within
/// h/2 per coordinate; otherwise rounding toward zero stays in the ball and
/// moves each coordinate by less than h.
inline ImageSample sample_image(const Problem& prob, const SampleOptions& opt = {}) {
  const DomainSample dom = sample_domain(prob, opt);
  ImageSample out;
  out.grid_bits = dom.grid_bits;
  out.images.reserve(dom.points.size());
  for (const auto& x : dom.points) out.images.push_back(apply_operator(prob, x));
  const double step = prob.domain_norm().is_infinite() ? dom.spacing / 2.0 : dom.spacing;
  out.resolution = step * norm(prob.effective_sigma(), prob.target_norm());
  return out;
}

/// Greedy farthest-point traversal; returns chosen indices and, for each
/// chosen point after the first, its distance to the earlier ones.
struct Traversal {
  std::vector<std::size_t> order;
  std::vector<double> insert_distance;
  std::vector<double> min_dist;  // distance of every sample to the chosen set
};

inline Traversal farthest_point_traversal(const std::vector<Point>& pts, std::size_t first, std::size_t count,
                                          NormTag q) {
  Traversal t;
  t.min_dist.assign(pts.size(), std::numeric_limits<double>::infinity());
  std::size_t next = first;
  for (std::size_t c = 0; c < count && c < pts.size(); ++c) {
    if (c > 0) t.insert_distance.push_back(t.min_dist[next]);
    t.order.push_back(next);
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      t.min_dist[i] = std::min(t.min_dist[i], distance(pts[i], pts[next], q));
      if (t.min_dist[i] > far_d) {
        far_d = t.min_dist[i];
        far = i;
      }
    }
    next = far;
  }
  return t;
}

/// max over samples of the distance to the nearest center.
inline double certified_radius(const std::vector<Point>& pts, const std::vector<Point>& centers, NormTag q,
                               std::vector<std::size_t>* assignment = nullptr) {
  if (assignment) assignment->assign(pts.size(), 0);
  double worst = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = distance(pts[i], centers[c], q);
      if (d < best) {
        best = d;
        arg = c;
        if (d == 0.0) break;
      }
    }
    if (assignment) (*assignment)[i] = arg;
    worst = std::max(worst, best);
  }
  return worst;
}

struct CoverOptions {
  SampleOptions sample;
  std::uint64_t seed = 0;
  int restarts = 3;
  int refine_iterations = 10;
};

namespace detail {

inline bool box_image(const Problem& prob) { return prob.domain_norm().is_infinite(); }

/// Product grid for a box image: each bit halves the currently widest axis.
inline std::vector<Point> axis_bisection_centers(const Problem& prob, std::size_t bits) {
  const std::vector<double> half = prob.effective_sigma();
  const std::size_t m = half.size();
  std::vector<std::size_t> splits(m, 0);
  for (std::size_t b = 0; b < bits; ++b) {
    std::size_t widest = 0;
    double w = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double hw = half[i] / static_cast<double>(std::size_t{1} << splits[i]);
      if (hw > w) {
        w = hw;
        widest = i;
      }
    }
    ++splits[widest];
  }
  std::size_t total = 1;
  for (auto s : splits) total <<= s;
  std::vector<Point> centers;
  centers.reserve(total);
  std::vector<double> c(m);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t axis = m; axis-- > 0;) {
      const std::size_t cells = std::size_t{1} << splits[axis];
      const std::size_t t = rest % cells;
      rest /= cells;
      const double hw = half[axis] / static_cast<double>(cells);
      c[axis] = -half[axis] + hw * static_cast<double>(2 * t + 1);
    }
    centers.emplace_back(c);
  }
  return centers;
}

/// Assign-and-recenter passes; each cluster moves to its bounding-box
/// midpoint (the exact Chebyshev center in l_inf). Keeps the best radius.
inline double refine_centers(const std::vector<Point>& pts, std::vector<Point>& centers, NormTag q, int iterations) {
  std::vector<std::size_t> assign;
  double best = certified_radius(pts, centers, q, &assign);
  const std::size_t m = pts.front().dim();
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::vector<double>> lo(centers.size(), std::vector<double>(m, std::numeric_limits<double>::infinity()));
    std::vector<std::vector<double>> hi(centers.size(), std::vector<double>(m, -std::numeric_limits<double>::infinity()));
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t a = 0; a < m; ++a) {
        lo[assign[i]][a] = std::min(lo[assign[i]][a], pts[i][a]);
        hi[assign[i]][a] = std::max(hi[assign[i]][a], pts[i][a]);
      }
    std::vector<Point> moved = centers;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (!std::isfinite(lo[c][0])) continue;
      std::vector<double> mid(m);
      for (std::size_t a = 0; a < m; ++a) mid[a] = 0.5 * (lo[c][a] + hi[c][a]);
      moved[c] = Point(std::move(mid));
    }
    std::vector<std::size_t> next_assign;
    const double r = certified_radius(pts, moved, q, &next_assign);
    if (!(r < best)) break;
    best = r;
    centers = std::move(moved);
    assign = std::move(next_assign);
  }
  return best;
}

}  // namespace detail

inline constexpr std::size_t kMaxCoverBits = 20;

/// Smallest sample-certified radius found for at most 2^n balls covering S(F).
/// Candidates: farthest-point seeding (one deterministic start plus seeded
/// restarts) with recentering, and for box images the axis-bisection grid.
inline CoverSpec greedy_cover(const Problem& prob, std::size_t n, const CoverOptions& opt = {}) {
  require(n <= kMaxCoverBits, ErrorKind::budget_exceeded, "cover budget 2^n exceeds 2^20");
  const ImageSample sample = sample_image(prob, opt.sample);
  const NormTag q = prob.target_norm();
  const std::size_t k = std::size_t{1} << n;

  CoverSpec best;
  best.budget_bits = n;
  best.q = q;
  best.target = "S(F) for " + prob.describe();
  best.sample_certified = true;
  best.resolution = sample.resolution;
  best.radius = std::numeric_limits<double>::infinity();

  const std::size_t origin = [&] {
    std::size_t arg = 0;
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sample.images.size(); ++i) {
      const double v = norm(sample.images[i], q);
      if (v < d) {
        d = v;
        arg = i;
      }
    }
    return arg;
  }();

  for (int restart = 0; restart <= opt.restarts; ++restart) {
    const std::size_t first =
        restart == 0 ? origin
                     : static_cast<std::size_t>(stable_hash(opt.seed, static_cast<std::uint64_t>(restart)) %
                                                sample.images.size());
    const Traversal t = farthest_point_traversal(sample.images, first, k, q);
    std::vector<Point> centers;
    for (auto i : t.order) centers.push_back(sample.images[i]);
    const double r = detail::refine_centers(sample.images, centers, q, opt.refine_iterations);
    if (r < best.radius) {
      best.radius = r;
      best.centers = std::move(centers);
    }
  }
  if (detail::box_image(prob)) {
    std::vector<Point> centers = detail::axis_bisection_centers(prob, n);
    const double r = certified_radius(sample.images, centers, q);
    if (r < best.radius) {
      best.radius = r;
      best.centers = std::move(centers);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Lower estimates

/// log of the volume of the unit ball of l_p^k.
inline double log_unit_ball_volume(NormTag p, std::size_t k) {
  const double kk = static_cast<double>(k);
  if (p.is_infinite()) return kk * std::log(2.0);
  return kk * std::log(2.0 * std::tgamma(1.0 + 1.0 / p.p())) - std::lgamma(1.0 + kk / p.p());
}

/// Volume bound over coordinate projections: 2^n target balls of radius e
/// cover the projection of S(F) onto the first k coordinates, so
/// e >= 2^{-n/k} (prod sigma_i)^{1/k} (vol B_p^k / vol B_q^k)^{1/k}.
inline double volume_lower(const Problem& prob, std::size_t n) {
  const std::vector<double> s = prob.effective_sigma();
  const NormTag p = prob.domain_norm(), q = prob.target_norm();
  const double nn = static_cast<double>(n);
  double best = 0.0, log_prod = 0.0;
  for (std::size_t k = 1; k <= s.size(); ++k) {
    if (s[k - 1] <= 0.0) break;
    log_prod += std::log(s[k - 1]);
    const double kk = static_cast<double>(k);
    const double log_ratio = log_unit_ball_volume(p, k) - log_unit_ball_volume(q, k);
    best = std::max(best, std::exp2(-nn / kk) * std::exp((log_prod + log_ratio) / kk));
  }
  return best;
}

/// Separated-set bound: 2^n + 1 sample images pairwise at least d apart
/// force some ball to hold two of them, so eps_n >= d/2.
inline double separated_lower(const Problem& prob, std::size_t n, const SampleOptions& opt = {}) {
  require(n <= kMaxCoverBits, ErrorKind::budget_exceeded, "packing budget 2^n exceeds 2^20");
  const ImageSample sample = sample_image(prob, opt);
  const std::size_t want = (std::size_t{1} << n) + 1;
  if (sample.images.size() < want) return 0.0;
  const Traversal t = farthest_point_traversal(sample.images, 0, want, prob.target_norm());
  return t.insert_distance.empty() ? 0.0 : t.insert_distance.back() / 2.0;
}

inline double packing_lower(const Problem& prob, std::size_t n, const SampleOptions& opt = {}) {
  return std::max(separated_lower(prob, n, opt), volume_lower(prob, n));
}

// ---------------------------------------------------------------------------
// Sandwich

struct EntropyEstimate {
  std::size_t n = 0;
  double lower = 0.0;
  double upper = 0.0;
  double resolution = 0.0;
  double formula = 0.0;
  double band_lo = 1.0;  // multipliers on the formula value
  double band_hi = 1.0;
  bool band_checked = false;
};

/// Packing lower bound, greedy-cover upper bound and the closed form. For
/// diagonal instances [formula, 6 formula] must meet [lower, upper + resolution];
/// otherwise an inconsistency is raised.
inline EntropyEstimate sandwich(const Problem& prob, std::size_t n, const CoverOptions& opt = {}) {
  EntropyEstimate est;
  est.n = n;
  est.lower = packing_lower(prob, n, opt.sample);
  const CoverSpec cover = greedy_cover(prob, n, opt);
  est.upper = cover.radius;
  est.resolution = cover.resolution;
  if (prob.is_diagonal()) {
    est.formula = formula_diagonal(prob.as_diagonal(), n);
    est.band_lo = 1.0;
    est.band_hi = 6.0;
    est.band_checked = true;
    const double lo = std::max(est.formula * est.band_lo, est.lower);
    const double hi = std::min(est.formula * est.band_hi, est.upper + est.resolution);
    require(lo <= hi, ErrorKind::inconsistency,
            "entropy band [" + format_double(est.formula) + ", " + format_double(6 * est.formula) +
                "] misses estimates [" + format_double(est.lower) + ", " + format_double(est.upper) + "]");
  } else {
    const auto& id = prob.as_identity();
    if (id.p <= id.q && (id.p == id.q || n >= 1)) est.formula = formula_identity(id.p, id.q, id.m, n).value;
    else est.formula = std::numeric_limits<double>::quiet_NaN();
  }
  require(est.lower <= est.upper + est.resolution, ErrorKind::inconsistency,
          "packing bound exceeds cover radius");
  return est;
}

}  // namespace nibc
