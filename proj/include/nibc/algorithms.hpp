#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nibc/cover.hpp"
#include "nibc/error.hpp"
#include "nibc/format.hpp"
#include "nibc/measurement.hpp"
#include "nibc/spaces.hpp"

namespace nibc {

/// Ceilings of logarithms are taken after subtracting this, so that values
/// such as log2(1/0.25) = 2 + 1ulp do not round up to 3.
inline constexpr double kCeilNudge = 1e-12;

inline int nudged_ceil(double x) { return static_cast<int>(std::ceil(x - kCeilNudge)); }

/// k_delta = ceil(log2(1/delta)); always satisfies 2^{-k} <= delta.
inline int k_delta(double delta) {
  require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in (0, 1)");
  int k = std::max(0, nudged_ceil(std::log2(1.0 / delta)));
  while (std::exp2(-k) > delta) ++k;
  return k;
}

/// k'_delta = ceil(log2(1/delta + 1) - 1); always satisfies delta (2^{k'} - 1) < 1.
inline int k_prime_delta(double delta) {
  require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in (0, 1)");
  int k = std::max(0, nudged_ceil(std::log2(1.0 / delta + 1.0) - 1.0));
  while (k > 0 && !(delta * (std::exp2(k) - 1.0) < 1.0)) --k;
  return k;
}

struct QuantizerParams {
  double delta = 0.0;
  int k = 0;        // k_delta
  int k_prime = 0;  // k'_delta, bits carried per measurement

  static QuantizerParams for_delta(double delta) { return {delta, k_delta(delta), k_prime_delta(delta)}; }

  std::size_t level_count() const noexcept { return std::size_t{1} << k_prime; }
  double level(std::size_t i) const { return quantizer_level(i, k_prime); }
  std::vector<double> levels() const {
    std::vector<double> v(level_count());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = level(i);
    return v;
  }

  /// Index of the unique level within delta of y (nearest level otherwise).
  std::size_t decode(double y) const {
    if (k_prime == 0) return 0;
    const double top = static_cast<double>(level_count() - 1);
    const double idx = std::round((y + 1.0) * top / 2.0);
    return static_cast<std::size_t>(std::clamp(idx, 0.0, top));
  }
};

// ---------------------------------------------------------------------------
// Quantized cell encoder

/// Cell index encoded in a transcript of QuantizedCell observations.
inline std::size_t decode_cell(const Transcript& t, const QuantizerParams& qp) {
  std::size_t index = 0;
  for (const auto& obs : t.entries) index = (index << qp.k_prime) | qp.decode(obs.y);
  return index;
}

/// Nonadaptive policy: n measurements, each reporting k' bits of the
/// nearest-center cell of S(f); the decoder outputs that center.
inline Policy build_encoder_policy(const CoverSpec& cover, std::size_t n, double delta) {
  const QuantizerParams qp = QuantizerParams::for_delta(delta);
  const std::size_t total_bits = n * static_cast<std::size_t>(qp.k_prime);
  require(total_bits < 8 * sizeof(std::size_t) - 1 && cover.size() == (std::size_t{1} << total_bits),
          ErrorKind::shape_mismatch,
          "cover has " + std::to_string(cover.size()) + " cells, encoder needs 2^" + std::to_string(total_bits));
  auto centers = std::make_shared<const std::vector<Point>>(cover.centers);
  const NormTag q = cover.q;
  auto choose = [centers, q, n, qp](const Transcript& t) -> std::optional<Functional> {
    return Functional{QuantizedCell{centers, q, t.size(), n, qp.k_prime}, DeclaredClass::arbitrary()};
  };
  auto reconstruct = [centers, qp](const Transcript& t) { return (*centers)[decode_cell(t, qp)]; };
  return Policy("encoder", n, false, std::move(choose), std::move(reconstruct));
}

// ---------------------------------------------------------------------------
// Bisection over a ball cover

struct BisectionParams {
  double delta = 0.0;
  double delta_plus = 0.5;
  double eta = 1.0;
};

/// delta+ = (1 + delta)/2 and eta with n * delta * eta = 0.01 * radius.
inline BisectionParams default_bisection_params(double delta, std::size_t n, double radius) {
  BisectionParams bp{delta, (1.0 + delta) / 2.0, 1.0};
  if (n > 0 && delta > 0.0 && radius > 0.0) bp.eta = 0.01 * radius / (static_cast<double>(n) * delta);
  return bp;
}

/// Surviving balls are the contiguous index block [begin, begin + count).
struct BisectionState {
  std::size_t begin = 0;
  std::size_t count = 0;
  double radius = 0.0;
};

/// Replays the halving decisions recorded in a transcript.
inline BisectionState bisection_state(const CoverSpec& cover, const BisectionParams& bp, const Transcript& t) {
  BisectionState s{0, cover.size(), cover.radius};
  const double threshold = -1.0 + bp.delta;
  for (const auto& obs : t.entries) {
    const std::size_t half = s.count / 2;
    if (obs.y > threshold) {
      s.begin += half;  // S(f) avoids the tested half
    } else {
      s.radius += bp.delta * bp.eta;  // S(f) lies within delta*eta of it
    }
    s.count = half;
  }
  return s;
}

inline Policy build_bisection_policy(const CoverSpec& cover, const BisectionParams& bp) {
  require(bp.delta >= 0.0 && bp.delta < bp.delta_plus && bp.delta_plus <= 1.0, ErrorKind::invalid_parameters,
          "bisection needs 0 <= delta < delta+ <= 1");
  require(bp.eta > 0.0, ErrorKind::invalid_parameters, "eta must be positive");
  const int bits = exact_log2(cover.size());
  require(bits >= 0, ErrorKind::shape_mismatch, "bisection needs 2^n balls");
  auto shared = std::make_shared<const CoverSpec>(cover);
  auto choose = [shared, bp](const Transcript& t) -> std::optional<Functional> {
    const BisectionState s = bisection_state(*shared, bp, t);
    if (s.count < 2) return std::nullopt;
    DistToUnion d;
    d.centers.assign(shared->centers.begin() + static_cast<std::ptrdiff_t>(s.begin),
                     shared->centers.begin() + static_cast<std::ptrdiff_t>(s.begin + s.count / 2));
    d.radius = s.radius;
    d.q = shared->q;
    d.eta = bp.eta;
    d.delta_plus = bp.delta_plus;
    return Functional{std::move(d), DeclaredClass::continuous()};
  };
  auto reconstruct = [shared, bp](const Transcript& t) {
    return shared->centers[bisection_state(*shared, bp, t).begin];
  };
  return Policy("bisection", static_cast<std::size_t>(bits), true, std::move(choose), std::move(reconstruct));
}

/// r + n * delta * eta.
inline double bisection_error_bound(const CoverSpec& cover, const BisectionParams& bp) {
  const int bits = exact_log2(cover.size());
  return cover.radius + static_cast<double>(std::max(bits, 0)) * bp.delta * bp.eta;
}

// ---------------------------------------------------------------------------
// Coordinate refinement

/// Set of source values consistent with the observations so far.
struct RefineInterval {
  double lo = -1.0;
  double hi = 1.0;

  double mid() const noexcept { return 0.5 * (lo + hi); }
  double width() const noexcept { return hi - lo; }
  bool contains(double x, double tol = 0.0) const noexcept { return x >= lo - tol && x <= hi + tol; }
};

/// Intersects `prev` with the preimage of [y - delta, y + delta] under the
/// level-j refinement functional anchored at `anchor`.
inline RefineInterval refine_update(const RefineInterval& prev, double anchor, int level, double y, double delta) {
  const double w = refine_window(delta, level);
  RefineInterval next = prev;
  if (y - delta > -1.0) next.lo = std::max(prev.lo, anchor + w * (y - delta));
  if (y + delta < 1.0) next.hi = std::min(prev.hi, anchor + w * (y + delta));
  if (next.lo > next.hi) next.lo = next.hi = std::clamp(0.5 * (next.lo + next.hi), prev.lo, prev.hi);
  return next;
}

/// Per-coordinate intervals reconstructed from the CoordRefine steps of a transcript.
inline std::vector<RefineInterval> refine_intervals(const Transcript& t, std::size_t dim) {
  std::vector<RefineInterval> iv(dim);
  for (const auto& obs : t.entries) {
    const auto* c = std::get_if<CoordRefine>(&obs.functional.descriptor);
    if (c == nullptr || c->inner || c->coord >= dim) continue;
    iv[c->coord] = refine_update(iv[c->coord], c->anchor, c->level, obs.y, c->delta);
  }
  return iv;
}

/// Coordinate i gets rounds[i] refinement measurements (i in order); the
/// output is scale[i] times the interval midpoint, zero past rounds.size().
inline Policy build_refine_policy(std::vector<int> rounds, double delta, std::vector<double> scale,
                                  std::size_t out_dim, std::string name = "coord-refine") {
  require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in (0, 1)");
  require(rounds.size() <= out_dim && scale.size() >= rounds.size(), ErrorKind::invalid_input,
          "refinement schedule does not fit the output dimension");
  std::vector<std::size_t> starts(rounds.size() + 1, 0);
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    require(rounds[i] >= 0, ErrorKind::invalid_input, "negative round count");
    starts[i + 1] = starts[i] + static_cast<std::size_t>(rounds[i]);
  }
  const std::size_t budget = starts.back();
  auto choose = [starts, out_dim, delta](const Transcript& t) -> std::optional<Functional> {
    const std::size_t step = t.size();
    const auto it = std::upper_bound(starts.begin(), starts.end(), step);
    const std::size_t coord = static_cast<std::size_t>(it - starts.begin()) - 1;
    const int level = static_cast<int>(step - starts[coord]) + 1;
    const RefineInterval iv = refine_intervals(t, out_dim)[coord];
    return Functional{CoordRefine{coord, nullptr, iv.mid(), level, delta},
                      DeclaredClass::lipschitz(refine_scale(delta, level))};
  };
  const std::size_t measured = rounds.size();
  auto reconstruct = [measured, scale = std::move(scale), out_dim](const Transcript& t) {
    const auto iv = refine_intervals(t, out_dim);
    std::vector<double> out(out_dim, 0.0);
    for (std::size_t i = 0; i < measured; ++i) out[i] = scale[i] * iv[i].mid();
    return Point(std::move(out));
  };
  return Policy(std::move(name), budget, true, std::move(choose), std::move(reconstruct));
}

/// r rounds on each of m coordinates of B_inf^m; worst-case l_inf error delta^r.
inline Policy build_coord_refine_policy(std::size_t m, int r, double delta) {
  require(m >= 1 && r >= 1, ErrorKind::invalid_input, "need m >= 1 and r >= 1");
  return build_refine_policy(std::vector<int>(m, r), delta, std::vector<double>(m, 1.0), m);
}

// ---------------------------------------------------------------------------
// Noise correction of a single functional

/// Smallest r with delta^r <= eps.
inline int refinement_rounds(double eps, double delta) {
  require(eps > 0.0 && delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "need eps > 0, delta in (0,1)");
  return std::max(1, nudged_ceil(std::log(eps) / std::log(delta)));
}

struct NoiseCorrection {
  double estimate = 0.0;
  RefineInterval interval;
  Transcript transcript;
};

/// r refinement observations of lambda(f); |estimate - lambda(f)| <= delta^r.
inline NoiseCorrection noise_correct(const Functional& lambda, int r, double delta, const NoiseAdversary& adv,
                                     const Problem& prob, const Point& f) {
  require(r >= 1, ErrorKind::invalid_parameters, "need r >= 1");
  require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in (0, 1)");
  require_admissible(lambda, prob);
  const ClassReport inner = validate(lambda, prob);
  auto inner_ptr = std::make_shared<const Functional>(lambda);
  NoiseCorrection out;
  for (int level = 1; level <= r; ++level) {
    DeclaredClass cls = DeclaredClass::arbitrary();
    if (inner.lipschitz_estimate && *inner.lipschitz_estimate > 0.0)
      cls = DeclaredClass::lipschitz(refine_scale(delta, level) * *inner.lipschitz_estimate);
    else if (inner.continuous)
      cls = DeclaredClass::continuous();
    Functional fn{CoordRefine{0, inner_ptr, out.interval.mid(), level, delta}, cls};
    require_admissible(fn, prob);
    const double y = adv.observe(evaluate(fn, prob, f), out.transcript.size());
    out.interval = refine_update(out.interval, out.interval.mid(), level, y, delta);
    out.transcript.push(std::move(fn), y);
  }
  out.estimate = out.interval.mid();
  return out;
}

// ---------------------------------------------------------------------------
// Diagonal operators

/// Measures x_1..x_n with unit coordinate functionals and outputs
/// (sigma_1 y_1, ..., sigma_n y_n, 0, ...).
inline Policy build_diag_truncation_policy(const Problem& prob, std::size_t n) {
  require(prob.is_diagonal(), ErrorKind::unsupported_instance, "truncation policy needs a diagonal instance");
  const std::size_t dim = prob.dim();
  require(n <= prob.as_diagonal().sigma.size(), ErrorKind::invalid_input, "n exceeds the sigma truncation");
  const std::vector<double> sigma = prob.effective_sigma();
  auto choose = [dim](const Transcript& t) -> std::optional<Functional> {
    return Functional{LinearForm{Point::basis(dim, t.size())}, DeclaredClass::linear()};
  };
  auto reconstruct = [sigma, dim](const Transcript& t) {
    std::vector<double> out(dim, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = sigma[i] * t[i].y;
    return Point(std::move(out));
  };
  return Policy("diag-truncation", n, false, std::move(choose), std::move(reconstruct));
}

/// Worst-case error of the truncation policy:
///   p < inf: (delta^p sum_{i<=n} sigma_i^p + sigma_{n+1}^p)^{1/p}
///   p = inf: max(delta sigma_1, sigma_{n+1}).
inline double diag_truncation_error(const DiagonalInstance& d, std::size_t n, double delta) {
  require(n <= d.sigma.size(), ErrorKind::invalid_input, "n exceeds the sigma truncation");
  require(delta >= 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in [0, 1)");
  const double next = d.at(n + 1);
  if (d.p.is_infinite()) return n == 0 ? d.sigma.front() : std::max(delta * d.sigma.front(), next);
  const double p = d.p.p();
  double s = 0.0;
  for (std::size_t i = 1; i <= n; ++i) s += std::pow(delta * d.at(i), p);
  s += std::pow(next, p);
  return std::pow(s, 1.0 / p);
}

struct AllocationPlan {
  double eps = 0.0;
  std::size_t m = 0;             // coordinates refined
  std::vector<int> counts;       // n_i, i = 1..m
  std::size_t total = 0;         // sum of n_i

  std::string to_csv(const DiagonalInstance& d) const {
    std::string out = "i,sigma_i,n_i\n";
    for (std::size_t i = 0; i < m; ++i)
      out += std::to_string(i + 1) + ',' + format_double(d.at(i + 1)) + ',' + std::to_string(counts[i]) + '\n';
    return out;
  }
};

/// m = min{k : sigma_{k+1} <= eps}, n_i = ceil(ln(sigma_i/eps) / ln(1/delta)).
inline AllocationPlan diag_allocate(const DiagonalInstance& d, double eps, double delta) {
  require(eps > 0.0, ErrorKind::invalid_parameters, "target error must be positive");
  require(delta > 0.0 && delta <= 0.5, ErrorKind::invalid_parameters, "allocation assumes 0 < delta <= 1/2");
  AllocationPlan plan;
  plan.eps = eps;
  if (eps >= d.sigma.front()) return plan;
  std::size_t m = 0;
  while (m < d.sigma.size() && d.at(m + 1) > eps) ++m;
  require(d.at(m + 1) <= eps, ErrorKind::infeasible_truncation,
          "tail bound " + format_double(d.tail_bound) + " exceeds eps once sigma is exhausted");
  plan.m = m;
  for (std::size_t i = 1; i <= m; ++i) {
    const int ni = std::max(1, nudged_ceil(std::log(d.at(i) / eps) / std::log(1.0 / delta)));
    plan.counts.push_back(ni);
    plan.total += static_cast<std::size_t>(ni);
  }
  return plan;
}

/// Refinement policy realizing an allocation plan on an l_inf diagonal instance.
inline Policy build_allocation_policy(const Problem& prob, const AllocationPlan& plan, double delta) {
  require(prob.is_diagonal(), ErrorKind::unsupported_instance, "allocation policy needs a diagonal instance");
  return build_refine_policy(plan.counts, delta, prob.effective_sigma(), prob.dim(), "diag-allocation");
}

struct L2NoiseError {
  double value = 0.0;  // e-hat(delta)
  double upper = 0.0;  // e-hat(delta sqrt(n)), bounds the l_inf-noise linear error from above
};

/// Minimal linear error when the noise vector is bounded in l_2:
///   sqrt(sigma_{n+1}^2 + (delta^2/n) sum_{j<=n} (sigma_j^2 - sigma_{n+1}^2)).
inline L2NoiseError diag_l2noise_error(const DiagonalInstance& d, std::size_t n, double delta) {
  require(n <= d.sigma.size(), ErrorKind::invalid_input, "n exceeds the sigma truncation");
  if (n == 0) return {d.sigma.front(), d.sigma.front()};
  const double next = d.at(n + 1);
  double s = 0.0;
  for (std::size_t j = 1; j <= n; ++j) s += d.at(j) * d.at(j) - next * next;
  const double nn = static_cast<double>(n);
  auto ehat = [&](double dl) { return std::sqrt(next * next + dl * dl / nn * s); };
  return {ehat(delta), ehat(delta * std::sqrt(nn))};
}

}  // namespace nibc
