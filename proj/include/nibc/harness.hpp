#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nibc/algorithms.hpp"
#include "nibc/bounds.hpp"
#include "nibc/entropy.hpp"
#include "nibc/error.hpp"
#include "nibc/format.hpp"
#include "nibc/measurement.hpp"
#include "nibc/rng.hpp"
#include "nibc/spaces.hpp"

namespace nibc {

// ---------------------------------------------------------------------------
// Worst-case search

struct SearchOptions {
  std::size_t budget = std::size_t{1} << 16;  // session cap
  std::uint64_t seed = 0;
  int grid_bits = 4;                          // dyadic input grid (m <= 6)
  std::size_t exhaustive_max_steps = 16;
  std::size_t random_inputs = 64;
  std::vector<Point> extra_inputs;
};

struct ErrorReport {
  std::size_t n = 0;
  double delta = 0.0;
  double estimated_worst = 0.0;  // largest session error found; a lower estimate of the sup
  bool exhaustive = false;       // every sign pattern was run on every input
  std::optional<double> analytic_upper;
  std::optional<double> certified_lower;
  std::string theory_ref;
  Point worst_f;
  std::vector<double> worst_offsets;  // noise in units of delta
  std::size_t sessions = 0;

  bool consistent() const {
    if (certified_lower && *certified_lower > estimated_worst + 1e-9) return false;
    if (analytic_upper && estimated_worst > *analytic_upper + 1e-9) return false;
    return true;
  }
};

namespace detail {

/// Uniform point of the cube pulled radially into the domain ball.
inline Point random_ball_point(const Problem& prob, std::uint64_t seed, std::uint64_t index) {
  const std::size_t m = prob.dim();
  std::vector<double> v(m);
  for (std::size_t i = 0; i < m; ++i) v[i] = uniform_pm1(seed, index * m + i);
  const double r = norm(v, prob.domain_norm());
  if (r > 1.0)
    for (double& x : v) x /= r;
  Point p(std::move(v));
  return shrink_into(std::move(p), prob.domain_norm(), 1.0);
}

inline Point clamp_into_ball(const Problem& prob, std::vector<double> v) {
  const double r = norm(v, prob.domain_norm());
  if (r > 1.0)
    for (double& x : v) x /= r;
  return shrink_into(Point(std::move(v)), prob.domain_norm(), 1.0);
}

struct Candidate {
  double error = -1.0;
  std::size_t input = 0;
  std::vector<double> offsets;
};

}  // namespace detail

/// Maximizes session error over inputs (extreme points, dyadic grid, random
/// points) and noise. With n <= exhaustive_max_steps and enough budget every
/// +-delta sign pattern is run on every input; otherwise seeded random
/// patterns are followed by coordinate ascent over per-step offsets
/// {-1, -1/2, 0, 1/2, 1} and random perturbation of the worst input.
inline ErrorReport estimate_worst_error(const Policy& policy, const Problem& prob, double delta,
                                        const SearchOptions& opt = {}) {
  require(opt.budget >= 1, ErrorKind::invalid_parameters, "search budget must be at least 1");
  require(delta >= 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in [0, 1)");
  const std::size_t n = policy.budget();
  std::vector<Point> inputs = extreme_points(prob);
  if (prob.dim() <= kMaxSampledDimension) {
    for (auto& x : sample_domain(prob, {opt.grid_bits, std::size_t{1} << 20}).points) inputs.push_back(std::move(x));
  }
  const std::uint64_t input_seed = split_seed(opt.seed, 1);
  for (std::size_t i = 0; i < opt.random_inputs; ++i) inputs.push_back(detail::random_ball_point(prob, input_seed, i));
  for (const auto& x : opt.extra_inputs) inputs.push_back(x);

  ErrorReport rep;
  rep.n = n;
  rep.delta = delta;
  detail::Candidate best;
  std::vector<detail::Candidate> top;  // best candidate per input, for refinement
  auto run = [&](const Point& f, const std::vector<double>& offsets) {
    ++rep.sessions;
    return run_session(policy, f, prob, NoiseAdversary(delta, noise::SearchDriven{offsets})).error;
  };
  auto note = [&](double err, std::size_t input, const std::vector<double>& offsets) {
    if (err > best.error) best = {err, input, offsets};
  };

  const bool small = n <= opt.exhaustive_max_steps && n < 63;
  const double patterns = small ? std::exp2(static_cast<double>(n)) : std::numeric_limits<double>::infinity();
  if (small && patterns * static_cast<double>(inputs.size()) <= static_cast<double>(opt.budget)) {
    rep.exhaustive = true;
    std::vector<double> offsets(n);
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        for (std::size_t s = 0; s < n; ++s) offsets[s] = (mask >> s) & 1U ? 1.0 : -1.0;
        note(run(inputs[i], offsets), i, offsets);
      }
    }
  } else {
    // first half of the budget: random sign patterns spread over the inputs
    const std::size_t first = std::max<std::size_t>(1, opt.budget / 2);
    if (inputs.size() > first) inputs.resize(first);
    const std::size_t per_input = std::max<std::size_t>(1, first / inputs.size());
    const std::uint64_t noise_seed = split_seed(opt.seed, 2);
    std::uint64_t counter = 0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      detail::Candidate local;
      for (std::size_t k = 0; k < per_input; ++k) {
        std::vector<double> offsets(n);
        for (auto& o : offsets) o = uniform01(noise_seed, counter++) < 0.5 ? -1.0 : 1.0;
        const double err = run(inputs[i], offsets);
        if (err > local.error) local = {err, i, offsets};
      }
      note(local.error, local.input, local.offsets);
      top.push_back(std::move(local));
    }
    std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.error > b.error; });
    if (top.size() > 8) top.resize(8);

    static constexpr double kSteps[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
    for (auto& cand : top) {
      bool improved = true;
      while (improved && rep.sessions < opt.budget) {
        improved = false;
        for (std::size_t s = 0; s < n && rep.sessions < opt.budget; ++s) {
          for (double v : kSteps) {
            if (v == cand.offsets[s] || rep.sessions >= opt.budget) continue;
            auto trial = cand.offsets;
            trial[s] = v;
            const double err = run(inputs[cand.input], trial);
            if (err > cand.error) {
              cand.error = err;
              cand.offsets = std::move(trial);
              improved = true;
            }
          }
        }
      }
      note(cand.error, cand.input, cand.offsets);
    }
  }

  // random perturbation of the worst input
  Point worst = inputs[best.input];
  const std::uint64_t perturb_seed = split_seed(opt.seed, 3);
  std::uint64_t counter = 0;
  double scale = 0.25;
  while (!rep.exhaustive && rep.sessions < opt.budget && scale > 1e-6) {
    std::vector<double> v(worst.begin(), worst.end());
    for (double& x : v) x += scale * uniform_pm1(perturb_seed, counter++);
    const Point f = detail::clamp_into_ball(prob, std::move(v));
    const double err = run(f, best.offsets);
    if (err > best.error) {
      best.error = err;
      worst = f;
    } else {
      scale *= 0.9;
    }
  }
  rep.estimated_worst = std::max(best.error, 0.0);
  rep.worst_f = worst;
  rep.worst_offsets = best.offsets;
  return rep;
}

// ---------------------------------------------------------------------------
// Sweeps

struct ExperimentConfig {
  std::string experiment = "sweep";
  std::string kind = "refine";  // refine | diag | encode | bisect
  std::vector<std::size_t> m_values{1};
  std::vector<std::size_t> n_values;  // rounds per coordinate for refine
  std::vector<double> deltas;
  NormTag p = NormTag::infinity();
  NormTag q = NormTag::infinity();
  std::vector<double> sigma;
  double tail_bound = 0.0;
  std::uint64_t seed = 0;
  std::size_t budget = std::size_t{1} << 14;
  std::string out;
};

inline constexpr const char* kSweepCsvHeader =
    "experiment,kind,m,n,p,q,delta,param,error_est,lower_cert,upper_theory,theory_ref";

struct SweepRow {
  std::size_t m = 0;
  std::size_t n = 0;
  NormTag p = NormTag::infinity();
  NormTag q = NormTag::infinity();
  double delta = 0.0;
  std::string param;
  ErrorReport report;
};

namespace detail {

inline std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

/// Largest certified lower bound among the certifiers valid for the policy.
inline double best_certificate(const Policy& policy, const Problem& prob, double delta) {
  double lower = 0.0;
  const SessionResult probe = run_session(policy, Point::zeros(prob.dim()), prob, NoiseAdversary::zero());
  const bool all_linear = std::all_of(probe.transcript.entries.begin(), probe.transcript.entries.end(),
                                      [](const Observation& o) { return o.functional.declared.kind == ClassKind::linear; });
  if (all_linear && policy.budget() > 0) {
    const auto cert = linear_floor(prob, delta, policy.budget());
    if (cert.verified && verify_against(cert, policy, prob).ok) lower = std::max(lower, cert.claimed_bound);
  }
  const double L = observed_lipschitz(policy, prob);
  if (std::isfinite(L) && L > 0.0 && delta > 0.0) {
    const auto cert = lipschitz_floor(prob, L, delta);
    if (cert.verified && verify_against(cert, policy, prob).ok) lower = std::max(lower, cert.claimed_bound);
  }
  if (delta > 0.0 && prob.dim() <= kMaxSampledDimension) {
    GridAdversaryOptions go;
    go.sample.grid_bits = 4;
    const auto cert = grid_adversary(policy, prob, delta, go);
    if (cert.verified) lower = std::max(lower, cert.claimed_bound);
  }
  return lower;
}

}  // namespace detail

/// One row per (m, delta, n) grid point in that nesting order; rows that
/// cannot be constructed (e.g. m not dividing the cover bits) are skipped.
inline std::vector<SweepRow> sweep_rows(const ExperimentConfig& cfg) {
  std::vector<SweepRow> rows;
  const bool diag = cfg.kind == "diag";
  require(diag || cfg.kind == "refine" || cfg.kind == "encode" || cfg.kind == "bisect", ErrorKind::invalid_input,
          "unknown sweep kind '" + cfg.kind + "'");
  const std::vector<std::size_t> ms = diag ? std::vector<std::size_t>{cfg.sigma.size()} : cfg.m_values;
  std::uint64_t index = 0;
  for (std::size_t m : ms) {
    for (double delta : cfg.deltas) {
      for (std::size_t nv : cfg.n_values) {
        const std::uint64_t row_seed = split_seed(cfg.seed, index++);
        SweepRow row;
        row.delta = delta;
        try {
          std::optional<Problem> prob;
          std::optional<Policy> policy;
          std::optional<double> upper;
          std::string ref;
          if (diag) {
            prob = Problem::diagonal(cfg.sigma, cfg.tail_bound, cfg.p);
            policy = build_diag_truncation_policy(*prob, nv);
            upper = diag_truncation_error(prob->as_diagonal(), nv, delta);
            ref = cfg.p.is_infinite() ? "diag-linear-optimal" : "diag-truncation";
            row.n = nv;
            row.p = row.q = cfg.p;
            row.param = "sigma_next=" + format_double(prob->as_diagonal().at(nv + 1));
          } else if (cfg.kind == "refine") {
            prob = Problem::identity(NormTag::infinity(), NormTag::infinity(), m);
            const int r = static_cast<int>(nv);
            policy = build_coord_refine_policy(m, r, delta);
            upper = std::pow(delta, r);
            ref = "coordinate-refinement";
            row.n = m * nv;
            row.param = "r=" + std::to_string(nv);
          } else if (cfg.kind == "encode") {
            prob = Problem::identity(NormTag::infinity(), NormTag::infinity(), m);
            const int kp = k_prime_delta(delta);
            require(kp >= 1, ErrorKind::invalid_parameters, "no quantizer levels");
            const CoverSpec cover = grid_cover_linf(m, nv * static_cast<std::size_t>(kp));
            policy = build_encoder_policy(cover, nv, delta);
            upper = cover.radius;
            ref = "entropy-sandwich-upper";
            row.n = nv;
            row.param = "k_prime=" + std::to_string(kp);
          } else {
            prob = Problem::identity(NormTag::infinity(), NormTag::infinity(), m);
            const CoverSpec cover = grid_cover_linf(m, nv);
            const BisectionParams bp = default_bisection_params(delta, nv, cover.radius);
            policy = build_bisection_policy(cover, bp);
            upper = bisection_error_bound(cover, bp);
            ref = "bisection-upper";
            row.n = nv;
            row.param = "eta=" + format_double(bp.eta);
          }
          row.m = prob->dim();
          if (!diag) row.p = row.q = NormTag::infinity();
          SearchOptions so;
          so.budget = cfg.budget;
          so.seed = row_seed;
          row.report = estimate_worst_error(*policy, *prob, delta, so);
          row.report.analytic_upper = upper;
          row.report.certified_lower = detail::best_certificate(*policy, *prob, delta);
          row.report.theory_ref = ref;
        } catch (const Error& e) {
          if (e.kind() == ErrorKind::admissibility_violation) throw;
          continue;
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

inline std::string sweep_csv(const ExperimentConfig& cfg, const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepCsvHeader) + '\n';
  for (const auto& r : rows) {
    out += csv_field(cfg.experiment) + ',' + cfg.kind + ',' + std::to_string(r.m) + ',' + std::to_string(r.n) + ',' +
           r.p.to_string() + ',' + r.q.to_string() + ',' + format_double(r.delta) + ',' + csv_field(r.param) + ',' +
           format_double(r.report.estimated_worst) + ',' + detail::optional_cell(r.report.certified_lower) + ',' +
           detail::optional_cell(r.report.analytic_upper) + ',' + r.report.theory_ref + '\n';
  }
  return out;
}

/// Runs the sweep and returns its CSV; writes it to cfg.out when set.
inline std::string sweep(const ExperimentConfig& cfg) {
  std::string csv = sweep_csv(cfg, sweep_rows(cfg));
  if (!cfg.out.empty()) {
    std::ofstream f(cfg.out, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::io_error, "cannot open '" + cfg.out + "' for writing");
    f << csv;
    f.flush();
    require(static_cast<bool>(f), ErrorKind::io_error, "write to '" + cfg.out + "' failed");
  }
  return csv;
}

// ---------------------------------------------------------------------------
// Information-class comparison

struct CompareRow {
  std::string setting;
  std::string information_class;
  std::string quantity;
  double value = 0.0;
  bool computed = true;  // false: quoted from the literature, not reproduced here
  std::string theory_ref;
};

inline constexpr const char* kCompareCsvHeader = "setting,information_class,quantity,value,provenance,theory_ref";

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = std::string(kCompareCsvHeader) + '\n';
  for (const auto& r : rows)
    out += csv_field(r.setting) + ',' + r.information_class + ',' + r.quantity + ',' + format_double(r.value) + ',' +
           (r.computed ? "computed" : "citation-only") + ',' + r.theory_ref + '\n';
  return out;
}

/// Measurement counts and error floors implied for reaching error eps under
/// linear, Lipschitz/continuous and arbitrary information.
inline std::vector<CompareRow> compare_settings(const Problem& prob, double delta, double eps) {
  require(delta >= 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta < 1 required");
  require(eps > 0.0, ErrorKind::invalid_parameters, "target error must be positive");
  const std::string setting = prob.describe() + " delta=" + format_double(delta) + " eps=" + format_double(eps);
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<CompareRow> rows;
  auto add = [&](std::string cls, std::string quantity, double value, bool computed, std::string ref) {
    rows.push_back({setting, std::move(cls), std::move(quantity), value, computed, std::move(ref)});
  };

  if (delta > 0.0) add("linear", "error_floor", delta * prob.operator_norm(), true, "linear-noise-floor");
  const int k = delta > 0.0 ? k_delta(delta) : 0;
  const int kp = delta > 0.0 ? k_prime_delta(delta) : 0;

  if (prob.is_identity()) {
    const auto& id = prob.as_identity();
    const double m = static_cast<double>(id.m);
    add("continuous", "n_sufficient_noise_free", std::ceil(std::log2(m + 1.0) - kCeilNudge) + 1.0, false,
        "noise-free-continuous-recovery");
    if (id.p == id.q) add("linear", "error_for_n_below_m", 1.0, false, "borsuk-ulam");
    if (id.p <= id.q && !(id.p == id.q))
      add("arbitrary", "entropy_rate_exponent", id.p.inverse() - id.q.inverse(), false, "entropy-asymptotics");
    if (id.p == NormTag::finite(2.0) && id.q.is_infinite() && delta > 0.0)
      add("continuous", "n_order_log_m_over_eps2", std::log(m) / (eps * eps), false, "noisy-continuous-vs-linear");
    if (id.p.is_infinite() && id.q.is_infinite() && delta > 0.0) {
      add("lipschitz", "n_sufficient", m * refinement_rounds(eps, delta), true, "coordinate-refinement");
      // eps_j(B_inf^m) = 2^{-floor(j/m)}, so eps_j <= eps iff floor(j/m) >= t
      const double t = std::max(0.0, std::ceil(std::log2(1.0 / eps) - kCeilNudge));
      add("arbitrary", "n_sufficient", kp >= 1 ? std::ceil(t * m / kp) : inf, true, "entropy-sandwich-upper");
      add("arbitrary", "n_necessary", std::ceil(t * m / k), true, "entropy-sandwich-lower");
    }
    return rows;
  }

  const auto& d = prob.as_diagonal();
  std::optional<std::size_t> n_lin;
  for (std::size_t n = 0; n <= d.sigma.size(); ++n) {
    if (diag_truncation_error(d, n, delta) <= eps) {
      n_lin = n;
      break;
    }
  }
  const std::string lin_ref = d.p.is_infinite() ? "diag-linear-optimal" : "diag-truncation";
  add("linear", "n_sufficient", n_lin ? static_cast<double>(*n_lin) : inf, true, lin_ref);
  if (n_lin) add("linear", "error_at_n", diag_truncation_error(d, *n_lin, delta), true, lin_ref);
  if (delta > 0.0 && delta <= 0.5 && d.p.is_infinite()) {
    try {
      add("lipschitz", "n_sufficient", static_cast<double>(diag_allocate(d, eps, delta).total), true,
          "diag-allocation");
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible_truncation) throw;
      add("lipschitz", "n_sufficient", inf, true, "diag-allocation");
    }
  }
  if (delta > 0.0) {
    // e_n <= eps_{n k'} <= 6 formula(n k') and e_n >= eps_{n k} >= formula(n k)
    constexpr std::size_t kMaxN = 4096;
    auto first_n = [&](int bits, double mult) -> double {
      if (bits < 1) return inf;
      for (std::size_t n = 0; n <= kMaxN; ++n)
        if (mult * formula_diagonal(d, n * static_cast<std::size_t>(bits)) <= eps) return static_cast<double>(n);
      return inf;
    };
    add("arbitrary", "n_sufficient", first_n(kp, 6.0), true, "entropy-sandwich-upper");
    add("arbitrary", "n_necessary", first_n(k, 1.0), true, "entropy-sandwich-lower");
  }
  return rows;
}

}  // namespace nibc
