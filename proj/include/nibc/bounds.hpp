#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nibc/algorithms.hpp"
#include "nibc/entropy.hpp"
#include "nibc/error.hpp"
#include "nibc/format.hpp"
#include "nibc/measurement.hpp"
#include "nibc/spaces.hpp"

namespace nibc {

enum class CertificateKind { grid_adversary, linear_floor, lipschitz_floor };

inline std::string to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::grid_adversary: return "GridAdversary";
    case CertificateKind::linear_floor: return "LinearFloor";
    case CertificateKind::lipschitz_floor: return "LipschitzFloor";
  }
  return "?";
}

struct Witness {
  Point f;
  Transcript forced;              // recorded session (grid adversary)
  std::vector<double> forced_y;   // policy-independent forced information
  Point output;                   // reconstruction on the forced information, if known
};

/// A lower bound on e(A_n, delta) backed by inputs and the information the
/// adversary forces on them.
struct LowerBoundCertificate {
  CertificateKind kind = CertificateKind::grid_adversary;
  double delta = 0.0;
  std::vector<Witness> witnesses;
  double claimed_bound = 0.0;
  bool verified = false;
  std::size_t sampled_inputs = 0;
  std::size_t distinct_outputs = 0;
  double resolution = 0.0;  // dyadic spacing of the sampled inputs
  std::string note;

  /// `kind,bound,verified,witness` rows; witness points as JSON arrays.
  std::string to_csv() const {
    std::string out;
    for (const auto& w : witnesses) {
      nlohmann::json f = nlohmann::json::array();
      for (double v : w.f) f.push_back(v);
      out += to_string(kind) + ',' + format_double(claimed_bound) + ',' + (verified ? "true" : "false") + ',' +
             csv_field(f.dump()) + '\n';
    }
    return out;
  }
};

inline constexpr const char* kCertificateCsvHeader = "kind,bound,verified,witness";

struct GridAdversaryOptions {
  SampleOptions sample{7, std::size_t{1} << 15};
};

/// Runs the policy against the grid-snapping adversary on a dyadic grid of
/// inputs plus the domain's extreme points. Snapped information stays within
/// 2^{-k_delta} <= delta of every true value, so the largest error observed is
/// a certified lower bound on the policy's worst-case error.
inline LowerBoundCertificate grid_adversary(const Policy& policy, const Problem& prob, double delta,
                                            const GridAdversaryOptions& opt = {}) {
  const int k = k_delta(delta);
  const NoiseAdversary adv(delta, noise::GridSnap{k});
  DomainSample dom = sample_domain(prob, opt.sample);
  for (auto& x : extreme_points(prob)) dom.points.push_back(std::move(x));

  LowerBoundCertificate cert;
  cert.kind = CertificateKind::grid_adversary;
  cert.delta = delta;
  cert.verified = true;
  cert.resolution = dom.spacing;
  cert.sampled_inputs = dom.points.size();
  cert.note = "grid w_i = -1 + (2i-1) 2^-" + std::to_string(k);
  std::set<std::vector<double>> outputs;
  double best = -1.0;
  for (const auto& f : dom.points) {
    SessionResult r = run_session(policy, f, prob, adv);
    if (!transcript_admissible(r.transcript, prob, f, delta)) cert.verified = false;
    outputs.insert(std::vector<double>(r.output.begin(), r.output.end()));
    if (r.error > best) {
      best = r.error;
      std::vector<double> ys = r.transcript.ys();
      cert.witnesses.assign(1, Witness{f, std::move(r.transcript), std::move(ys), r.output});
    }
  }
  cert.claimed_bound = std::max(best, 0.0);
  cert.distinct_outputs = outputs.size();
  return cert;
}

/// Moves f toward 0 by ulps until ||f||_p <= bound holds in floating point.
inline Point shrink_into(Point f, NormTag p, double bound) {
  while (norm(f, p) > bound) {
    std::vector<double> v(f.begin(), f.end());
    for (double& x : v) x = std::nextafter(x, 0.0);
    f = Point(std::move(v));
  }
  return f;
}

/// delta x* and -delta x* give every linear functional of norm <= 1 a value in
/// [-delta, delta], so y = 0 is admissible information for both and no
/// algorithm can tell them apart: error >= delta ||S||.
inline LowerBoundCertificate linear_floor(const Problem& prob, double delta, std::size_t n = 0) {
  require(delta >= 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in [0, 1)");
  const NormTag p = prob.domain_norm();
  const Point f = shrink_into(delta * extremal_direction(prob), p, delta);
  const Point g = -1.0 * f;
  LowerBoundCertificate cert;
  cert.kind = CertificateKind::linear_floor;
  cert.delta = delta;
  const std::vector<double> zeros(n, 0.0);
  cert.witnesses = {Witness{f, {}, zeros, {}}, Witness{g, {}, zeros, {}}};
  cert.claimed_bound = distance(apply_operator(prob, f), apply_operator(prob, g), prob.target_norm()) / 2.0;
  cert.verified = norm(f, p) <= delta && norm(g, p) <= delta;
  cert.note = "forced information y = 0";
  return cert;
}

/// Witness pair at distance 2 delta / L. Every L-Lipschitz functional differs
/// by at most 2 delta on them, so the midpoint information is admissible for
/// both and the error is at least half the output distance, omega(2 delta/L)/2.
inline LowerBoundCertificate lipschitz_floor(const Problem& prob, double L, double delta) {
  require(L > 0.0, ErrorKind::invalid_parameters, "Lipschitz constant must be positive");
  require(delta >= 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "delta must lie in [0, 1)");
  const NormTag p = prob.domain_norm();
  const double gamma = 2.0 * delta / L;
  const Point x = extremal_direction(prob);
  Point f = Point::zeros(prob.dim());
  Point g = Point::zeros(prob.dim());
  if (gamma <= 1.0) {
    g = shrink_into(gamma * x, p, 1.0);
  } else {
    const double t = std::min(gamma, 2.0) / 2.0;
    g = shrink_into(t * x, p, 1.0);
    f = -1.0 * g;
  }
  while (L * distance(f, g, p) > 2.0 * delta) g = shrink_into(g, p, norm(g, p) * (1.0 - 1e-16));
  LowerBoundCertificate cert;
  cert.kind = CertificateKind::lipschitz_floor;
  cert.delta = delta;
  cert.witnesses = {Witness{f, {}, {}, {}}, Witness{g, {}, {}, {}}};
  cert.claimed_bound = distance(apply_operator(prob, f), apply_operator(prob, g), prob.target_norm()) / 2.0;
  cert.verified = prob.contains(f) && prob.contains(g) && L * distance(f, g, p) <= 2.0 * delta;
  cert.note = "midpoint information, L = " + format_double(L);
  return cert;
}

struct PolicyCheck {
  bool ok = false;
  double witnessed_error = 0.0;  // largest error realized on the witnesses
  std::string reason;
};

namespace detail {

/// Midpoint of a and b with both |y - a| and |y - b| <= delta in floating point.
inline std::optional<double> shared_information(double a, double b, double delta) {
  double y = a + 0.5 * (b - a);
  for (int i = 0; i < 8; ++i) {
    const bool fa = std::abs(y - a) <= delta, fb = std::abs(y - b) <= delta;
    if (fa && fb) return y;
    if (!fa && !fb) return std::nullopt;
    y = std::nextafter(y, fa ? b : a);
  }
  return std::nullopt;
}

}  // namespace detail

/// Re-checks a certificate against a concrete policy by running it on the
/// forced information.
inline PolicyCheck verify_against(const LowerBoundCertificate& cert, const Policy& policy, const Problem& prob) {
  PolicyCheck out;
  const double delta = cert.delta;
  switch (cert.kind) {
    case CertificateKind::grid_adversary: {
      const NoiseAdversary adv(delta, noise::GridSnap{k_delta(delta)});
      for (const auto& w : cert.witnesses) {
        const SessionResult r = run_session(policy, w.f, prob, adv);
        if (r.transcript.ys() != w.forced_y || !transcript_admissible(r.transcript, prob, w.f, delta)) {
          out.reason = "grid session does not reproduce";
          return out;
        }
        out.witnessed_error = std::max(out.witnessed_error, r.error);
      }
      out.ok = out.witnessed_error >= cert.claimed_bound;
      return out;
    }
    case CertificateKind::linear_floor: {
      std::vector<Point> outputs;
      for (const auto& w : cert.witnesses) {
        const NoiseAdversary adv(delta, noise::Replay{std::vector<double>(policy.budget(), 0.0)});
        SessionResult r;
        try {
          r = run_session(policy, w.f, prob, adv);
        } catch (const Error& e) {
          out.reason = e.what();
          return out;
        }
        for (const auto& obs : r.transcript.entries) {
          if (obs.y != 0.0 || obs.functional.declared.kind != ClassKind::linear) {
            out.reason = "zero information is not forced (policy is not linear)";
            return out;
          }
        }
        outputs.push_back(r.output);
        out.witnessed_error = std::max(out.witnessed_error, r.error);
      }
      if (outputs.size() == 2 && !(outputs[0] == outputs[1])) {
        out.reason = "policy answers differently on identical information";
        return out;
      }
      out.ok = true;
      return out;
    }
    case CertificateKind::lipschitz_floor: {
      const Point& f = cert.witnesses.at(0).f;
      const Point& g = cert.witnesses.at(1).f;
      Transcript t;
      while (auto next = policy.choose_next(t)) {
        require_admissible(*next, prob);
        const double a = evaluate(*next, prob, f), b = evaluate(*next, prob, g);
        const auto y = detail::shared_information(a, b, delta);
        if (!y) {
          out.reason = "witnesses are distinguishable by a " + functional_kind(*next) + " measurement";
          return out;
        }
        t.push(std::move(*next), *y);
      }
      const Point answer = policy.reconstruct(t);
      out.witnessed_error = std::max(distance(apply_operator(prob, f), answer, prob.target_norm()),
                                     distance(apply_operator(prob, g), answer, prob.target_norm()));
      out.ok = true;
      return out;
    }
  }
  return out;
}

/// Largest Lipschitz constant among the functionals a policy emits on a
/// zero-noise run from the origin; infinite when some step is not Lipschitz.
inline double observed_lipschitz(const Policy& policy, const Problem& prob) {
  const SessionResult r = run_session(policy, Point::zeros(prob.dim()), prob, NoiseAdversary::zero());
  double L = 0.0;
  for (const auto& obs : r.transcript.entries) {
    const ClassReport rep = validate(obs.functional, prob);
    if (!rep.lipschitz_estimate) return std::numeric_limits<double>::infinity();
    L = std::max(L, *rep.lipschitz_estimate);
  }
  return L;
}

}  // namespace nibc
