#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "nibc/error.hpp"
#include "nibc/format.hpp"
#include "nibc/rng.hpp"
#include "nibc/spaces.hpp"

namespace nibc {

// ---------------------------------------------------------------------------
// Functional classes

enum class ClassKind { linear, continuous, lipschitz, arbitrary };

struct DeclaredClass {
  ClassKind kind = ClassKind::arbitrary;
  double lipschitz_constant = 0.0;  // only meaningful for ClassKind::lipschitz

  static DeclaredClass linear() { return {ClassKind::linear, 0.0}; }
  static DeclaredClass continuous() { return {ClassKind::continuous, 0.0}; }
  static DeclaredClass arbitrary() { return {ClassKind::arbitrary, 0.0}; }
  static DeclaredClass lipschitz(double L) {
    require(L > 0.0, ErrorKind::invalid_input, "Lipschitz constant must be positive");
    return {ClassKind::lipschitz, L};
  }

  std::string to_string() const {
    switch (kind) {
      case ClassKind::linear: return "linear";
      case ClassKind::continuous: return "continuous";
      case ClassKind::lipschitz: return "lipschitz(" + format_double(lipschitz_constant) + ")";
      case ClassKind::arbitrary: return "arbitrary";
    }
    return "?";
  }
};

// ---------------------------------------------------------------------------
// Functional vocabulary

struct Functional;
using FunctionalPtr = std::shared_ptr<const Functional>;

/// <w, x>, hard-clamped to [-1, 1].
struct LinearForm {
  Point weights;
};

/// (2/eta) * min{ d(S f, union of balls), delta_plus * eta } - 1.
struct DistToUnion {
  std::vector<Point> centers;
  double radius = 0.0;
  NormTag q = NormTag::infinity();
  double eta = 1.0;
  double delta_plus = 1.0;
};

/// Rescaled residual of a scalar source around `anchor` at refinement level j:
///   delta^{1-j} (s - anchor)   if |s - anchor| <= delta^{j-1}
///   sgn(s - anchor)            otherwise.
/// The source is coordinate `coord` of f, or the value of `inner` when set.
struct CoordRefine {
  std::size_t coord = 0;
  FunctionalPtr inner;
  double anchor = 0.0;
  int level = 1;
  double delta = 0.5;
};

/// Emits the level of the quantizer digit that encodes the nearest-center
/// cell of S(f). Digits are most significant first.
struct QuantizedCell {
  std::shared_ptr<const std::vector<Point>> centers;
  NormTag q = NormTag::infinity();
  std::size_t step = 0;
  std::size_t steps = 1;
  int bits = 1;
};

/// a * inner + b, clamped to [-1, 1] unless the clamp is explicitly removed.
struct AffineClamp {
  FunctionalPtr inner;
  double a = 1.0;
  double b = 0.0;
  bool clamped = true;
};

using Descriptor = std::variant<LinearForm, DistToUnion, CoordRefine, QuantizedCell, AffineClamp>;

struct Functional {
  Descriptor descriptor;
  DeclaredClass declared;
};

inline double refine_scale(double delta, int level) { return std::pow(delta, 1 - level); }
inline double refine_window(double delta, int level) { return std::pow(delta, level - 1); }

/// Level value v_i = -1 + 2 i / (2^bits - 1), i zero-based; one level means 0.
inline double quantizer_level(std::size_t index, int bits) {
  const double count = std::exp2(bits);
  if (count <= 1.0) return 0.0;
  return -1.0 + 2.0 * static_cast<double>(index) / (count - 1.0);
}

/// Index of the center nearest to y (lowest index on ties).
inline std::size_t nearest_center(const Point& y, const std::vector<Point>& centers, NormTag q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const double d = distance(y, centers[i], q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

namespace detail {

/// Memo of the last nearest-center lookup on this thread; an encoder asks for
/// the same cell once per step.
inline std::size_t cached_nearest_center(const Point& y, const std::shared_ptr<const std::vector<Point>>& centers,
                                         NormTag q) {
  struct Memo {
    std::shared_ptr<const std::vector<Point>> centers;
    NormTag q = NormTag::infinity();
    Point y;
    std::size_t cell = 0;
  };
  thread_local Memo memo;
  if (memo.centers == centers && memo.q == q && memo.y == y) return memo.cell;
  memo = {centers, q, y, nearest_center(y, *centers, q)};
  return memo.cell;
}

inline double raw_value(const Functional& fn, const Problem& prob, const Point& f);

inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

inline double refine_value(double source, double anchor, int level, double delta) {
  const double r = source - anchor;
  if (std::abs(r) <= refine_window(delta, level)) return clamp_unit(refine_scale(delta, level) * r);
  return r > 0.0 ? 1.0 : -1.0;
}

inline double raw_value(const Functional& fn, const Problem& prob, const Point& f) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearForm>) {
          require(d.weights.dim() == f.dim(), ErrorKind::invalid_input, "linear form dimension mismatch");
          double s = 0.0;
          for (std::size_t i = 0; i < f.dim(); ++i) s += d.weights[i] * f[i];
          return clamp_unit(s);
        } else if constexpr (std::is_same_v<T, DistToUnion>) {
          const double dist = dist_to_union(apply_operator(prob, f), d.centers, d.radius, d.q);
          return (2.0 / d.eta) * std::min(dist, d.delta_plus * d.eta) - 1.0;
        } else if constexpr (std::is_same_v<T, CoordRefine>) {
          double source = 0.0;
          if (d.inner) {
            source = raw_value(*d.inner, prob, f);
          } else {
            require(d.coord < f.dim(), ErrorKind::invalid_input, "refinement coordinate out of range");
            source = f[d.coord];
          }
          return refine_value(source, d.anchor, d.level, d.delta);
        } else if constexpr (std::is_same_v<T, QuantizedCell>) {
          if (d.bits == 0) return 0.0;
          const std::size_t cell = cached_nearest_center(apply_operator(prob, f), d.centers, d.q);
          const std::size_t shift = static_cast<std::size_t>(d.bits) * (d.steps - 1 - d.step);
          const std::size_t digit = (cell >> shift) & ((std::size_t{1} << d.bits) - 1);
          return quantizer_level(digit, d.bits);
        } else {
          const double v = d.a * raw_value(*d.inner, prob, f) + d.b;
          return d.clamped ? clamp_unit(v) : v;
        }
      },
      fn.descriptor);
}

}  // namespace detail

/// lambda(f). The result always lies in [-1, 1]; a descriptor whose clamp was
/// removed and that leaves the interval raises range-violation.
inline double evaluate(const Functional& fn, const Problem& prob, const Point& f) {
  const double v = detail::raw_value(fn, prob, f);
  require(v >= -1.0 && v <= 1.0, ErrorKind::range_violation,
          "functional value " + format_double(v) + " leaves [-1, 1]");
  return v;
}

// ---------------------------------------------------------------------------
// Analytic class certificates

struct ClassReport {
  bool range_ok = false;
  std::optional<double> dual_norm;           // exact, for linear descriptors
  std::optional<double> lipschitz_estimate;  // exact constant w.r.t. the domain norm
  bool continuous = false;
  bool class_consistent = false;

  bool admissible() const noexcept { return range_ok && class_consistent; }
};

namespace detail {

struct Analysis {
  double lo = -1.0, hi = 1.0;  // raw range before the descriptor's own clamp
  bool linear = false;         // exactly x -> <w, x>
  double dual = 0.0;
  bool continuous = false;
  double lipschitz = std::numeric_limits<double>::infinity();
  bool range_ok = true;
};

inline Analysis analyze(const Functional& fn, const Problem& prob) {
  return std::visit(
      [&](const auto& d) -> Analysis {
        using T = std::decay_t<decltype(d)>;
        Analysis a;
        if constexpr (std::is_same_v<T, LinearForm>) {
          require(d.weights.dim() == prob.dim(), ErrorKind::invalid_input, "linear form dimension mismatch");
          const double dual = norm(d.weights, prob.domain_norm().dual()) * prob.domain_radius();
          a.dual = dual;
          a.lo = -dual;
          a.hi = dual;
          a.range_ok = dual <= 1.0;
          a.linear = a.range_ok;
          a.continuous = true;
          a.lipschitz = dual;
        } else if constexpr (std::is_same_v<T, DistToUnion>) {
          require(d.eta > 0.0, ErrorKind::invalid_input, "eta must be positive");
          a.lo = -1.0;
          a.hi = 2.0 * d.delta_plus - 1.0;
          a.range_ok = d.delta_plus <= 1.0 && d.delta_plus >= 0.0;
          a.continuous = true;
          a.lipschitz = 2.0 / d.eta * prob.operator_norm();
        } else if constexpr (std::is_same_v<T, CoordRefine>) {
          require(d.level >= 1, ErrorKind::invalid_input, "refinement level must be >= 1");
          require(d.delta > 0.0 && d.delta < 1.0, ErrorKind::invalid_input, "delta must lie in (0,1)");
          double source_lip = 1.0;
          bool source_cont = true;
          if (d.inner) {
            const Analysis in = analyze(*d.inner, prob);
            source_lip = in.lipschitz;
            source_cont = in.continuous;
          } else {
            require(d.coord < prob.dim(), ErrorKind::invalid_input, "refinement coordinate out of range");
          }
          a.continuous = source_cont;
          a.lipschitz = source_cont ? refine_scale(d.delta, d.level) * source_lip
                                    : std::numeric_limits<double>::infinity();
        } else if constexpr (std::is_same_v<T, QuantizedCell>) {
          require(d.centers && !d.centers->empty(), ErrorKind::invalid_input, "quantized cell without centers");
          if (d.bits == 0) {
            a.lo = a.hi = 0.0;
            a.linear = true;
            a.continuous = true;
            a.lipschitz = 0.0;
          }
        } else {
          require(static_cast<bool>(d.inner), ErrorKind::invalid_input, "affine clamp without inner functional");
          const Analysis in = analyze(*d.inner, prob);
          const double l1 = d.a * in.lo + d.b, l2 = d.a * in.hi + d.b;
          a.lo = std::min(l1, l2);
          a.hi = std::max(l1, l2);
          const bool inside = a.lo >= -1.0 && a.hi <= 1.0;
          a.range_ok = d.clamped || inside;
          a.linear = in.linear && d.b == 0.0 && inside;
          a.dual = std::abs(d.a) * in.dual;
          a.continuous = in.continuous;
          a.lipschitz = std::abs(d.a) * in.lipschitz;
        }
        return a;
      },
      fn.descriptor);
}

}  // namespace detail

/// Analytic admissibility report. Declaring a functional linear when it is not
/// (including a linear form of dual norm above 1) raises class-mismatch.
inline ClassReport validate(const Functional& fn, const Problem& prob) {
  const detail::Analysis a = detail::analyze(fn, prob);
  ClassReport r;
  r.range_ok = a.range_ok;
  r.continuous = a.continuous;
  if (std::holds_alternative<LinearForm>(fn.descriptor) || a.linear) r.dual_norm = a.dual;
  if (std::isfinite(a.lipschitz)) r.lipschitz_estimate = a.lipschitz;
  switch (fn.declared.kind) {
    case ClassKind::linear:
      r.class_consistent = a.linear;
      if (!a.linear) {
        std::string what = "functional declared linear is not a linear form of dual norm <= 1";
        if (r.dual_norm) what += " (dual norm " + format_double(*r.dual_norm) + ")";
        throw Error(ErrorKind::class_mismatch, what);
      }
      break;
    case ClassKind::continuous:
      r.class_consistent = a.continuous;
      break;
    case ClassKind::lipschitz:
      r.class_consistent =
          a.continuous && a.lipschitz <= fn.declared.lipschitz_constant * (1.0 + 1e-12);
      break;
    case ClassKind::arbitrary:
      r.class_consistent = true;
      break;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string functional_kind(const Functional& fn) {
  static constexpr const char* names[] = {"LinearForm", "DistToUnion", "CoordRefine", "QuantizedCell",
                                          "AffineClamp"};
  return names[fn.descriptor.index()];
}

inline nlohmann::json functional_params(const Functional& fn) {
  auto point_json = [](const Point& p) {
    nlohmann::json arr = nlohmann::json::array();
    for (double v : p) arr.push_back(v);
    return arr;
  };
  nlohmann::json j = std::visit(
      [&](const auto& d) -> nlohmann::json {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, LinearForm>) {
          return {{"weights", point_json(d.weights)}};
        } else if constexpr (std::is_same_v<T, DistToUnion>) {
          nlohmann::json cs = nlohmann::json::array();
          for (const auto& c : d.centers) cs.push_back(point_json(c));
          return {{"centers", cs}, {"radius", d.radius}, {"q", d.q.to_string()},
                  {"eta", d.eta}, {"delta_plus", d.delta_plus}};
        } else if constexpr (std::is_same_v<T, CoordRefine>) {
          nlohmann::json out = {{"anchor", d.anchor}, {"level", d.level}, {"delta", d.delta}};
          if (d.inner) {
            out["inner"] = {{"kind", functional_kind(*d.inner)}, {"params", functional_params(*d.inner)}};
          } else {
            out["coord"] = d.coord;
          }
          return out;
        } else if constexpr (std::is_same_v<T, QuantizedCell>) {
          return {{"cells", d.centers ? d.centers->size() : 0}, {"q", d.q.to_string()},
                  {"step", d.step}, {"steps", d.steps}, {"bits", d.bits}};
        } else {
          return {{"inner", {{"kind", functional_kind(*d.inner)}, {"params", functional_params(*d.inner)}}},
                  {"a", d.a}, {"b", d.b}, {"clamped", d.clamped}};
        }
      },
      fn.descriptor);
  j["class"] = fn.declared.to_string();
  return j;
}

// ---------------------------------------------------------------------------
// Noise

namespace noise {
struct Zero {};
struct FixedShift {
  double shift;
};
/// +1 / -1 per step; steps past the end of the pattern are noiseless.
struct SignPattern {
  std::vector<int> signs;
};
struct SeededRandom {
  std::uint64_t seed;
};
/// Snaps to w_i = -1 + (2i - 1) 2^{-k}, half-open cells, top cell closed.
struct GridSnap {
  int k;
};
/// Per-step offsets in units of delta, each in [-1, 1]; set by a search.
struct SearchDriven {
  std::vector<double> offsets;
};
/// Emits prescribed values (moved to the nearest admissible value if needed).
struct Replay {
  std::vector<double> values;
};
}  // namespace noise

using NoiseStrategy = std::variant<noise::Zero, noise::FixedShift, noise::SignPattern, noise::SeededRandom,
                                   noise::GridSnap, noise::SearchDriven, noise::Replay>;

/// Nearest double to `target` with fl(|y - value|) <= delta.
inline double admissible_value(double value, double target, double delta) {
  double y = target;
  if (!(std::abs(y - value) <= delta)) y = value + std::clamp(target - value, -delta, delta);
  while (!(std::abs(y - value) <= delta)) y = std::nextafter(y, value);
  return y;
}

/// A value-copied adversary. It sees the true value and the step index and
/// may be as informed as it likes; every output is exactly admissible.
class NoiseAdversary {
 public:
  NoiseAdversary(double delta, NoiseStrategy strategy) : delta_(delta), strategy_(std::move(strategy)) {
    require(delta >= 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "noise level must lie in [0, 1)");
    if (const auto* s = std::get_if<noise::FixedShift>(&strategy_))
      require(std::abs(s->shift) <= delta, ErrorKind::invalid_parameters, "fixed shift exceeds delta");
    if (const auto* g = std::get_if<noise::GridSnap>(&strategy_)) {
      require(g->k >= 0 && g->k < 60, ErrorKind::invalid_parameters, "grid exponent out of range");
      require(std::exp2(-g->k) <= delta, ErrorKind::invalid_parameters, "grid spacing 2^-k exceeds delta");
    }
  }

  static NoiseAdversary zero(double delta = 0.0) { return {delta, noise::Zero{}}; }

  double delta() const noexcept { return delta_; }
  const NoiseStrategy& strategy() const noexcept { return strategy_; }

  double observe(double true_value, std::size_t step) const {
    const double target = std::visit(
        [&](const auto& s) -> double {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, noise::Zero>) {
            return true_value;
          } else if constexpr (std::is_same_v<T, noise::FixedShift>) {
            return true_value + s.shift;
          } else if constexpr (std::is_same_v<T, noise::SignPattern>) {
            if (step >= s.signs.size()) return true_value;
            return true_value + (s.signs[step] >= 0 ? delta_ : -delta_);
          } else if constexpr (std::is_same_v<T, noise::SeededRandom>) {
            return true_value + delta_ * uniform_pm1(s.seed, step);
          } else if constexpr (std::is_same_v<T, noise::GridSnap>) {
            return grid_snap(true_value, s.k);
          } else if constexpr (std::is_same_v<T, noise::SearchDriven>) {
            if (step >= s.offsets.size()) return true_value;
            return true_value + delta_ * std::clamp(s.offsets[step], -1.0, 1.0);
          } else {
            if (step >= s.values.size()) return true_value;
            return s.values[step];
          }
        },
        strategy_);
    return admissible_value(true_value, target, delta_);
  }

  /// Grid point w_i whose cell [w_i - h, w_i + h) holds v, h = 2^{-k}.
  static double grid_snap(double v, int k) {
    const double h = std::exp2(-k);
    const long long cells = 1LL << k;
    long long i = static_cast<long long>(std::floor((v + 1.0) / (2.0 * h))) + 1;
    i = std::clamp(i, 1LL, cells);
    auto w = [&](long long idx) { return -1.0 + static_cast<double>(2 * idx - 1) * h; };
    while (i > 1 && v < w(i) - h) --i;
    while (i < cells && v >= w(i) + h) ++i;
    return w(i);
  }

 private:
  double delta_;
  NoiseStrategy strategy_;
};

// ---------------------------------------------------------------------------
// Transcripts, policies, sessions

struct Observation {
  Functional functional;
  double y;
};

struct Transcript {
  std::vector<Observation> entries;

  std::size_t size() const noexcept { return entries.size(); }
  bool empty() const noexcept { return entries.empty(); }
  const Observation& operator[](std::size_t i) const { return entries[i]; }
  void push(Functional fn, double y) { entries.push_back({std::move(fn), y}); }
  std::vector<double> ys() const {
    std::vector<double> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.y);
    return out;
  }
};

/// CSV rows `session_id,step,functional_kind,functional_params,y` (no header).
inline std::string transcript_csv(const std::string& session_id, const Transcript& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += csv_field(session_id) + ',' + std::to_string(i + 1) + ',' + functional_kind(t[i].functional) + ',' +
           csv_field(functional_params(t[i].functional).dump()) + ',' + format_double(t[i].y) + '\n';
  }
  return out;
}

inline constexpr const char* kTranscriptCsvHeader = "session_id,step,functional_kind,functional_params,y";

/// An information strategy plus reconstruction map. Both callbacks are pure
/// functions of the transcript so one policy can serve any number of sessions.
class Policy {
 public:
  using Chooser = std::function<std::optional<Functional>(const Transcript&)>;
  using Reconstructor = std::function<Point(const Transcript&)>;

  Policy(std::string name, std::size_t budget, bool adaptive, Chooser choose, Reconstructor reconstruct)
      : name_(std::move(name)),
        budget_(budget),
        adaptive_(adaptive),
        choose_(std::move(choose)),
        reconstruct_(std::move(reconstruct)) {}

  const std::string& name() const noexcept { return name_; }
  std::size_t budget() const noexcept { return budget_; }
  bool adaptive() const noexcept { return adaptive_; }

  std::optional<Functional> choose_next(const Transcript& t) const {
    if (t.size() >= budget_) return std::nullopt;
    return choose_(t);
  }
  Point reconstruct(const Transcript& t) const { return reconstruct_(t); }

 private:
  std::string name_;
  std::size_t budget_;
  bool adaptive_;
  Chooser choose_;
  Reconstructor reconstruct_;
};

/// Policy that measures nothing and always answers `output`.
inline Policy constant_policy(Point output) {
  return Policy(
      "constant", 0, false, [](const Transcript&) -> std::optional<Functional> { return std::nullopt; },
      [output = std::move(output)](const Transcript&) { return output; });
}

struct SessionResult {
  Transcript transcript;
  Point output;
  double error = 0.0;
};

inline void require_admissible(const Functional& fn, const Problem& prob) {
  ClassReport report;
  try {
    report = validate(fn, prob);
  } catch (const Error& e) {
    throw Error(ErrorKind::admissibility_violation, e.what());
  }
  require(report.admissible(), ErrorKind::admissibility_violation,
          functional_kind(fn) + " functional fails its declared class " + fn.declared.to_string());
}

/// One run of a policy against one input and one adversary.
inline SessionResult run_session(const Policy& policy, const Point& f, const Problem& prob,
                                 const NoiseAdversary& adv) {
  require(prob.contains(f), ErrorKind::domain_violation, "input lies outside the domain ball");
  SessionResult result;
  while (auto next = policy.choose_next(result.transcript)) {
    require_admissible(*next, prob);
    const double value = evaluate(*next, prob, f);
    const double y = adv.observe(value, result.transcript.size());
    result.transcript.push(std::move(*next), y);
  }
  result.output = policy.reconstruct(result.transcript);
  require(result.output.dim() == prob.dim(), ErrorKind::invalid_input, "policy output has the wrong dimension");
  result.error = distance(apply_operator(prob, f), result.output, prob.target_norm());
  return result;
}

/// True when feeding the transcript's observations back into the policy
/// reproduces its functional sequence.
inline bool replay_matches(const Policy& policy, const Transcript& t) {
  Transcript prefix;
  for (const auto& obs : t.entries) {
    auto next = policy.choose_next(prefix);
    if (!next) return false;
    if (functional_kind(*next) != functional_kind(obs.functional) ||
        functional_params(*next) != functional_params(obs.functional))
      return false;
    prefix.push(std::move(*next), obs.y);
  }
  return !policy.choose_next(prefix).has_value();
}

/// Checks |y_i - lambda_i(f)| <= delta for every recorded step, exactly.
inline bool transcript_admissible(const Transcript& t, const Problem& prob, const Point& f, double delta) {
  for (const auto& obs : t.entries)
    if (!(std::abs(obs.y - evaluate(obs.functional, prob, f)) <= delta)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Unbounded-range demonstration

/// What goes wrong without the [-1, 1] range restriction: one observation of
/// eta * lambda with eta = delta / delta1 pins lambda(f) down to delta1.
class UnboundedRangeEstimator {
 public:
  UnboundedRangeEstimator(Functional lambda, double delta, double delta1)
      : lambda_(std::move(lambda)), eta_(delta / delta1) {}

  double eta() const noexcept { return eta_; }

  double estimate(const Problem& prob, const Point& f, const NoiseAdversary& adv) const {
    const double scaled = eta_ * detail::raw_value(lambda_, prob, f);
    return adv.observe(scaled, 0) / eta_;
  }

 private:
  Functional lambda_;
  double eta_;
};

/// Requires an AffineClamp descriptor whose clamp was removed.
inline UnboundedRangeEstimator exploit_unbounded_range(const Functional& lambda, double delta, double delta1) {
  require(delta1 > 0.0, ErrorKind::invalid_parameters, "target precision must be positive");
  require(delta > 0.0 && delta < 1.0, ErrorKind::invalid_parameters, "noise level must lie in (0, 1)");
  const auto* affine = std::get_if<AffineClamp>(&lambda.descriptor);
  require(affine != nullptr && !affine->clamped, ErrorKind::range_violation,
          "range clamp is active; the rescaling exploit needs an unclamped functional");
  return UnboundedRangeEstimator(lambda, delta, delta1);
}

}  // namespace nibc
