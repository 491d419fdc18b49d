#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nibc/error.hpp"

namespace nibc {

/// Exponent of an l_p norm. Infinity is its own state, never a large float.
class NormTag {
 public:
  static NormTag finite(double p) {
    require(std::isfinite(p) && p >= 1.0, ErrorKind::invalid_input,
            "norm exponent must satisfy p >= 1, got " + std::to_string(p));
    return NormTag(p, false);
  }
  static constexpr NormTag infinity() noexcept { return NormTag(0.0, true); }

  /// Accepts "inf", "infty", "oo" or a decimal >= 1.
  static NormTag parse(const std::string& text) {
    if (text == "inf" || text == "infty" || text == "oo" || text == "Inf") return infinity();
    std::size_t used = 0;
    double p = 0.0;
    try {
      p = std::stod(text, &used);
    } catch (const std::exception&) {
      throw Error(ErrorKind::invalid_input, "cannot parse norm exponent '" + text + "'");
    }
    require(used == text.size(), ErrorKind::invalid_input, "cannot parse norm exponent '" + text + "'");
    return finite(p);
  }

  constexpr bool is_infinite() const noexcept { return infinite_; }
  constexpr double p() const noexcept {
    return infinite_ ? std::numeric_limits<double>::infinity() : p_;
  }
  /// 1/p with 1/inf = 0.
  constexpr double inverse() const noexcept { return infinite_ ? 0.0 : 1.0 / p_; }

  /// Hoelder conjugate.
  NormTag dual() const {
    if (infinite_) return finite(1.0);
    if (p_ == 1.0) return infinity();
    return finite(p_ / (p_ - 1.0));
  }

  std::string to_string() const {
    if (infinite_) return "inf";
    std::string s = std::to_string(p_);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  friend constexpr bool operator==(const NormTag& a, const NormTag& b) noexcept {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.p_ == b.p_);
  }
  // p <= q  <=>  1/p >= 1/q
  friend constexpr std::partial_ordering operator<=>(const NormTag& a, const NormTag& b) noexcept {
    return b.inverse() <=> a.inverse();
  }

 private:
  constexpr NormTag(double p, bool infinite) noexcept : p_(p), infinite_(infinite) {}
  double p_;
  bool infinite_;
};

/// A finite vector in R^m.
class Point {
 public:
  Point() = default;
  explicit Point(std::vector<double> entries) : x_(std::move(entries)) { check(); }
  Point(std::initializer_list<double> entries) : x_(entries) { check(); }

  static Point zeros(std::size_t m) { return Point(std::vector<double>(m, 0.0)); }
  static Point basis(std::size_t m, std::size_t i, double scale = 1.0) {
    std::vector<double> v(m, 0.0);
    v.at(i) = scale;
    return Point(std::move(v));
  }

  std::size_t dim() const noexcept { return x_.size(); }
  double operator[](std::size_t i) const noexcept { return x_[i]; }
  std::span<const double> values() const noexcept { return x_; }
  auto begin() const noexcept { return x_.begin(); }
  auto end() const noexcept { return x_.end(); }

  void set(std::size_t i, double v) {
    require(std::isfinite(v), ErrorKind::invalid_input, "point entries must be finite");
    x_.at(i) = v;
  }

  friend Point operator-(const Point& a, const Point& b) {
    require(a.dim() == b.dim(), ErrorKind::invalid_input, "dimension mismatch");
    std::vector<double> d(a.dim());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.x_[i] - b.x_[i];
    return Point(std::move(d));
  }
  friend Point operator+(const Point& a, const Point& b) {
    require(a.dim() == b.dim(), ErrorKind::invalid_input, "dimension mismatch");
    std::vector<double> d(a.dim());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = a.x_[i] + b.x_[i];
    return Point(std::move(d));
  }
  friend Point operator*(double s, const Point& a) {
    std::vector<double> d(a.dim());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = s * a.x_[i];
    return Point(std::move(d));
  }
  friend bool operator==(const Point&, const Point&) = default;

 private:
  void check() const {
    for (double v : x_)
      require(std::isfinite(v), ErrorKind::invalid_input, "point entries must be finite");
  }
  std::vector<double> x_;
};

/// ||x||_p.
inline double norm(std::span<const double> x, NormTag tag) {
  require(!x.empty(), ErrorKind::invalid_input, "norm of a zero-dimensional vector");
  if (tag.is_infinite()) {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::abs(v));
    return m;
  }
  const double p = tag.p();
  if (p == 1.0) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double v : x) s = std::hypot(s, v);
    return s;
  }
  // scale by the max entry so large p does not overflow
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : x) s += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(s, 1.0 / p);
}

inline double norm(const Point& x, NormTag tag) { return norm(x.values(), tag); }

inline double distance(const Point& a, const Point& b, NormTag tag) {
  require(a.dim() == b.dim(), ErrorKind::invalid_input, "dimension mismatch");
  require(a.dim() > 0, ErrorKind::invalid_input, "zero-dimensional points");
  if (tag.is_infinite()) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
  }
  return norm(a - b, tag);
}

/// ||I_{p,q}^m|| = max{ ||x||_q : ||x||_p = 1 }.
inline double embedding_norm(NormTag p, NormTag q, std::size_t m) {
  require(m >= 1, ErrorKind::invalid_input, "embedding dimension must be positive");
  if (p <= q) return 1.0;
  return std::pow(static_cast<double>(m), q.inverse() - p.inverse());
}

/// min over centers of max(||y - c||_q - radius, 0).
inline double dist_to_union(const Point& y, std::span<const Point> centers, double radius, NormTag q) {
  require(!centers.empty(), ErrorKind::invalid_input, "empty center list");
  require(radius >= 0.0, ErrorKind::invalid_input, "negative radius");
  double best = std::numeric_limits<double>::infinity();
  for (const Point& c : centers) {
    best = std::min(best, std::max(distance(y, c, q) - radius, 0.0));
    if (best == 0.0) break;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Problem instances

/// Relative tolerance for domain membership; witnesses often sit on the sphere.
inline constexpr double kDomainTolerance = 1e-9;

struct IdentityInstance {
  NormTag p;
  NormTag q;
  std::size_t m;
};

/// D_sigma on the unit ball of l_p. `sigma` is a finite truncation and
/// `tail_bound` stands for sigma_{M+1} (an upper bound for the whole tail).
struct DiagonalInstance {
  std::vector<double> sigma;
  double tail_bound;
  NormTag p;

  /// sigma_k with 1-based k; indices past the truncation read the tail bound.
  double at(std::size_t k) const { return k <= sigma.size() ? sigma[k - 1] : tail_bound; }
};

class Problem {
 public:
  using Kind = std::variant<IdentityInstance, DiagonalInstance>;

  static Problem identity(NormTag p, NormTag q, std::size_t m) {
    require(m >= 1, ErrorKind::invalid_input, "identity dimension must be positive");
    return Problem(IdentityInstance{p, q, m});
  }

  static Problem diagonal(std::vector<double> sigma, double tail_bound, NormTag p) {
    require(!sigma.empty(), ErrorKind::invalid_input, "sigma must be nonempty");
    require(std::isfinite(tail_bound) && tail_bound >= 0.0, ErrorKind::invalid_input,
            "tail bound must be finite and nonnegative");
    for (std::size_t i = 0; i < sigma.size(); ++i) {
      require(std::isfinite(sigma[i]) && sigma[i] >= 0.0, ErrorKind::invalid_input,
              "sigma entries must be finite and nonnegative");
      if (i > 0)
        require(sigma[i] <= sigma[i - 1], ErrorKind::invalid_input, "sigma must be nonincreasing");
    }
    require(tail_bound <= sigma.back(), ErrorKind::invalid_input, "tail bound exceeds last sigma");
    return Problem(DiagonalInstance{std::move(sigma), tail_bound, p});
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_identity() const noexcept { return std::holds_alternative<IdentityInstance>(kind_); }
  bool is_diagonal() const noexcept { return std::holds_alternative<DiagonalInstance>(kind_); }
  const IdentityInstance& as_identity() const { return std::get<IdentityInstance>(kind_); }
  const DiagonalInstance& as_diagonal() const { return std::get<DiagonalInstance>(kind_); }

  double domain_radius() const noexcept { return 1.0; }

  /// Scaling factors of the simulated coordinates. For a diagonal instance with
  /// a positive tail bound one extra coordinate carries sigma_{M+1}: every
  /// worst case over the tail block is attained on that single coordinate.
  std::vector<double> effective_sigma() const {
    if (is_identity()) return std::vector<double>(as_identity().m, 1.0);
    const auto& d = as_diagonal();
    std::vector<double> s = d.sigma;
    if (d.tail_bound > 0.0) s.push_back(d.tail_bound);
    return s;
  }

  std::size_t dim() const {
    if (is_identity()) return as_identity().m;
    const auto& d = as_diagonal();
    return d.sigma.size() + (d.tail_bound > 0.0 ? 1 : 0);
  }

  NormTag domain_norm() const {
    return is_identity() ? as_identity().p : as_diagonal().p;
  }
  NormTag target_norm() const {
    return is_identity() ? as_identity().q : as_diagonal().p;
  }

  /// Operator norm of S, which is also lip(S).
  double operator_norm() const {
    if (is_identity()) {
      const auto& id = as_identity();
      return embedding_norm(id.p, id.q, id.m);
    }
    return as_diagonal().sigma.front();
  }

  bool contains(const Point& x) const {
    if (x.dim() != dim()) return false;
    return norm(x, domain_norm()) <= domain_radius() * (1.0 + kDomainTolerance);
  }

  std::string describe() const {
    if (is_identity()) {
      const auto& id = as_identity();
      return "identity(p=" + id.p.to_string() + ",q=" + id.q.to_string() +
             ",m=" + std::to_string(id.m) + ")";
    }
    const auto& d = as_diagonal();
    return "diagonal(M=" + std::to_string(d.sigma.size()) + ",p=" + d.p.to_string() + ")";
  }

 private:
  explicit Problem(Kind kind) : kind_(std::move(kind)) {}
  Kind kind_;
};

/// S(x).
inline Point apply_operator(const Problem& prob, const Point& x) {
  require(x.dim() == prob.dim(), ErrorKind::invalid_input,
          "dimension mismatch: point has " + std::to_string(x.dim()) + ", problem expects " +
              std::to_string(prob.dim()));
  require(prob.contains(x), ErrorKind::domain_violation, "point lies outside the domain ball");
  if (prob.is_identity()) return x;
  const std::vector<double> s = prob.effective_sigma();
  std::vector<double> out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[i] * x[i];
  return Point(std::move(out));
}

/// Unit vector x* (in the domain norm) maximizing ||S x*||.
inline Point extremal_direction(const Problem& prob) {
  if (prob.is_identity()) {
    const auto& id = prob.as_identity();
    if (id.p <= id.q) return Point::basis(id.m, 0);
    const double c = std::pow(static_cast<double>(id.m), -id.p.inverse());
    return Point(std::vector<double>(id.m, c));
  }
  return Point::basis(prob.dim(), 0);
}

/// Candidate maximizers for worst-case searches: the origin, +-e_i, +-x*, and
/// for p = inf every vertex of the cube.
inline std::vector<Point> extreme_points(const Problem& prob) {
  const std::size_t m = prob.dim();
  std::vector<Point> out{Point::zeros(m)};
  for (std::size_t i = 0; i < m; ++i) {
    out.push_back(Point::basis(m, i, 1.0));
    out.push_back(Point::basis(m, i, -1.0));
  }
  const Point x = extremal_direction(prob);
  out.push_back(x);
  out.push_back(-1.0 * x);
  if (prob.domain_norm().is_infinite() && m <= 16) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
      std::vector<double> v(m);
      for (std::size_t i = 0; i < m; ++i) v[i] = (mask >> i) & 1U ? 1.0 : -1.0;
      out.emplace_back(std::move(v));
    }
  }
  return out;
}

/// omega_S(gamma) = sup{ ||S f - S g|| : ||f - g|| <= gamma } over the unit ball.
///
/// For every supported instance S is linear and the supremum is attained by
/// the symmetric pair +-(t/2) x* with t = min(gamma, 2), which gives
/// ||S|| * min(gamma, 2). The upper bound follows from ||S h|| <= ||S|| ||h||
/// and ||h|| <= 2 on the unit ball.
inline double modulus(const Problem& prob, double gamma) {
  require(gamma >= 0.0, ErrorKind::invalid_input, "modulus argument must be nonnegative");
  return prob.operator_norm() * std::min(gamma, 2.0);
}

/// gamma * sup{ ||S f - S g|| / ||f - g|| : ||f - g|| <= gamma }; for linear S
/// the ratio supremum is ||S|| at every scale.
inline double modified_modulus(const Problem& prob, double gamma) {
  require(gamma >= 0.0, ErrorKind::invalid_input, "modulus argument must be nonnegative");
  return gamma * prob.operator_norm();
}

}  // namespace nibc
