// nibc: command-line front end for the noisy-information library.
//
// Exit codes: 0 success, 1 usage or input error, 2 verification failure.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nibc/nibc.hpp"

using namespace nibc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;

struct Options {
  std::string m = "1";
  std::string n = "1";
  std::string delta = "0.5";
  std::string p = "inf";
  std::string q = "inf";
  std::string sigma;
  std::string eps;
  std::string L;
  std::string kind;
  std::string policy = "none";
  std::string experiment = "sweep";
  std::uint64_t seed = 0;
  std::size_t budget = std::size_t{1} << 14;
  std::string out;
};

/// "3", "1..4" or "1,2,5".
std::vector<std::size_t> parse_counts(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  auto one = [&](const std::string& s) {
    const double v = parse_decimal(s, what);
    require(v >= 0.0 && v == std::floor(v), ErrorKind::invalid_input, what + " must be a nonnegative integer");
    return static_cast<std::size_t>(v);
  };
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const std::size_t a = one(text.substr(0, dots)), b = one(text.substr(dots + 2));
    for (std::size_t v = a; v <= b; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(one(item));
  return out;
}

std::vector<double> parse_reals(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_decimal(item, what));
  require(!out.empty(), ErrorKind::invalid_input, what + " is empty");
  return out;
}

std::size_t single_count(const std::string& text, const std::string& what) {
  const auto v = parse_counts(text, what);
  require(v.size() == 1, ErrorKind::invalid_input, what + " takes a single value here");
  return v[0];
}

double single_real(const std::string& text, const std::string& what) {
  const auto v = parse_reals(text, what);
  require(v.size() == 1, ErrorKind::invalid_input, what + " takes a single value here");
  return v[0];
}

/// Diagonal when --sigma is given, otherwise Identity(p, q, m).
Problem make_problem(const Options& o) {
  if (!o.sigma.empty()) {
    const SigmaSpec s = load_sigma(o.sigma);
    return Problem::diagonal(s.sigma, s.tail_bound, NormTag::parse(o.p));
  }
  return Problem::identity(NormTag::parse(o.p), NormTag::parse(o.q), single_count(o.m, "--m"));
}

void emit(const Options& o, const std::string& text) {
  if (o.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::io_error, "cannot open '" + o.out + "' for writing");
  f << text;
  f.flush();
  require(static_cast<bool>(f), ErrorKind::io_error, "write to '" + o.out + "' failed");
}

SearchOptions search_options(const Options& o) {
  SearchOptions so;
  so.budget = o.budget;
  so.seed = o.seed;
  return so;
}

std::string report_row(const ErrorReport& r) {
  return format_double(r.estimated_worst) + ',' + (r.exhaustive ? "true" : "false") + ',' +
         std::to_string(r.sessions);
}

int cmd_encode(const Options& o) {
  const std::size_t m = single_count(o.m, "--m"), n = single_count(o.n, "--n");
  const double delta = single_real(o.delta, "--delta");
  const Problem prob = Problem::identity(NormTag::infinity(), NormTag::infinity(), m);
  const int kp = k_prime_delta(delta);
  const CoverSpec cover = grid_cover_linf(m, n * static_cast<std::size_t>(std::max(kp, 0)));
  const Policy pol = build_encoder_policy(cover, n, delta);
  const ErrorReport r = estimate_worst_error(pol, prob, delta, search_options(o));
  emit(o, "m,n,delta,k,k_prime,cells,cover_radius,error_est,exhaustive,sessions\n" + std::to_string(m) + ',' +
              std::to_string(n) + ',' + format_double(delta) + ',' + std::to_string(k_delta(delta)) + ',' +
              std::to_string(kp) + ',' + std::to_string(cover.size()) + ',' + format_double(cover.radius) + ',' +
              report_row(r) + '\n');
  return r.estimated_worst <= cover.radius + 1e-9 ? kExitOk : kExitVerify;
}

int cmd_bisect(const Options& o) {
  const std::size_t m = single_count(o.m, "--m"), n = single_count(o.n, "--n");
  const double delta = single_real(o.delta, "--delta");
  const Problem prob = Problem::identity(NormTag::infinity(), NormTag::infinity(), m);
  const CoverSpec cover = grid_cover_linf(m, n);
  const BisectionParams bp = default_bisection_params(delta, n, cover.radius);
  const Policy pol = build_bisection_policy(cover, bp);
  const double bound = bisection_error_bound(cover, bp);
  const ErrorReport r = estimate_worst_error(pol, prob, delta, search_options(o));
  emit(o, "m,n,delta,delta_plus,eta,cover_radius,error_bound,error_est,exhaustive,sessions\n" + std::to_string(m) +
              ',' + std::to_string(n) + ',' + format_double(delta) + ',' + format_double(bp.delta_plus) + ',' +
              format_double(bp.eta) + ',' + format_double(cover.radius) + ',' + format_double(bound) + ',' +
              report_row(r) + '\n');
  return r.estimated_worst <= bound + 1e-9 ? kExitOk : kExitVerify;
}

int cmd_refine(const Options& o) {
  const std::size_t m = single_count(o.m, "--m");
  const double delta = single_real(o.delta, "--delta");
  int r = 0;
  if (!o.eps.empty()) {
    r = refinement_rounds(single_real(o.eps, "--eps"), delta);
  } else {
    const std::size_t n = single_count(o.n, "--n");
    require(n % m == 0, ErrorKind::invalid_input, "--n must be a multiple of --m");
    r = static_cast<int>(n / m);
  }
  const Problem prob = Problem::identity(NormTag::infinity(), NormTag::infinity(), m);
  const Policy pol = build_coord_refine_policy(m, r, delta);
  const double upper = std::pow(delta, r);
  const ErrorReport rep = estimate_worst_error(pol, prob, delta, search_options(o));
  emit(o, "m,r,n,delta,error_bound,error_est,exhaustive,sessions\n" + std::to_string(m) + ',' + std::to_string(r) +
              ',' + std::to_string(pol.budget()) + ',' + format_double(delta) + ',' + format_double(upper) + ',' +
              report_row(rep) + '\n');
  return rep.estimated_worst <= upper + 1e-9 ? kExitOk : kExitVerify;
}

int cmd_diag(const Options& o) {
  require(!o.sigma.empty(), ErrorKind::invalid_input, "diag needs --sigma");
  require(!o.eps.empty(), ErrorKind::invalid_input, "diag needs --eps");
  const SigmaSpec s = load_sigma(o.sigma);
  const DiagonalInstance d{s.sigma, s.tail_bound, NormTag::parse(o.p)};
  const AllocationPlan plan = diag_allocate(d, single_real(o.eps, "--eps"), single_real(o.delta, "--delta"));
  emit(o, plan.to_csv(d));
  return kExitOk;
}

int cmd_entropy(const Options& o) {
  const Problem prob = make_problem(o);
  std::string out = "n,lower,upper,formula,band_lo,band_hi\n";
  for (std::size_t n : parse_counts(o.n, "--n")) {
    const EntropyEstimate e = sandwich(prob, n);
    out += std::to_string(n) + ',' + format_double(e.lower) + ',' + format_double(e.upper) + ',' +
           format_double(e.formula) + ',' + format_double(e.formula * e.band_lo) + ',' +
           format_double(e.formula * e.band_hi) + '\n';
  }
  emit(o, out);
  return kExitOk;
}

/// Policy named by --policy for the floor subcommand.
Policy floor_policy(const Options& o, const Problem& prob, double delta) {
  const std::size_t n = single_count(o.n, "--n");
  if (o.policy == "refine") {
    const std::size_t m = prob.dim();
    require(prob.is_identity() && n % m == 0 && n > 0, ErrorKind::invalid_input,
            "refine policy needs an identity instance and --n a positive multiple of --m");
    return build_coord_refine_policy(m, static_cast<int>(n / m), delta);
  }
  if (o.policy == "encode") {
    const int kp = k_prime_delta(delta);
    return build_encoder_policy(grid_cover_linf(prob.dim(), n * static_cast<std::size_t>(std::max(kp, 0))), n, delta);
  }
  if (o.policy == "bisect") {
    const CoverSpec cover = grid_cover_linf(prob.dim(), n);
    return build_bisection_policy(cover, default_bisection_params(delta, n, cover.radius));
  }
  if (o.policy == "diag") return build_diag_truncation_policy(prob, n);
  throw Error(ErrorKind::invalid_input, "unknown policy '" + o.policy + "'");
}

int cmd_floor(const Options& o) {
  const Problem prob = make_problem(o);
  const double delta = single_real(o.delta, "--delta");
  const std::string kind = o.kind.empty() ? "linear" : o.kind;
  std::optional<Policy> pol;
  require(kind != "grid" || o.policy != "none", ErrorKind::invalid_input, "grid floor needs --policy");
  if (o.policy != "none") pol = floor_policy(o, prob, delta);
  LowerBoundCertificate cert;
  if (kind == "linear") {
    cert = linear_floor(prob, delta, single_count(o.n, "--n"));
  } else if (kind == "lipschitz") {
    double L = 0.0;
    if (!o.L.empty()) L = single_real(o.L, "--L");
    else {
      require(pol.has_value(), ErrorKind::invalid_input, "lipschitz floor needs --L or a policy");
      L = observed_lipschitz(*pol, prob);
    }
    cert = lipschitz_floor(prob, L, delta);
  } else if (kind == "grid") {
    cert = grid_adversary(*pol, prob, delta);
  } else {
    throw Error(ErrorKind::invalid_input, "unknown certificate kind '" + kind + "'");
  }
  bool ok = cert.verified;
  std::string reason;
  if (pol) {
    const PolicyCheck chk = verify_against(cert, *pol, prob);
    ok = ok && chk.ok;
    reason = chk.reason;
  }
  emit(o, std::string(kCertificateCsvHeader) + '\n' + cert.to_csv());
  if (!ok) {
    std::cerr << "verification failed" << (reason.empty() ? "" : ": " + reason) << '\n';
    return kExitVerify;
  }
  return kExitOk;
}

int cmd_sweep(const Options& o) {
  ExperimentConfig cfg;
  cfg.experiment = o.experiment;
  cfg.kind = o.kind.empty() ? "refine" : o.kind;
  cfg.m_values = parse_counts(o.m, "--m");
  cfg.n_values = parse_counts(o.n, "--n");
  cfg.deltas = parse_reals(o.delta, "--delta");
  cfg.p = NormTag::parse(o.p);
  cfg.q = NormTag::parse(o.q);
  if (!o.sigma.empty()) {
    const SigmaSpec s = load_sigma(o.sigma);
    cfg.sigma = s.sigma;
    cfg.tail_bound = s.tail_bound;
  }
  require(cfg.kind != "diag" || !cfg.sigma.empty(), ErrorKind::invalid_input, "diag sweep needs --sigma");
  cfg.seed = o.seed;
  cfg.budget = o.budget;
  cfg.out = o.out;
  const std::string csv = sweep(cfg);
  if (o.out.empty()) std::cout << csv;
  return kExitOk;
}

int cmd_compare(const Options& o) {
  const Problem prob = make_problem(o);
  const double eps = o.eps.empty() ? 0.1 : single_real(o.eps, "--eps");
  emit(o, compare_csv(compare_settings(prob, single_real(o.delta, "--delta"), eps)));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case error experiments for measurements under bounded noise"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "file of key=value lines; command-line flags take precedence");

  Options o;
  app.add_option("--m", o.m, "dimension, or a list for sweep (3, 1..4, 1,2)");
  app.add_option("--n", o.n, "measurement count, or a list for entropy/sweep");
  app.add_option("--delta", o.delta, "noise level in [0, 1), comma list for sweep");
  app.add_option("--p", o.p, "domain norm exponent (inf allowed)");
  app.add_option("--q", o.q, "target norm exponent (inf allowed)");
  app.add_option("--sigma", o.sigma, "singular values: file path or power:s[:M]");
  app.add_option("--eps", o.eps, "target error");
  app.add_option("--L", o.L, "Lipschitz constant for the lipschitz floor");
  app.add_option("--kind", o.kind, "floor: linear|lipschitz|grid; sweep: refine|diag|encode|bisect");
  app.add_option("--policy", o.policy, "floor: refine|encode|bisect|diag|none");
  app.add_option("--experiment", o.experiment, "experiment label for sweep rows");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--budget", o.budget, "search session budget")->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "write CSV here instead of stdout");

  struct Sub {
    const char* name;
    const char* help;
    int (*run)(const Options&);
  };
  const Sub subs[] = {
      {"encode", "grid-cover encoder: worst-case error vs cover radius", cmd_encode},
      {"bisect", "adaptive bisection over a grid cover", cmd_bisect},
      {"refine", "coordinate refinement on the unit cube", cmd_refine},
      {"diag", "allocation plan for a diagonal operator (i,sigma_i,n_i)", cmd_diag},
      {"entropy", "entropy number bounds (n,lower,upper,formula,band_lo,band_hi)", cmd_entropy},
      {"floor", "lower-bound certificates (kind,bound,verified,witness)", cmd_floor},
      {"sweep", "experiment sweep CSV", cmd_sweep},
      {"compare", "information-class comparison table", cmd_compare},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (const auto& s : subs)
      if (app.got_subcommand(s.name)) return s.run(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
