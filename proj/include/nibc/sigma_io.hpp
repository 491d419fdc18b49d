#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "nibc/error.hpp"

namespace nibc {

struct SigmaSpec {
  std::vector<double> sigma;
  double tail_bound = 0.0;
};

inline double parse_decimal(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::invalid_input, "cannot parse " + what + " '" + text + "'");
  }
  require(used == text.size() && std::isfinite(v), ErrorKind::invalid_input, "cannot parse " + what + " '" + text + "'");
  return v;
}

/// sigma_j = j^{-s}, j = 1..len, tail bound (len+1)^{-s}.
inline SigmaSpec power_sigma(double s, std::size_t len) {
  require(s > 0.0, ErrorKind::invalid_input, "power decay exponent must be positive");
  require(len >= 1, ErrorKind::invalid_input, "sigma length must be positive");
  SigmaSpec out;
  for (std::size_t j = 1; j <= len; ++j) out.sigma.push_back(std::pow(static_cast<double>(j), -s));
  out.tail_bound = std::pow(static_cast<double>(len + 1), -s);
  return out;
}

/// "power:s" or "power:s:M", otherwise a file with one value per line
/// (blank lines and lines starting with '#' skipped; a line "tail x" sets the
/// tail bound, default 0).
inline SigmaSpec load_sigma(const std::string& source, std::size_t default_len = 32) {
  if (source.rfind("power:", 0) == 0) {
    const std::string rest = source.substr(6);
    const auto colon = rest.find(':');
    const double s = parse_decimal(rest.substr(0, colon), "power exponent");
    std::size_t len = default_len;
    if (colon != std::string::npos) {
      const double m = parse_decimal(rest.substr(colon + 1), "sigma length");
      require(m >= 1.0 && m == std::floor(m), ErrorKind::invalid_input, "sigma length must be a positive integer");
      len = static_cast<std::size_t>(m);
    }
    return power_sigma(s, len);
  }
  std::ifstream in(source);
  require(static_cast<bool>(in), ErrorKind::io_error, "cannot read sigma file '" + source + "'");
  SigmaSpec out;
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.rfind("tail", 0) == 0) {
      out.tail_bound = parse_decimal(line.substr(line.find_first_not_of(" \t", 4)), "tail bound");
      continue;
    }
    out.sigma.push_back(parse_decimal(line, "sigma value"));
  }
  require(!out.sigma.empty(), ErrorKind::invalid_input, "sigma file '" + source + "' has no values");
  return out;
}

}  // namespace nibc
