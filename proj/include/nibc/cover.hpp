#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nibc/spaces.hpp"

namespace nibc {

/// A finite family of closed balls of common radius in the target space.
struct CoverSpec {
  std::vector<Point> centers;
  double radius = 0.0;
  std::size_t budget_bits = 0;  // cardinality <= 2^budget_bits
  NormTag q = NormTag::infinity();
  std::string target;           // which set the cover claims to cover
  bool sample_certified = false;
  double resolution = 0.0;      // sample resolution behind a certified radius

  std::size_t size() const noexcept { return centers.size(); }
};

/// log2 of an exact power of two, or -1.
inline int exact_log2(std::size_t n) {
  if (n == 0 || (n & (n - 1)) != 0) return -1;
  int k = 0;
  while ((std::size_t{1} << k) < n) ++k;
  return k;
}

}  // namespace nibc
