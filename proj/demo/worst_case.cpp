// Builds the coordinate refinement policy on the unit square, searches for
// its worst-case error under +-delta noise and compares it with the
// certified lower bounds.

#include <cmath>
#include <cstdio>

#include "nibc/nibc.hpp"

int main() {
  using namespace nibc;
  const double delta = 0.5;
  const auto box = Problem::identity(NormTag::infinity(), NormTag::infinity(), 2);

  for (int r = 1; r <= 3; ++r) {
    const Policy pol = build_coord_refine_policy(2, r, delta);
    const ErrorReport rep = estimate_worst_error(pol, box, delta);
    const auto floor = lipschitz_floor(box, observed_lipschitz(pol, box), delta);
    const auto grid = grid_adversary(pol, box, delta);
    std::printf("r=%d n=%zu worst=%s (exhaustive=%d) delta^r=%s lipschitz_floor=%s grid_adversary=%s\n", r,
                pol.budget(), format_double(rep.estimated_worst).c_str(), rep.exhaustive ? 1 : 0,
                format_double(std::pow(delta, r)).c_str(), format_double(floor.claimed_bound).c_str(),
                format_double(grid.claimed_bound).c_str());
  }

  // one session with a fixed noise pattern, printed as a transcript
  const Policy pol = build_coord_refine_policy(2, 2, delta);
  const auto s = run_session(pol, Point{0.3, -0.7}, box, NoiseAdversary(delta, noise::SignPattern{{1, -1, 1, -1}}));
  std::printf("%s\n", kTranscriptCsvHeader);
  std::printf("%s", transcript_csv("demo", s.transcript).c_str());
  std::printf("output=(%s, %s) error=%s\n", format_double(s.output[0]).c_str(), format_double(s.output[1]).c_str(),
              format_double(s.error).c_str());
  return 0;
}
