// Trace of local squeezing on the Blocks signal.

#include <algorithm>
#include <cstdio>

#include "tautline/tautline.hpp"

using namespace tautline;

int main() {
  const std::size_t n = 2048;
  const auto f = dj_signal(Signal::blocks, n);
  const auto y = gen_noise(Testbed::gaussian, f, 3);

  SqueezeOptions opt;
  opt.intervals = IntervalKind::dyadic;
  const auto res = local_squeeze(y, ModelSpec{}, opt);
  const auto& t = res.trace;

  std::printf("sigma-hat %.4f, bound %s\n", res.bounds.sigma, to_string(res.bounds.kind).c_str());
  std::printf("%5s %11s %9s %8s %9s\n", "iter", "violations", "squeezed", "extrema", "segments");
  const std::size_t step = std::max<std::size_t>(1, t.iterations() / 15);
  for (std::size_t i = 0; i < t.iterations(); ++i) {
    if (i % step != 0 && i + 1 != t.iterations()) continue;
    std::printf("%5zu %11zu %9zu %8zu %9zu\n", i, t.violations[i], t.squeezed_gaps[i], t.extrema[i], t.segments[i]);
  }

  const auto gaps = res.lambda.gaps();
  const auto [lo, hi] = std::minmax_element(gaps.begin(), gaps.end());
  std::printf("final penalties in [%.3g, %.3g]\n", *lo, *hi);
  std::printf("extrema: fit %zu, truth %zu\n", count_extrema(res.fit.values, 1e-9, ExtremaConvention::interior),
              count_extrema(f, 1e-9, ExtremaConvention::interior));
  return 0;
}
