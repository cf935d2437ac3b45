// Quantile curves of a noisy Doppler signal with locally squeezed penalties.

#include <cmath>
#include <cstdio>
#include <vector>

#include "tautline/tautline.hpp"

using namespace tautline;

int main() {
  const std::size_t n = 2048;
  const auto f = dj_signal(Signal::doppler, n);
  const auto y = gen_noise(Testbed::gaussian, f, 7);

  // standard normal quantiles for the true curves f + 0.4 z_beta
  const struct {
    double beta;
    double z;
  } levels[] = {{0.1, -1.2815515655446004}, {0.5, 0.0}, {0.9, 1.2815515655446004}};

  std::printf("%6s %9s %8s %8s %10s %12s\n", "beta", "segments", "extrema", "iters", "below", "mean|err|");
  for (const auto& lv : levels) {
    const auto res = local_squeeze(y, ModelSpec{ModelKind::quantile, lv.beta});
    const auto& q = res.fit.values;
    std::size_t below = 0;
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      below += y[i] <= q[i];
      err += std::abs(q[i] - (f[i] + noise_scale * lv.z));
    }
    std::printf("%6.2f %9zu %8zu %8zu %10.3f %12.4f\n", lv.beta, res.fit.segments.size(),
                count_extrema(q, 1e-9, ExtremaConvention::interior), res.trace.iterations(),
                static_cast<double>(below) / static_cast<double>(n), err / static_cast<double>(n));
  }
  return 0;
}
