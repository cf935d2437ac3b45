#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tautline/model.hpp"
#include "tautline/multiscale.hpp"
#include "tautline/signals.hpp"
#include "tautline/verify.hpp"

namespace tautline {

/// Extremum counts are reported without the runs touching either end, which
/// reproduces the stated true counts of the test signals.
inline constexpr ExtremaConvention table_convention = ExtremaConvention::interior;

struct SimulationSpec {
  std::vector<Signal> signals{Signal::blocks, Signal::bumps, Signal::heavisine};
  Testbed testbed = Testbed::gaussian;
  std::vector<ModelSpec> methods{ModelSpec{}};
  std::vector<std::size_t> sizes{2048};
  std::size_t replicates = 20;
  std::uint64_t seed = 1;
  SqueezeOptions squeeze{};
  // 0 = TAUTLINE_THREADS or the hardware concurrency
  std::size_t threads = 0;
};

struct SimulationCell {
  Signal signal = Signal::blocks;
  std::size_t n = 0;
  ModelSpec method;
  // nullopt for signals with infinitely many extrema
  std::optional<std::size_t> true_count;
  std::vector<std::size_t> counts;
  std::size_t failures = 0;
  std::string first_error;

  [[nodiscard]] double median() const {
    if (counts.empty()) return std::numeric_limits<double>::quiet_NaN();
    auto c = counts;
    std::sort(c.begin(), c.end());
    const std::size_t h = c.size() / 2;
    return c.size() % 2 == 1 ? static_cast<double>(c[h]) : 0.5 * static_cast<double>(c[h - 1] + c[h]);
  }

  // Mean absolute deviation from the true count.
  [[nodiscard]] double mad() const {
    if (!true_count || counts.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (auto c : counts) s += std::abs(static_cast<double>(c) - static_cast<double>(*true_count));
    return s / static_cast<double>(counts.size());
  }
};

inline std::string method_label(const ModelSpec& m) {
  if (m.kind == ModelKind::quantile) {
    std::string b = std::to_string(m.beta);
    b.erase(b.find_last_not_of('0') + 1);
    if (!b.empty() && b.back() == '.') b.pop_back();
    return "quantile:" + b;
  }
  if (m.kind == ModelKind::huber) return "huber:" + std::to_string(m.delta);
  return to_string(m.kind);
}

/// "mean", "poisson", "bernoulli", "quantile:<beta>" or "huber:<delta>".
inline ModelSpec parse_method_label(const std::string& s) {
  const auto colon = s.find(':');
  ModelSpec m;
  m.kind = parse_model_kind(s.substr(0, colon));
  if (colon == std::string::npos) return m;
  char* end = nullptr;
  const std::string arg = s.substr(colon + 1);
  const double v = std::strtod(arg.c_str(), &end);
  if (arg.empty() || *end != '\0') throw InvalidParameter("bad method argument in '" + s + "'");
  if (m.kind == ModelKind::quantile) {
    if (!(v > 0.0 && v < 1.0)) throw InvalidParameter("quantile level must lie in (0, 1): '" + s + "'");
    m.beta = v;
  } else if (m.kind == ModelKind::huber) {
    if (!(v > 0.0)) throw InvalidParameter("huber delta must be > 0: '" + s + "'");
    m.delta = v;
  } else {
    throw InvalidParameter("method '" + s.substr(0, colon) + "' takes no argument");
  }
  return m;
}

inline std::size_t thread_budget(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TAUTLINE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs every (signal, n, replicate) concurrently. Replicate r of a
/// (signal, n) pair draws its noise from Rng::substream(seed, r), so all
/// methods see the same samples and results do not depend on scheduling.
inline std::vector<SimulationCell> run_simulation(const SimulationSpec& spec) {
  if (spec.replicates == 0) throw InvalidParameter("simulate: at least one replicate required");
  struct Task {
    std::size_t signal;
    std::size_t size;
    std::size_t rep;
  };
  std::vector<Task> tasks;
  for (std::size_t s = 0; s < spec.signals.size(); ++s) {
    for (std::size_t z = 0; z < spec.sizes.size(); ++z) {
      if (spec.sizes[z] < 2) throw InvalidParameter("simulate: n must be >= 2");
      for (std::size_t r = 0; r < spec.replicates; ++r) tasks.push_back({s, z, r});
    }
  }
  const std::size_t methods = spec.methods.size();
  // count + 1, 0 meaning the fit failed
  std::vector<std::size_t> out(tasks.size() * methods, 0);
  std::vector<std::string> errors(tasks.size() * methods);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      const auto f = dj_signal(spec.signals[task.signal], spec.sizes[task.size]);
      Rng rng = Rng::substream(spec.seed, task.rep);
      const auto y = gen_noise(spec.testbed, f, rng);
      for (std::size_t m = 0; m < methods; ++m) {
        try {
          SqueezeOptions opt = spec.squeeze;
          opt.keep_lambdas = false;
          const auto res = local_squeeze(y, spec.methods[m], opt);
          out[t * methods + m] = count_extrema(res.fit.values, 1e-9, table_convention) + 1;
        } catch (const std::exception& e) {
          errors[t * methods + m] = e.what();
        }
      }
    }
  };
  const std::size_t threads = std::min(thread_budget(spec.threads), tasks.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<SimulationCell> cells;
  for (std::size_t s = 0; s < spec.signals.size(); ++s) {
    for (std::size_t z = 0; z < spec.sizes.size(); ++z) {
      for (std::size_t m = 0; m < methods; ++m) {
        SimulationCell c;
        c.signal = spec.signals[s];
        c.n = spec.sizes[z];
        c.method = spec.methods[m];
        if (c.signal != Signal::doppler) c.true_count = count_extrema(dj_signal(c.signal, c.n), 1e-9, table_convention);
        for (std::size_t t = 0; t < tasks.size(); ++t) {
          if (tasks[t].signal != s || tasks[t].size != z) continue;
          const std::size_t v = out[t * methods + m];
          if (v > 0) {
            c.counts.push_back(v - 1);
          } else {
            if (c.failures == 0) c.first_error = errors[t * methods + m];
            ++c.failures;
          }
        }
        cells.push_back(std::move(c));
      }
    }
  }
  return cells;
}

}  // namespace tautline
