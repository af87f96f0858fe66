#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rwdre/core/parallel.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/lazy_environment.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/env/torus.hpp"

namespace rwdre {

// K(i, t) = E[xi_0(0) xi_t(i)] for independent flips started in equilibrium.
inline double independent_correlation(const SpinFlipParams& p, Site i, Time t) {
  const double rho = p.rho();
  return rho * rho + (i == 0 ? rho * (1.0 - rho) * std::exp(-p.total_rate() * t) : 0.0);
}

struct CorrelationEstimate {
  double value = 0.0;
  double se = 0.0;
  std::size_t replicas = 0;
};

// Monte Carlo K(i, t). Independent flips use the lazy environment (one
// origin per replica); interacting systems use an equilibrated torus and
// average over all origins of the torus, which is unbiased by translation
// invariance.
inline CorrelationEstimate correlation_K(const SpinFlipSystem& system, Site i, Time t,
                                         std::size_t replicas, std::uint64_t seed,
                                         unsigned threads = 1) {
  if (!(t >= 0.0)) throw DomainError("correlation_K: t must be non-negative");
  if (replicas < 2) throw DomainError("correlation_K: need at least 2 replicas");
  const Stream root = Stream::from_seed(seed).split(tags::environment);
  auto samples = map_replicas(replicas, threads, [&](std::size_t r) -> double {
    const Stream rs = root.split(r);
    if (const auto& p = system.rates.independent_params()) {
      LazyEnvironment env(*p, rs);
      const int a = env.state(0, 0.0);
      return static_cast<double>(a * env.state(i, t));
    }
    TorusEnvironment torus = equilibrated_torus(system, rs);
    const auto start = torus.configuration();
    Gillespie engine(torus, rs.split(tags::environment));
    engine.advance_to(t);
    double acc = 0.0;
    for (std::size_t x = 0; x < start.size(); ++x)
      acc += start[x] * torus.state(static_cast<Site>(x) + i);
    return acc / static_cast<double>(start.size());
  });
  const auto ms = stats::mean_se(samples);
  return {ms.mean, ms.se, replicas};
}

}  // namespace rwdre
