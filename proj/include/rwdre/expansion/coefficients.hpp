#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/parallel.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/correlation.hpp"
#include "rwdre/env/lazy_environment.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/env/torus.hpp"
#include "rwdre/expansion/bessel.hpp"
#include "rwdre/expansion/green.hpp"
#include "rwdre/expansion/quadrature.hpp"

namespace rwdre::expansion {

inline double f_UV(const GreenParams& gp) {
  const double U = gp.U(), V = gp.V();
  return (2.0 * U + V) / std::sqrt(V * V + 2.0 * U * V) -
         (2.0 * U + 2.0 * V) / std::sqrt(V * V + U * V) + 1.0;
}

inline void check_density(double rho) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("density must lie in (0, 1)");
}

inline double c3_closed(const GreenParams& gp, double rho) {
  check_density(rho);
  const double U = gp.U();
  return 4.0 / (U * U) * rho * (1.0 - rho) * (2.0 * rho - 1.0) * f_UV(gp);
}

// Same coefficient assembled from Green's function values at rates V and 2V.
inline double c3_via_green(const GreenParams& gp, double rho) {
  check_density(rho);
  const double U = gp.U(), V = gp.V();
  const GreenParams g2(U, 2.0 * V);
  const double bracket = (2.0 * U + V) / U * green_closed(gp, 0) -
                         (3.0 * U + 2.0 * V) / U * green_closed(g2, 0) - green_closed(g2, 1);
  return 4.0 / U * rho * (2.0 * rho - 1.0) * (1.0 - rho) * bracket;
}

struct C2Result {
  double value = 0.0;
  double error = 0.0;  // quadrature error bound, or Monte Carlo SE
  double t_max = 0.0;
  std::size_t replicas = 0;  // 0 for deterministic K
};

using CorrelationFn = std::function<double(long long, double)>;

// t -> 2 sum_y [p_{Ut}(0, y-1) - p_{Ut}(0, y+1)] K(y, t).
inline double c2_integrand(const CorrelationFn& K, double U, double t) {
  const long long J = srw_truncation(U * t) + 1;
  std::vector<double> p(static_cast<std::size_t>(J + 2));
  for (long long j = 0; j <= J + 1; ++j) p[static_cast<std::size_t>(j)] = srw_kernel(U * t, j);
  auto pk = [&](long long y) { return p[static_cast<std::size_t>(std::llabs(y))]; };
  double sum = 0.0;
  for (long long y = -J; y <= J; ++y) {
    const double d = pk(y - 1) - pk(y + 1);
    if (d != 0.0) sum += d * K(y, t);
  }
  return 2.0 * sum;
}

// c2 = 2 int_0^inf [E_1 K(Y_t, t) - E_{-1} K(Y_t, t)] dt for a deterministic
// correlation function. The time axis is covered by doubling panels, each
// integrated adaptively; integration stops once a whole panel is below
// tol / 100 in magnitude.
inline C2Result c2_numeric(const CorrelationFn& K, double U, double tol = 1e-8,
                           double t_cap = 1e4) {
  if (!(U > 0.0)) throw DomainError("c2_numeric: U must be positive");
  if (!(tol > 0.0)) throw DomainError("c2_numeric: tol must be positive");
  auto g = [&](double t) { return c2_integrand(K, U, t); };
  C2Result out;
  double a = 0.0, b = 1.0 / U;
  const double small = tol * 1e-2;
  for (int panel = 0;; ++panel) {
    const QuadResult q = integrate(g, a, b, 0.25 * tol / static_cast<double>(1 << std::min(panel, 20)) + small * 1e-3);
    out.value += q.value;
    out.error += q.abs_error;
    const double edge = std::max(std::abs(g(b)), std::abs(g(0.5 * (a + b))));
    if (std::abs(q.value) < small && edge < small) break;
    if (b >= t_cap) throw NonConvergence("c2_numeric: integrand not negligible by t = " + std::to_string(t_cap));
    a = b;
    b *= 2.0;
  }
  out.t_max = b;
  return out;
}

inline CorrelationFn independent_K(const SpinFlipParams& p) {
  return [p](long long i, double t) { return independent_correlation(p, i, t); };
}

struct C2MonteCarloOptions {
  double t_max = 10.0;
  std::size_t nodes = 64;  // even, Simpson rule on [0, t_max]
  std::size_t replicas = 2000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

// c2 with K estimated by simulation. Each replica contributes the whole
// functional 2 sum_k w_k sum_{y>0} D_k(y) xi_0(0) (xi_{t_k}(y) - xi_{t_k}(-y)),
// with D_k(y) = p_{Ut_k}(0, y-1) - p_{Ut_k}(0, y+1) odd in y and Simpson
// weights w_k, so the reported SE already includes the propagation through
// the quadrature. Interacting systems average over all torus origins.
inline C2Result c2_monte_carlo(const SpinFlipSystem& system, double U, const C2MonteCarloOptions& o) {
  if (!(U > 0.0)) throw DomainError("c2_monte_carlo: U must be positive");
  if (o.nodes < 2 || o.nodes % 2) throw DomainError("c2_monte_carlo: nodes must be even and >= 2");
  if (o.replicas < 2) throw DomainError("c2_monte_carlo: need at least 2 replicas");
  if (!(o.t_max > 0.0)) throw DomainError("c2_monte_carlo: t_max must be positive");

  const double h = o.t_max / static_cast<double>(o.nodes);
  std::vector<double> times(o.nodes + 1), weights(o.nodes + 1);
  std::vector<std::vector<double>> D(o.nodes + 1);  // D[k][y], y = 0..J_k (odd in y)
  long long reach = 1;
  for (std::size_t k = 0; k <= o.nodes; ++k) {
    times[k] = h * static_cast<double>(k);
    weights[k] = h / 3.0 * (k == 0 || k == o.nodes ? 1.0 : (k % 2 ? 4.0 : 2.0));
    const double s = U * times[k];
    const long long J = srw_truncation(s) + 1;
    auto& d = D[k];
    for (long long y = 0; y <= J; ++y) {
      const double v = srw_kernel(s, y - 1) - srw_kernel(s, y + 1);
      if (y > 0 && std::abs(v) < 1e-17) break;
      d.push_back(v);
    }
    reach = std::max<long long>(reach, static_cast<long long>(d.size()) - 1);
  }

  const Stream root = Stream::from_seed(o.seed).split(tags::environment);
  std::vector<double> samples;
  if (const auto& p = system.rates.independent_params()) {
    samples = map_replicas(o.replicas, o.threads, [&](std::size_t r) -> double {
      LazyEnvironment env(*p, root.split(r));
      if (env.state(0, 0.0) == 0) return 0.0;
      double total = 0.0;
      for (std::size_t k = 0; k <= o.nodes; ++k) {
        double s = 0.0;
        const auto& d = D[k];
        for (std::size_t y = 1; y < d.size(); ++y) {
          const auto yy = static_cast<Site>(y);
          s += d[y] * (env.state(yy, times[k]) - env.state(-yy, times[k]));
        }
        total += weights[k] * s;
      }
      return 2.0 * total;
    });
  } else {
    if (static_cast<long long>(system.torus_size) < 2 * reach + 1)
      throw ConfigError("c2_monte_carlo: torus too small for the kernel support");
    samples = map_replicas(o.replicas, o.threads, [&](std::size_t r) -> double {
      const Stream rs = root.split(r);
      TorusEnvironment torus = equilibrated_torus(system, rs);
      const auto start = torus.configuration();
      Gillespie engine(torus, rs.split(tags::environment));
      const auto n = static_cast<Site>(start.size());
      double total = 0.0;
      for (std::size_t k = 0; k <= o.nodes; ++k) {
        engine.advance_to(times[k]);
        const auto& d = D[k];
        double s = 0.0;
        for (Site x = 0; x < n; ++x) {
          if (!start[static_cast<std::size_t>(x)]) continue;
          for (std::size_t y = 1; y < d.size(); ++y) {
            const auto yy = static_cast<Site>(y);
            s += d[y] * (torus.state(x + yy) - torus.state(x - yy));
          }
        }
        total += weights[k] * s / static_cast<double>(n);
      }
      return 2.0 * total;
    });
  }
  const auto ms = stats::mean_se(samples);
  return {ms.mean, ms.se, o.t_max, o.replicas};
}

}  // namespace rwdre::expansion
