#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/env/spin_flip.hpp"

namespace rwdre::mixing {

// Band of gamma(0, v) = sup |c(0, eta) - c(0, eta^v)| for |v| <= range;
// gamma(u, v) = gamma(0, v - u) by translation invariance.
struct GammaMatrix {
  int range = 0;
  std::vector<double> band;  // band[v + range]
  double M = 0.0;            // sum over v != 0

  double at(Site u, Site v) const {
    const Site d = v - u;
    if (d < -range || d > range) return 0.0;
    return band[static_cast<std::size_t>(d + range)];
  }
};

inline GammaMatrix gamma_matrix(const RateFunction& rates, int max_range = kMaxEnumerableRange) {
  if (rates.range() > max_range)
    throw DomainError("gamma_matrix: range " + std::to_string(rates.range()) +
                      " exceeds enumeration cap " + std::to_string(max_range));
  const auto& c = rates.table();
  GammaMatrix g;
  g.range = rates.range();
  g.band.assign(static_cast<std::size_t>(2 * g.range + 1), 0.0);
  for (int off = -g.range; off <= g.range; ++off) {
    const std::uint32_t flip = 1u << (off + g.range);
    double sup = 0.0;
    for (std::uint32_t w = 0; w < c.size(); ++w) sup = std::max(sup, std::abs(c[w] - c[w ^ flip]));
    g.band[static_cast<std::size_t>(off + g.range)] = sup;
  }
  // Same summation order as mixing_constants, so M agrees bit for bit.
  for (int off = -g.range; off <= g.range; ++off)
    if (off != 0) g.M += g.band[static_cast<std::size_t>(off + g.range)];
  return g;
}

}  // namespace rwdre::mixing
