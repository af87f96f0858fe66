#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "rwdre/core/error.hpp"

namespace rwdre::mixing {

// Cone with tip (0, t), axis along time and half-opening angle pi/2 - theta
// measured from the axis: the set of (x, s) with (s - t) >= |(x, s - t)| cos(theta).
struct ConeSpec {
  double theta = std::numbers::pi / 4.0;
  double t = 0.0;

  void validate() const {
    if (!(theta > 0.0 && theta < std::numbers::pi / 2.0))
      throw DomainError("ConeSpec: theta must lie in (0, pi/2)");
    if (!(t >= 0.0)) throw DomainError("ConeSpec: tip height must be non-negative");
  }
};

inline bool cone_contains(const ConeSpec& cone, std::int64_t x, double s) {
  if (!(s >= 0.0)) throw DomainError("cone_contains: s must be non-negative");
  const double h = s - cone.t;
  const double dx = static_cast<double>(x);
  return h >= std::sqrt(dx * dx + h * h) * std::cos(cone.theta);
}

// Lowest height above the tip at which column x enters the cone.
inline double cone_entry_height(const ConeSpec& cone, std::int64_t x) {
  const double h = std::abs(static_cast<double>(x)) / std::tan(cone.theta);
  double s = cone.t + h;
  for (int i = 0; i < 64 && !cone_contains(cone, x, s); ++i) s = std::nextafter(s, INFINITY) + 1e-12 * h;
  return s;
}

}  // namespace rwdre::mixing
