#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "rwdre/core/error.hpp"
#include "rwdre/expansion/bessel.hpp"
#include "rwdre/expansion/quadrature.hpp"

namespace rwdre::expansion {

// U: walk rate, V: environment relaxation rate.
class GreenParams {
 public:
  GreenParams(double U, double V) : U_(U), V_(V) {
    if (!(U > 0.0) || !std::isfinite(U)) throw DomainError("GreenParams: U must be positive");
    if (!(V > 0.0) || !std::isfinite(V)) throw DomainError("GreenParams: V must be positive");
  }

  double U() const { return U_; }
  double V() const { return V_; }

 private:
  double U_, V_;
};

// Per-unit-distance decay of G_V(y).
inline double green_decay(const GreenParams& gp) {
  const double s = gp.U() + gp.V();
  return (s - std::sqrt(s * s - gp.U() * gp.U())) / gp.U();
}

inline double green_closed(const GreenParams& gp, long long y) {
  const double s = gp.U() + gp.V();
  const double g0 = 1.0 / std::sqrt(s * s - gp.U() * gp.U());
  const long long ay = std::llabs(y);
  if (ay == 0) return g0;
  if (ay == 1) return (s / gp.U()) * g0 - 1.0 / gp.U();
  return g0 * std::pow(green_decay(gp), static_cast<double>(ay));
}

// int_0^inf e^{-Vt} p_{Ut}(0, y) dt by adaptive quadrature; the tail beyond T
// is bounded by e^{-VT}/V and T is chosen so that it stays under tol/100.
inline QuadResult green_numeric(const GreenParams& gp, long long y, double tol = 1e-10) {
  if (!(tol > 0.0)) throw DomainError("green_numeric: tol must be positive");
  const double V = gp.V(), U = gp.U();
  const double horizon = std::max(1.0, std::log(1.0 / (V * tol * 1e-2)) / V);
  auto f = [&](double t) { return std::exp(-V * t) * srw_kernel(U * t, y); };
  // Split at the kernel's peak region so the first pieces resolve the rise from 0.
  const double knee = std::min(horizon, std::max(1.0, static_cast<double>(std::llabs(y)) / U) * 4.0);
  QuadResult head = integrate(f, 0.0, knee, 0.5 * tol);
  if (knee >= horizon) return head;
  QuadResult tail = integrate(f, knee, horizon, 0.5 * tol);
  return {head.value + tail.value, head.abs_error + tail.abs_error + std::exp(-V * horizon) / V,
          head.evaluations + tail.evaluations};
}

}  // namespace rwdre::expansion
