#pragma once

#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include "rwdre/core/error.hpp"

namespace rwdre::expansion {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  std::size_t evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[static_cast<std::size_t>(j)];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[static_cast<std::size_t>(j)] * s;
    if (j % 2 == 1) gauss += kWg[static_cast<std::size_t>(j / 2)] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

// Globally adaptive Gauss-Kronrod on [a, b]: bisect the worst segment until
// the summed error estimate is below abs_tol.
template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol, std::size_t max_segments = 4000) {
  if (!(abs_tol > 0.0)) throw DomainError("integrate: tolerance must be positive");
  std::priority_queue<detail::Segment> heap;
  heap.push(detail::gk15(f, a, b));
  double value = heap.top().value, error = heap.top().error;
  std::size_t evals = 15;
  while (error > abs_tol) {
    if (heap.size() >= max_segments)
      throw NonConvergence("integrate: refinement budget exhausted (error " + std::to_string(error) +
                           " > " + std::to_string(abs_tol) + ")");
    const detail::Segment worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const detail::Segment l = detail::gk15(f, worst.a, mid), r = detail::gk15(f, mid, worst.b);
    evals += 30;
    value += l.value + r.value - worst.value;
    error += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
  }
  // Re-sum to shed the drift of the incremental updates.
  value = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  return {value, error, evals};
}

}  // namespace rwdre::expansion
