#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/random.hpp"

namespace rwdre {

using Site = std::int64_t;
using Time = double;

// Independent flips: 0 -> 1 at rate gamma, 1 -> 0 at rate delta.
class SpinFlipParams {
 public:
  SpinFlipParams(double gamma, double delta) : gamma_(gamma), delta_(delta) {
    if (!(gamma > 0.0) || !(delta > 0.0) || !std::isfinite(gamma) || !std::isfinite(delta))
      throw DomainError("SpinFlipParams: gamma and delta must be positive and finite");
  }

  double gamma() const noexcept { return gamma_; }
  double delta() const noexcept { return delta_; }
  double rho() const noexcept { return gamma_ / (gamma_ + delta_); }
  // Relaxation rate V of a single site.
  double total_rate() const noexcept { return gamma_ + delta_; }

 private:
  double gamma_;
  double delta_;
};

// P(xi_t = to | xi_0 = from) for one independently flipping site.
inline double transition_prob(const SpinFlipParams& p, int from, int to, Time t) {
  if (t < 0.0) throw DomainError("transition_prob: t must be non-negative");
  const double decay = std::exp(-p.total_rate() * t);
  const double one = (from == 1 ? decay : 0.0) + p.rho() * (1.0 - decay);
  return to == 1 ? one : 1.0 - one;
}

inline double transition_prob_one(const SpinFlipParams& p, Time t) {
  return transition_prob(p, 1, 1, t);
}

struct SiteInterval {
  Site lo = 0;
  Site hi = 0;  // inclusive
  std::size_t size() const noexcept { return hi >= lo ? static_cast<std::size_t>(hi - lo + 1) : 0; }
};

// i.i.d. Bernoulli(rho) over the interval; site x always uses the stream
// derived from (seed, x), so overlapping extents agree on shared sites.
inline std::vector<std::uint8_t> sample_equilibrium(const SpinFlipParams& p, SiteInterval extent,
                                                    std::uint64_t seed) {
  if (extent.size() == 0) throw DomainError("sample_equilibrium: empty extent");
  const Stream root = Stream::from_seed(seed).split(tags::initial);
  std::vector<std::uint8_t> out(extent.size());
  for (Site x = extent.lo; x <= extent.hi; ++x) {
    Stream s = root.split(static_cast<std::uint64_t>(x));
    out[static_cast<std::size_t>(x - extent.lo)] = s.bernoulli(p.rho()) ? 1 : 0;
  }
  return out;
}

inline constexpr int kMaxEnumerableRange = 10;

// Translation-invariant single-site flip rates c(x, eta) with finite range R,
// stored as a table over the 2^(2R+1) local windows. Bit j of a window index
// holds eta(x + j - R); the own site is bit R.
class RateFunction {
 public:
  static RateFunction independent(const SpinFlipParams& p) {
    RateFunction f(0, {p.gamma(), p.delta()}, "independent");
    f.independent_ = p;
    return f;
  }

  static RateFunction constant(double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("RateFunction::constant: negative rate");
    return RateFunction(0, {lambda, lambda}, "constant");
  }

  // Stochastic Ising rates c = exp(-J s(x) (s(x-1) + s(x+1))), s = 2 eta - 1.
  static RateFunction glauber(double coupling) {
    RateFunction f = from_function(1, [coupling](std::span<const std::uint8_t> w) {
      const auto spin = [](std::uint8_t v) { return 2.0 * v - 1.0; };
      return std::exp(-coupling * spin(w[1]) * (spin(w[0]) + spin(w[2])));
    });
    f.kind_ = "glauber";
    return f;
  }

  static RateFunction from_table(int range, std::vector<double> table) {
    return RateFunction(range, std::move(table), "table");
  }

  // f receives the window eta(x-R), ..., eta(x+R).
  template <class F>
  static RateFunction from_function(int range, F&& f) {
    check_range(range);
    const int width = 2 * range + 1;
    std::vector<double> table(std::size_t{1} << width);
    std::vector<std::uint8_t> window(static_cast<std::size_t>(width));
    for (std::uint32_t bits = 0; bits < table.size(); ++bits) {
      for (int j = 0; j < width; ++j) window[static_cast<std::size_t>(j)] = (bits >> j) & 1u;
      table[bits] = f(std::span<const std::uint8_t>(window));
    }
    return RateFunction(range, std::move(table), "function");
  }

  int range() const noexcept { return range_; }
  int width() const noexcept { return 2 * range_ + 1; }
  std::uint32_t own_bit() const noexcept { return 1u << range_; }
  std::size_t window_count() const noexcept { return table_.size(); }
  const std::string& kind() const noexcept { return kind_; }
  const std::vector<double>& table() const noexcept { return table_; }
  bool translation_invariant() const noexcept { return true; }

  double rate(std::uint32_t window) const noexcept { return table_[window]; }

  // Rate at site x of a configuration accessed through state(site) -> 0/1.
  template <class StateAt>
  double rate_at(Site x, StateAt&& state) const {
    std::uint32_t bits = 0;
    for (int j = 0; j < width(); ++j)
      if (state(x + j - range_)) bits |= 1u << j;
    return table_[bits];
  }

  double max_rate() const noexcept {
    double m = 0.0;
    for (double r : table_) m = std::max(m, r);
    return m;
  }

  const std::optional<SpinFlipParams>& independent_params() const noexcept { return independent_; }

  // c(0, eta) == c(0, reflected eta) on every window.
  bool reflection_symmetric() const {
    for (std::uint32_t bits = 0; bits < table_.size(); ++bits)
      if (table_[bits] != table_[reflect(bits)]) return false;
    return true;
  }

  // Attractiveness: raising a neighbour never lowers the 0->1 rate and
  // never raises the 1->0 rate. Single-neighbour raises suffice by chaining.
  bool attractive() const {
    for (std::uint32_t bits = 0; bits < table_.size(); ++bits) {
      const bool own = bits & own_bit();
      for (int j = 0; j < width(); ++j) {
        const std::uint32_t b = 1u << j;
        if (b == own_bit() || (bits & b)) continue;
        const double lo = table_[bits], hi = table_[bits | b];
        if (!own && lo > hi) return false;
        if (own && lo < hi) return false;
      }
    }
    return true;
  }

  std::uint32_t reflect(std::uint32_t bits) const noexcept {
    std::uint32_t out = 0;
    for (int j = 0; j < width(); ++j)
      if (bits & (1u << j)) out |= 1u << (width() - 1 - j);
    return out;
  }

 private:
  RateFunction(int range, std::vector<double> table, std::string kind)
      : range_(range), table_(std::move(table)), kind_(std::move(kind)) {
    check_range(range);
    if (table_.size() != (std::size_t{1} << width()))
      throw DomainError("RateFunction: table size must be 2^(2*range+1)");
    for (double r : table_)
      if (!(r >= 0.0) || !std::isfinite(r))
        throw DomainError("RateFunction: rates must be finite and non-negative");
  }

  static void check_range(int range) {
    if (range < 0 || range > 20) throw DomainError("RateFunction: range must be in [0, 20]");
  }

  int range_ = 0;
  std::vector<double> table_;
  std::string kind_;
  std::optional<SpinFlipParams> independent_;
};

struct MixingConstants {
  double M = 0.0;
  double eps = 0.0;
  double c() const noexcept { return eps - M; }
};

// M = sum_{x != 0} sup |c(0,eta) - c(0,eta^x)|, eps = inf |c(0,eta) + c(0,eta^0)|,
// by enumeration over all local windows.
inline MixingConstants mixing_constants(const RateFunction& rates,
                                        int max_range = kMaxEnumerableRange) {
  if (rates.range() > max_range)
    throw DomainError("mixing_constants: range " + std::to_string(rates.range()) +
                      " exceeds enumeration cap " + std::to_string(max_range));
  const auto& c = rates.table();
  MixingConstants out;
  for (int off = -rates.range(); off <= rates.range(); ++off) {
    if (off == 0) continue;
    const std::uint32_t flip = 1u << (off + rates.range());
    double sup = 0.0;
    for (std::uint32_t w = 0; w < c.size(); ++w) sup = std::max(sup, std::abs(c[w] - c[w ^ flip]));
    out.M += sup;
  }
  out.eps = std::numeric_limits<double>::infinity();
  for (std::uint32_t w = 0; w < c.size(); ++w)
    out.eps = std::min(out.eps, std::abs(c[w] + c[w ^ rates.own_bit()]));
  return out;
}

// A spin-flip environment: rates plus how to put it into equilibrium.
struct SpinFlipSystem {
  RateFunction rates;
  std::size_t torus_size = 1024;
  std::optional<double> burn_in;  // default 100 / (eps - M), or 100 if eps <= M
  double initial_density = 0.5;   // product-measure start before burn-in

  static SpinFlipSystem independent(const SpinFlipParams& p) {
    return SpinFlipSystem{RateFunction::independent(p), 1024, std::nullopt, 0.5};
  }
  static SpinFlipSystem glauber(double coupling, std::size_t torus_size = 1024) {
    return SpinFlipSystem{RateFunction::glauber(coupling), torus_size, std::nullopt, 0.5};
  }

  bool is_independent() const noexcept { return rates.independent_params().has_value(); }

  double burn_in_time() const {
    if (burn_in) return *burn_in;
    const double c = mixing_constants(rates).c();
    return c > 0.0 ? 100.0 / c : 100.0;
  }
};

}  // namespace rwdre
