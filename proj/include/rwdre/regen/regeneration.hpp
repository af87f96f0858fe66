#pragma once

// Time lapses and regeneration times for the discrete-time walk.
//
// Indexing follows the 1-based convention of the construction: eps[i - 1]
// holds epsilon_i, and step n -> n+1 of Z uses epsilon_{n+1}. A regeneration
// time tau = n is decided from epsilon_{n-L}, ..., epsilon_{n-1} only.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/walker/discrete.hpp"

namespace rwdre::regen {

// The three values of a time-lapse variable: (0,0), l+ = (1,1), l- = (-1,1).
enum class Lambda : std::int8_t { stay = 0, up = 1, down = -1 };

using EpsSeq = std::vector<Lambda>;

// Symbol coding used in exports: +1, -1, 0.
constexpr int symbol(Lambda e) noexcept { return static_cast<int>(e); }

struct HPoint {
  Site x = 0;            // horizontal
  std::int64_t n = 0;    // vertical (time)
  friend bool operator==(const HPoint&, const HPoint&) = default;
};

using HPath = std::vector<HPoint>;

// Y_n = (X_n, n).
inline HPath embed_Y(const DiscretePath& path) {
  HPath out;
  out.reserve(path.positions.size());
  for (std::size_t n = 0; n < path.positions.size(); ++n)
    out.push_back({path.positions[n], static_cast<std::int64_t>(n)});
  return out;
}

// i.i.d. draws with w(l+) = w(l-) = r = q/2 and w((0,0)) = p.
inline EpsSeq sample_eps(std::size_t n, double p, Stream rng) {
  if (n < 1) throw DomainError("sample_eps: n must be at least 1");
  check_discrete_p(p);
  const double r = 0.5 * (1.0 - p);
  EpsSeq out(n);
  for (auto& e : out) {
    const double u = rng.uniform();
    e = u < r ? Lambda::up : (u < 2.0 * r ? Lambda::down : Lambda::stay);
  }
  return out;
}

// Probability that Z steps l+ given the next epsilon and the quenched
// probability y_up that Y would step l+.
inline double z_up_probability(Lambda eps_next, double y_up, double p) {
  if (eps_next == Lambda::up) return 1.0;
  if (eps_next == Lambda::down) return 0.0;
  const double r = 0.5 * (1.0 - p);
  const double up = (y_up - r) / p;
  const double down = ((1.0 - y_up) - r) / p;
  if (up < 0.0 || down < 0.0)
    throw DomainError("z_transition: negative transition mass (requires y_up in {p, q}, p > 1/2)");
  return up;
}

inline Lambda z_transition(Lambda eps_next, double y_up, double p, Stream& rng) {
  const double up = z_up_probability(eps_next, y_up, p);
  if (eps_next != Lambda::stay) return eps_next;
  return rng.uniform() < up ? Lambda::up : Lambda::down;
}

inline EpsSeq epsilon_pattern(int L) {
  if (L < 2 || L % 2 != 0) throw DomainError("epsilon_pattern: L must be even and at least 2");
  EpsSeq out(static_cast<std::size_t>(L));
  for (int i = 0; i < L; ++i) out[static_cast<std::size_t>(i)] = i % 2 == 0 ? Lambda::up : Lambda::down;
  return out;
}

struct ZRun {
  HPath path;   // Z_0 .. Z_n
  EpsSeq eps;   // epsilon_1 .. epsilon_n
  // consumed[k] = xi_{k+1}(Z_k), read at every step.
  std::vector<std::uint8_t> consumed;
};

// Joint trajectory of (epsilon, Z) for a given epsilon sequence. env_at(x, k)
// returns xi_k(x) on the discrete time grid, k >= 1.
template <class EnvAt>
ZRun simulate_Z_with(EnvAt&& env_at, double p, EpsSeq eps, Stream rng) {
  check_discrete_p(p);
  const double q = 1.0 - p;
  ZRun out;
  out.path.reserve(eps.size() + 1);
  out.consumed.reserve(eps.size());
  out.path.push_back({0, 0});
  Stream steps = rng.split(tags::walker);
  HPoint z{0, 0};
  for (std::size_t k = 0; k < eps.size(); ++k) {
    const int s = env_at(z.x, k + 1);
    const Lambda step = z_transition(eps[k], s ? p : q, p, steps);
    z.x += static_cast<int>(step);
    z.n += 1;
    out.path.push_back(z);
    out.consumed.push_back(static_cast<std::uint8_t>(s));
  }
  out.eps = std::move(eps);
  return out;
}

template <class EnvAt>
ZRun simulate_Z(EnvAt&& env_at, double p, int L, std::size_t n, Stream rng) {
  if (L < 2 || L % 2 != 0) throw DomainError("simulate_Z: L must be even and at least 2");
  if (n < static_cast<std::size_t>(L)) throw DomainError("simulate_Z: n must be at least L");
  return simulate_Z_with(env_at, p, sample_eps(n, p, rng.split(tags::epsilon)), rng);
}

// tau_0 = 0, tau_{k+1} = inf{n > tau_k + L : (eps_{n-L}, ..., eps_{n-1}) = eps^(L)},
// over n <= eps.size(). Only regeneration times found in the sequence are returned.
inline std::vector<std::size_t> find_regen_times(std::span<const Lambda> eps, int L) {
  if (L < 2 || L % 2 != 0) throw DomainError("find_regen_times: L must be even and at least 2");
  const auto len = static_cast<std::size_t>(L);
  std::vector<std::size_t> tau{0};
  // run = length of the current alternating (l+, l-, ...) suffix that is a
  // prefix of eps^(L), ending at index i (1-based).
  std::size_t run = 0;
  for (std::size_t i = 1; i < eps.size(); ++i) {  // window ending at i decides n = i + 1
    const Lambda e = eps[i - 1];
    const Lambda want = run % 2 == 0 ? Lambda::up : Lambda::down;
    if (e == want) {
      ++run;
    } else {
      run = e == Lambda::up ? 1 : 0;
    }
    if (run >= len) {
      // The last L symbols alternate starting at l+ only if run has the parity of L.
      const std::size_t n = i + 1;
      if ((run - len) % 2 == 0 && n > tau.back() + len) tau.push_back(n);
    }
  }
  return tau;
}

// Naive sliding-window scan of the same definition; kept for cross-checks.
inline std::vector<std::size_t> find_regen_times_naive(std::span<const Lambda> eps, int L) {
  const EpsSeq pattern = epsilon_pattern(L);
  const auto len = static_cast<std::size_t>(L);
  std::vector<std::size_t> tau{0};
  for (std::size_t n = len + 1; n <= eps.size(); ++n) {
    if (n <= tau.back() + len) continue;
    bool match = true;
    for (std::size_t j = 0; j < len && match; ++j) match = eps[n - len - 1 + j] == pattern[j];
    if (match) tau.push_back(n);
  }
  return tau;
}

struct RegenStats {
  int L = 2;
  double p = 0.75;
  double rL = 0.0;                       // r^L
  std::vector<std::size_t> tau;          // tau_0 = 0, tau_1, ...
  std::vector<std::int64_t> dtau;        // tau_k - tau_{k-1}
  std::vector<std::int64_t> dz;          // horizontal Z_{tau_k} - Z_{tau_{k-1}}
  std::vector<double> T;                 // r^L dtau
  std::vector<std::array<double, 2>> Z;  // r^L (Z_{tau_k} - Z_{tau_{k-1}})
  std::array<double, 2> z_L{0.0, 0.0};   // sample means
  double t_L = 0.0;

  std::size_t increments() const noexcept { return dtau.size(); }
};

inline RegenStats regen_stats(const ZRun& run, int L, double p) {
  RegenStats st;
  st.L = L;
  st.p = p;
  st.rL = std::pow(0.5 * (1.0 - p), L);
  st.tau = find_regen_times(run.eps, L);
  for (std::size_t k = 1; k < st.tau.size(); ++k) {
    const HPoint a = run.path[st.tau[k - 1]], b = run.path[st.tau[k]];
    st.dtau.push_back(b.n - a.n);
    st.dz.push_back(b.x - a.x);
    st.T.push_back(st.rL * static_cast<double>(b.n - a.n));
    st.Z.push_back({st.rL * static_cast<double>(b.x - a.x), st.rL * static_cast<double>(b.n - a.n)});
  }
  if (!st.T.empty()) {
    const double k = static_cast<double>(st.T.size());
    for (std::size_t i = 0; i < st.T.size(); ++i) {
      st.z_L[0] += st.Z[i][0];
      st.z_L[1] += st.Z[i][1];
      st.t_L += st.T[i];
    }
    st.z_L[0] /= k;
    st.z_L[1] /= k;
    st.t_L /= k;
  }
  return st;
}

inline constexpr std::size_t kMinRegenIncrements = 20;

struct RegenSpeed {
  double v = 0.0;
  double se = 0.0;
  std::size_t increments = 0;
};

namespace detail {
// Ratio estimator sum(a)/sum(b) with delta-method SE over the pairs (a_k, b_k).
inline RegenSpeed ratio_estimate(std::span<const double> a, std::span<const double> b) {
  double sa = 0.0, sb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sa += a[i];
    sb += b[i];
  }
  const double v = sa / sb;
  const double k = static_cast<double>(a.size());
  const double mean_b = sb / k;
  double ss = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - v * b[i];
    ss += d * d;
  }
  return {v, std::sqrt(ss / (k * (k - 1.0))) / mean_b, a.size()};
}
}  // namespace detail

// z_L / t_L (horizontal) = Z_{tau_K} / tau_K. The value is formed from the
// integer totals, so it equals the displacement ratio bit for bit.
inline RegenSpeed regen_speed(const RegenStats& st) {
  if (st.increments() < kMinRegenIncrements)
    throw InsufficientData("regen_speed: need at least 20 regeneration increments, have " +
                           std::to_string(st.increments()));
  std::vector<double> a(st.dz.begin(), st.dz.end()), b(st.dtau.begin(), st.dtau.end());
  RegenSpeed out = detail::ratio_estimate(a, b);
  std::int64_t zs = 0, ts = 0;
  for (std::size_t i = 0; i < st.dz.size(); ++i) {
    zs += st.dz[i];
    ts += st.dtau[i];
  }
  out.v = static_cast<double>(zs) / static_cast<double>(ts);
  return out;
}

// Pooled estimator over independent replicas; the SE uses replica totals so
// that dependence between increments within a replica is accounted for.
inline RegenSpeed regen_speed(std::span<const RegenStats> reps) {
  if (reps.size() == 1) return regen_speed(reps.front());
  std::vector<double> a, b;
  std::size_t incs = 0;
  std::int64_t zs = 0, ts = 0;
  for (const auto& st : reps) {
    std::int64_t z = 0, t = 0;
    for (std::size_t i = 0; i < st.dz.size(); ++i) {
      z += st.dz[i];
      t += st.dtau[i];
    }
    if (t == 0) continue;
    a.push_back(static_cast<double>(z));
    b.push_back(static_cast<double>(t));
    zs += z;
    ts += t;
    incs += st.increments();
  }
  if (incs < kMinRegenIncrements || a.size() < 2)
    throw InsufficientData("regen_speed: too few regeneration increments across replicas");
  RegenSpeed out = detail::ratio_estimate(a, b);
  out.v = static_cast<double>(zs) / static_cast<double>(ts);
  out.increments = incs;
  return out;
}

// I = inf{m >= 1 : (eps_{mL}, ..., eps_{(m+1)L-1}) = eps^(L)}, if observed.
inline std::optional<std::size_t> geometric_I(std::span<const Lambda> eps, int L) {
  const EpsSeq pattern = epsilon_pattern(L);
  const auto len = static_cast<std::size_t>(L);
  for (std::size_t m = 1; (m + 1) * len - 1 <= eps.size(); ++m) {
    bool match = true;
    for (std::size_t j = 0; j < len && match; ++j) match = eps[m * len + j - 1] == pattern[j];
    if (match) return m;
  }
  return std::nullopt;
}

struct GeometricCheck {
  stats::KsResult ks;
  double mean_I = 0.0;
  double se_I = 0.0;
  double expected_mean = 0.0;  // r^{-L}
  std::size_t observations = 0;
  bool tau_bound_holds = true;  // tau_1 <= (I + 1) L on every replica
};

inline constexpr std::size_t kMinGeometricObservations = 50;

// One I per replica sequence, compared with Geometric(r^L) on {1, 2, ...}.
inline GeometricCheck geometric_I_check(std::span<const EpsSeq> replicas, int L, double p) {
  const double rL = std::pow(0.5 * (1.0 - p), L);
  std::vector<long long> values;
  GeometricCheck out;
  stats::RunningStats s;
  for (const auto& eps : replicas) {
    const auto I = geometric_I(eps, L);
    if (!I) continue;
    values.push_back(static_cast<long long>(*I));
    s.add(static_cast<double>(*I));
    // The block of I ends at eps_{(I+1)L-1}, which decides n = (I+1)L, one
    // past the last index find_regen_times scans when the block is terminal.
    EpsSeq padded(eps.begin(), eps.end());
    padded.push_back(Lambda::stay);
    const auto tau = find_regen_times(padded, L);
    if (tau.size() < 2 || tau[1] > (*I + 1) * static_cast<std::size_t>(L)) out.tau_bound_holds = false;
  }
  if (values.size() < kMinGeometricObservations)
    throw InsufficientData("geometric_I_check: fewer than 50 observations of I");
  out.ks = stats::ks_one_sample_discrete(values, [rL](long long k) {
    return k < 1 ? 0.0 : 1.0 - std::pow(1.0 - rL, static_cast<double>(k));
  });
  out.mean_I = s.mean();
  out.se_I = s.sem();
  out.expected_mean = 1.0 / rL;
  out.observations = values.size();
  return out;
}

// Cap on a for which E[exp(a T_1)] is finite by the geometric bound.
inline double moment_cap(double rL, int L) { return std::log(1.0 / (1.0 - rL)) / (rL * L); }

// e^{x} E[e^{x I}] with x = a r^L L and I ~ Geometric(r^L):
// e^{x} sum_j e^{x j} (1 - r^L)^{j-1} r^L = r^L e^{2x} / (1 - (1 - r^L) e^{x}).
inline double moment_bound(double rL, int L, double a) {
  const double x = a * rL * L;
  // Denominator written as r^L - (1 - r^L)(e^x - 1) so that a = 0 gives exactly 1.
  return rL * std::exp(2.0 * x) / (rL - (1.0 - rL) * std::expm1(x));
}

struct MomentCheck {
  double empirical = 0.0;
  double se = 0.0;
  double bound = 0.0;
  bool pass = false;
};

// T_k are i.i.d. (they depend on epsilon only), so every increment is a
// sample of T_1.
inline MomentCheck moment_bound_check(std::span<const double> T, double rL, int L, double a) {
  if (!(a >= 0.0) || !(a < moment_cap(rL, L)))
    throw DomainError("moment_bound_check: a must lie in [0, log(1/(1-r^L)) / (r^L L))");
  if (T.empty()) throw InsufficientData("moment_bound_check: no increments");
  stats::RunningStats s;
  for (double t : T) s.add(std::exp(a * t));
  MomentCheck out;
  out.empirical = s.mean();
  out.se = s.sem();
  out.bound = moment_bound(rL, L, a);
  out.pass = out.empirical <= out.bound;
  return out;
}

inline MomentCheck moment_bound_check(const RegenStats& st, double a) {
  return moment_bound_check(st.T, st.rL, st.L, a);
}

}  // namespace rwdre::regen
