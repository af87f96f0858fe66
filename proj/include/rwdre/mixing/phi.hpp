#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/parallel.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/lazy_environment.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/env/torus.hpp"
#include "rwdre/mixing/cone.hpp"

namespace rwdre::mixing {

struct SpaceTimePoint {
  Site x = 0;
  Time s = 0.0;
  int value = 1;
};

// Conjunction of single-site conditions xi_s(x) = value.
struct Cylinder {
  std::vector<SpaceTimePoint> points;
};

struct EventPair {
  Cylinder A;  // all points at time 0
  Cylinder B;  // all points inside the cone
};

// A = {xi_0(0) = 1}; B = {xi(x) = 1} at the cone's entry height in each column |x| <= reach.
inline std::vector<EventPair> single_site_family(const ConeSpec& cone, int reach = 3) {
  cone.validate();
  std::vector<EventPair> fam;
  for (int x = -reach; x <= reach; ++x)
    fam.push_back({Cylinder{{{0, 0.0, 1}}}, Cylinder{{{x, cone_entry_height(cone, x), 1}}}});
  return fam;
}

struct PhiPair {
  double p_b_given_a = 0.0;
  double p_b = 0.0;
  double diff = 0.0;
  stats::Interval ci_b_given_a;
  stats::Interval ci_b;
  std::size_t count_a = 0;
};

struct PhiEstimate {
  // max over the family of |P(B|A) - P(B)|. A finite family can only bound
  // the mixing coefficient from below: this is a diagnostic, not a certificate.
  double phi = 0.0;
  stats::Interval ci;  // conservative interval from the two Wilson intervals
  std::size_t argmax = 0;
  std::size_t replicas = 0;
  std::vector<PhiPair> pairs;
  static constexpr const char* kLabel = "lower-bound diagnostic over a finite event family";
};

inline PhiEstimate phi_estimate(const SpinFlipSystem& system, const ConeSpec& cone,
                                const std::vector<EventPair>& family, std::size_t replicas,
                                std::uint64_t seed, unsigned threads = 1) {
  cone.validate();
  if (family.empty()) throw DomainError("phi_estimate: empty event family");
  if (replicas < 2) throw DomainError("phi_estimate: need at least 2 replicas");
  for (const auto& e : family) {
    if (e.A.points.empty() || e.B.points.empty()) throw DomainError("phi_estimate: empty cylinder");
    for (const auto& p : e.A.points)
      if (p.s != 0.0) throw DomainError("phi_estimate: A must be measurable at time 0");
    for (const auto& p : e.B.points)
      if (!cone_contains(cone, p.x, p.s)) throw DomainError("phi_estimate: B point outside the cone");
  }

  // All points, sorted by time so a forward-only torus can answer them.
  std::vector<SpaceTimePoint> pts;
  for (const auto& e : family) {
    pts.insert(pts.end(), e.A.points.begin(), e.A.points.end());
    pts.insert(pts.end(), e.B.points.begin(), e.B.points.end());
  }
  std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.s < b.s; });

  const Stream root = Stream::from_seed(seed).split(tags::environment);
  // Per replica: bit 0 = A holds, bit 1 = B holds, per pair.
  auto outcomes = map_replicas(replicas, threads, [&](std::size_t r) {
    const Stream rs = root.split(r);
    std::vector<std::pair<SpaceTimePoint, int>> seen;
    seen.reserve(pts.size());
    if (const auto& p = system.rates.independent_params()) {
      LazyEnvironment env(*p, rs);
      for (const auto& q : pts) seen.push_back({q, env.state(q.x, q.s)});
    } else {
      TorusDynamicEnvironment env(equilibrated_torus(system, rs), rs.split(tags::environment));
      for (const auto& q : pts) seen.push_back({q, env.state(q.x, q.s)});
    }
    auto lookup = [&](const SpaceTimePoint& q) {
      for (const auto& [k, v] : seen)
        if (k.x == q.x && k.s == q.s) return v;
      return -1;
    };
    auto holds = [&](const Cylinder& c) {
      for (const auto& q : c.points)
        if (lookup(q) != q.value) return false;
      return true;
    };
    std::vector<std::uint8_t> out(family.size());
    for (std::size_t k = 0; k < family.size(); ++k)
      out[k] = static_cast<std::uint8_t>((holds(family[k].A) ? 1 : 0) | (holds(family[k].B) ? 2 : 0));
    return out;
  });

  PhiEstimate est;
  est.replicas = replicas;
  for (std::size_t k = 0; k < family.size(); ++k) {
    std::size_t na = 0, nb = 0, nab = 0;
    for (const auto& o : outcomes) {
      na += o[k] & 1;
      nb += (o[k] >> 1) & 1;
      nab += o[k] == 3;
    }
    if (na == 0) throw InsufficientData("phi_estimate: event A never observed (pair " + std::to_string(k) + ")");
    PhiPair pp;
    pp.count_a = na;
    pp.p_b_given_a = static_cast<double>(nab) / static_cast<double>(na);
    pp.p_b = static_cast<double>(nb) / static_cast<double>(replicas);
    pp.diff = std::abs(pp.p_b_given_a - pp.p_b);
    pp.ci_b_given_a = stats::wilson_interval(nab, na);
    pp.ci_b = stats::wilson_interval(nb, replicas);
    if (k == 0 || pp.diff > est.phi) {
      est.phi = pp.diff;
      est.argmax = k;
    }
    est.pairs.push_back(pp);
  }
  const PhiPair& m = est.pairs[est.argmax];
  const double lo = m.ci_b_given_a.lo - m.ci_b.hi, hi = m.ci_b_given_a.hi - m.ci_b.lo;
  const double alo = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
  est.ci = {std::clamp(alo, 0.0, 1.0), std::clamp(std::max(std::abs(lo), std::abs(hi)), 0.0, 1.0)};
  return est;
}

}  // namespace rwdre::mixing
