#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/env/spin_flip.hpp"

namespace rwdre {

// Independent-flip environment on all of Z, realized on demand.
//
// Each site is a stationary two-state Markov chain. The first query at a site
// draws Bernoulli(rho) (its equilibrium marginal, independent of all other
// sites); every later query is sampled exactly from the chain conditioned on
// the already realized values: forward from the latest anchor, backward from
// the earliest (the chain is reversible), or as a bridge between the two
// neighbouring anchors. Realized values are kept, so repeated queries agree
// and the joint law of any set of queries is the true finite-dimensional law.
// Each site draws from its own stream split off the environment seed.
class LazyEnvironment {
 public:
  static constexpr std::size_t kDefaultMaxSites = std::size_t{1} << 24;

  LazyEnvironment(const SpinFlipParams& params, Stream stream,
                  std::size_t max_sites = kDefaultMaxSites)
      : params_(params), stream_(stream), max_sites_(max_sites) {}

  const SpinFlipParams& params() const noexcept { return params_; }

  // xi_t(x). Values are cadlag; the realized path is fixed once queried.
  int state(Site x, Time t) {
    if (!(t >= 0.0)) throw DomainError("LazyEnvironment::state: t must be non-negative");
    Track& tr = track(x);
    auto& a = tr.anchors;
    if (a.empty()) {
      const int s = tr.rng.bernoulli(params_.rho()) ? 1 : 0;
      a.push_back({t, static_cast<std::uint8_t>(s)});
      return s;
    }
    if (t >= a.back().time) {
      if (t == a.back().time) return a.back().state;
      const int s = step(tr.rng, a.back().state, t - a.back().time);
      a.push_back({t, static_cast<std::uint8_t>(s)});
      return s;
    }
    auto it = std::lower_bound(a.begin(), a.end(), t,
                               [](const Anchor& an, Time q) { return an.time < q; });
    if (it->time == t) return it->state;
    int s;
    if (it == a.begin()) {
      s = step(tr.rng, it->state, it->time - t);  // reversibility
    } else {
      const Anchor& before = *(it - 1);
      s = bridge(tr.rng, before.state, t - before.time, it->state, it->time - t);
    }
    a.insert(it, {t, static_cast<std::uint8_t>(s)});
    return s;
  }

  // Lowest and highest site touched so far.
  Site low_site() const noexcept { return -static_cast<Site>(negative_.size()); }
  Site high_site() const noexcept { return static_cast<Site>(nonnegative_.size()) - 1; }
  std::size_t extent() const noexcept { return negative_.size() + nonnegative_.size(); }

 private:
  struct Anchor {
    Time time;
    std::uint8_t state;
  };
  struct Track {
    Stream rng;
    std::vector<Anchor> anchors;
  };

  Track& track(Site x) {
    auto& side = x >= 0 ? nonnegative_ : negative_;
    const std::size_t idx = x >= 0 ? static_cast<std::size_t>(x) : static_cast<std::size_t>(-x - 1);
    if (idx >= side.size()) {
      const std::size_t other = x >= 0 ? negative_.size() : nonnegative_.size();
      if (idx + 1 + other > max_sites_)
        throw ResourceError("LazyEnvironment: site " + std::to_string(x) +
                            " exceeds the configured extent cap of " + std::to_string(max_sites_) +
                            " sites");
      const std::size_t old = side.size();
      side.resize(idx + 1);
      for (std::size_t i = old; i <= idx; ++i) {
        const Site site = x >= 0 ? static_cast<Site>(i) : -static_cast<Site>(i) - 1;
        side[i].rng = stream_.split(static_cast<std::uint64_t>(site));
      }
    }
    return side[idx];
  }

  double one_prob(int from, double dt) const {
    const double decay = std::exp(-params_.total_rate() * dt);
    return (from ? decay : 0.0) + params_.rho() * (1.0 - decay);
  }

  int step(Stream& rng, int from, double dt) const { return rng.bernoulli(one_prob(from, dt)) ? 1 : 0; }

  int bridge(Stream& rng, int from, double dt1, int to, double dt2) const {
    const double p1 = one_prob(from, dt1);
    const double w1 = p1 * (to ? one_prob(1, dt2) : 1.0 - one_prob(1, dt2));
    const double w0 = (1.0 - p1) * (to ? one_prob(0, dt2) : 1.0 - one_prob(0, dt2));
    return rng.bernoulli(w1 / (w1 + w0)) ? 1 : 0;
  }

  SpinFlipParams params_;
  Stream stream_;
  std::size_t max_sites_;
  std::vector<Track> nonnegative_;
  std::vector<Track> negative_;
};

}  // namespace rwdre
