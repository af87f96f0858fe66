#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/parallel.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/env/torus.hpp"

namespace rwdre::mixing {

struct CouplingRun {
  Time horizon = 0.0;
  std::size_t size = 0;
  std::size_t events = 0;
  // Origin discrepancy: initial status and the times at which it toggles.
  bool origin_initially_discrepant = false;
  std::vector<Time> origin_toggles;
  // sup{s <= horizon : xi_s(0) != xi'_s(0)}, 0 if never discrepant.
  Time last_discrepancy = 0.0;
  bool discrepant_at_horizon = false;
  std::size_t max_discrepant_sites = 0;
  std::size_t final_discrepant_sites = 0;
  // Events after which xi <= xi' failed at the updated site (only counted
  // when the start is ordered).
  std::size_t ordering_violations = 0;
  bool ordered_start = false;
  // Time-integrated occupation of the origin in each copy.
  double origin_occupation[2] = {0.0, 0.0};
  std::vector<std::uint8_t> final_eta, final_eta_prime;

  bool origin_discrepant_at(Time t) const {
    bool d = origin_initially_discrepant;
    for (Time s : origin_toggles) {
      if (s > t) break;
      d = !d;
    }
    return d;
  }
};

// Basic coupling of two copies of a spin-flip system on a torus. At a site
// where the copies agree they flip together at min(c, c') and the copy with
// the larger rate flips alone at |c - c'|; where they disagree each flips at
// its own rate.
class CoupledTorus {
 public:
  CoupledTorus(RateFunction rates, std::vector<std::uint8_t> eta, std::vector<std::uint8_t> eta_prime)
      : a_(std::move(eta), rates), b_(std::move(eta_prime), rates), tree_(a_.size()) {
    if (a_.size() != b_.size()) throw DomainError("CoupledTorus: configurations differ in size");
    for (std::size_t i = 0; i < a_.size(); ++i) {
      refresh_site(i);
      discrepant_ += a_.state(static_cast<Site>(i)) != b_.state(static_cast<Site>(i));
    }
    tree_.rebuild();
  }

  const TorusEnvironment& first() const noexcept { return a_; }
  const TorusEnvironment& second() const noexcept { return b_; }
  std::size_t discrepant_sites() const noexcept { return discrepant_; }
  Time time() const noexcept { return time_; }

  // Runs to `target`; on_event(time, site, changed_first, changed_second).
  template <class OnEvent>
  void advance_to(Time target, Stream& rng, OnEvent&& on_event) {
    while (true) {
      const double total = tree_.total();
      if (!(total > 1e-300)) {
        time_ = target;
        return;
      }
      const double dt = rng.exponential(total);
      if (time_ + dt > target) {
        time_ = target;
        return;
      }
      time_ += dt;
      const std::size_t i = tree_.find(rng.uniform() * total);
      const double site_total = tree_.value(i);
      const double u = rng.uniform() * site_total;
      const double c = a_.rate(i), cp = b_.rate(i);
      const auto x = static_cast<Site>(i);
      bool fa = false, fb = false;
      if (a_.state(x) == b_.state(x)) {
        const double joint = std::min(c, cp);
        if (u < joint) {
          fa = fb = true;
        } else if (c > cp) {
          fa = true;
        } else {
          fb = true;
        }
      } else if (u < c) {
        fa = true;
      } else {
        fb = true;
      }
      const bool was = a_.state(x) != b_.state(x);
      if (fa) a_.flip(i);
      if (fb) b_.flip(i);
      const bool now = a_.state(x) != b_.state(x);
      if (was != now) {
        if (now) ++discrepant_;
        else --discrepant_;
      }
      const int r = a_.rates().range();
      for (int d = -r; d <= r; ++d) refresh_site(a_.index(x + d));
      if (++since_rebuild_ >= (1u << 16)) {
        tree_.rebuild();
        since_rebuild_ = 0;
      }
      ++events_;
      on_event(time_, i, fa, fb);
    }
  }

  std::size_t events() const noexcept { return events_; }

 private:
  void refresh_site(std::size_t i) {
    const double c = a_.rate(i), cp = b_.rate(i);
    const auto x = static_cast<Site>(i);
    tree_.set(i, a_.state(x) == b_.state(x) ? std::max(c, cp) : c + cp);
  }

  TorusEnvironment a_, b_;
  RateTree tree_;
  Time time_ = 0.0;
  std::size_t discrepant_ = 0;
  std::size_t events_ = 0;
  std::size_t since_rebuild_ = 0;
};

inline std::vector<std::uint8_t> all_zero(std::size_t n) { return std::vector<std::uint8_t>(n, 0); }
inline std::vector<std::uint8_t> all_one(std::size_t n) { return std::vector<std::uint8_t>(n, 1); }

inline CouplingRun vasershtein_run(const RateFunction& rates, std::vector<std::uint8_t> eta,
                                   std::vector<std::uint8_t> eta_prime, Time horizon, Stream rng,
                                   bool keep_final = false) {
  if (!(horizon >= 0.0) || !std::isfinite(horizon))
    throw DomainError("vasershtein_run: horizon must be finite and non-negative");
  CouplingRun run;
  run.horizon = horizon;
  run.size = eta.size();
  run.ordered_start = eta.size() == eta_prime.size() &&
                      std::equal(eta.begin(), eta.end(), eta_prime.begin(),
                                 [](std::uint8_t a, std::uint8_t b) { return a <= b; });
  CoupledTorus ct(rates, std::move(eta), std::move(eta_prime));
  bool origin_d = ct.first().state(0) != ct.second().state(0);
  run.origin_initially_discrepant = origin_d;
  run.max_discrepant_sites = ct.discrepant_sites();
  Time last_change = 0.0;
  int occ_a = ct.first().state(0), occ_b = ct.second().state(0);
  ct.advance_to(horizon, rng, [&](Time t, std::size_t i, bool fa, bool fb) {
    run.max_discrepant_sites = std::max(run.max_discrepant_sites, ct.discrepant_sites());
    const auto x = static_cast<Site>(i);
    if (run.ordered_start && ct.first().state(x) > ct.second().state(x)) ++run.ordering_violations;
    if (i != 0) return;
    run.origin_occupation[0] += occ_a * (t - last_change);
    run.origin_occupation[1] += occ_b * (t - last_change);
    last_change = t;
    if (fa) occ_a ^= 1;
    if (fb) occ_b ^= 1;
    const bool d = ct.first().state(0) != ct.second().state(0);
    if (d != origin_d) {
      run.origin_toggles.push_back(t);
      origin_d = d;
    }
  });
  run.origin_occupation[0] += occ_a * (horizon - last_change);
  run.origin_occupation[1] += occ_b * (horizon - last_change);
  run.events = ct.events();
  run.discrepant_at_horizon = origin_d;
  if (origin_d) {
    run.last_discrepancy = horizon;
  } else if (!run.origin_toggles.empty()) {
    run.last_discrepancy = run.origin_toggles.back();
  }
  run.final_discrepant_sites = ct.discrepant_sites();
  if (keep_final) {
    run.final_eta = ct.first().configuration();
    run.final_eta_prime = ct.second().configuration();
  }
  return run;
}

// Ensemble of coupled runs from ([0], [1]) on the system's torus.
inline std::vector<CouplingRun> extreme_pair_ensemble(const SpinFlipSystem& system, Time horizon,
                                                      std::size_t replicas, std::uint64_t seed,
                                                      unsigned threads = 1) {
  const Stream root = Stream::from_seed(seed).split(tags::coupling);
  return map_replicas(replicas, threads, [&](std::size_t r) {
    return vasershtein_run(system.rates, all_zero(system.torus_size), all_one(system.torus_size),
                           horizon, root.split(r));
  });
}

inline Time default_coupling_horizon(const RateFunction& rates) {
  const double c = mixing_constants(rates).c();
  if (!(c > 0.0)) throw DomainError("coupling horizon: eps - M must be positive for the default horizon");
  return 20.0 / c;
}

struct DecayPoint {
  Time t = 0.0;
  double rho_hat = 0.0;
  stats::Interval ci;
  double bound = 0.0;  // e^{-(eps - M) t}
};

struct DecayEstimate {
  std::vector<DecayPoint> curve;
  double rate = 0.0;
  double rate_se = 0.0;
  double intercept = 0.0;
  double integral = 0.0;  // int_0^inf rho*(t) dt: trapezoid plus exponential tail
  bool tail_flag = false;  // some replica still discrepant at the horizon
  bool within_bound = true;  // rho_hat <= bound (1 + 3 relative SE) at every grid point
  std::size_t replicas = 0;
  double c = 0.0;
};

// rho*(t): fraction of runs whose origin is discrepant at some s >= t.
inline DecayEstimate decay_estimate(std::span<const CouplingRun> runs, const RateFunction& rates,
                                    std::size_t grid = 40, std::size_t min_count = 10) {
  if (runs.size() < 20) throw InsufficientData("decay_estimate: need at least 20 coupled runs");
  if (grid < 3) throw DomainError("decay_estimate: grid needs at least 3 points");
  DecayEstimate est;
  est.replicas = runs.size();
  est.c = mixing_constants(rates).c();
  const Time H = runs.front().horizon;
  std::vector<Time> last;
  last.reserve(runs.size());
  for (const auto& r : runs) {
    last.push_back(r.last_discrepancy);
    est.tail_flag = est.tail_flag || r.discrepant_at_horizon;
  }
  std::sort(last.begin(), last.end());
  const auto n = static_cast<double>(runs.size());
  std::vector<double> fx, fy, fw;
  for (std::size_t k = 0; k < grid; ++k) {
    DecayPoint p;
    p.t = H * static_cast<double>(k) / static_cast<double>(grid - 1);
    const auto above = static_cast<std::size_t>(last.end() - std::upper_bound(last.begin(), last.end(), p.t));
    p.rho_hat = static_cast<double>(above) / n;
    p.ci = stats::wilson_interval(above, runs.size());
    p.bound = std::exp(-est.c * p.t);
    // Relative SE of a binomial fraction sitting exactly on the bound.
    const double rel_se = p.bound > 0.0 ? std::sqrt((1.0 - p.bound) / (n * p.bound)) : 0.0;
    if (p.rho_hat > p.bound * (1.0 + 3.0 * rel_se)) est.within_bound = false;
    if (above >= min_count && above < runs.size()) {
      fx.push_back(p.t);
      fy.push_back(std::log(p.rho_hat));
      fw.push_back(n * p.rho_hat / (1.0 - p.rho_hat));  // 1 / Var(log rho_hat)
    }
    est.curve.push_back(p);
  }
  if (fx.size() < 2) throw InsufficientData("decay_estimate: too few grid points with enough discrepant runs");
  const stats::LinearFit fit = stats::weighted_linear_fit(fx, fy, fw);
  est.rate = -fit.slope;
  est.rate_se = fit.slope_se;
  est.intercept = fit.intercept;
  for (std::size_t k = 1; k < est.curve.size(); ++k)
    est.integral += 0.5 * (est.curve[k].t - est.curve[k - 1].t) *
                    (est.curve[k].rho_hat + est.curve[k - 1].rho_hat);
  if (est.rate > 0.0) est.integral += est.curve.back().rho_hat / est.rate;
  return est;
}

}  // namespace rwdre::mixing
