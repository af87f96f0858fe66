#pragma once

#include <cstdint>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/walker/speed.hpp"

namespace rwdre {

struct DiscretePath {
  std::vector<Site> positions{0};
  // consumed[n] = xi_{n+1}(X_n), the state read by step n -> n+1.
  std::vector<std::uint8_t> consumed;

  std::size_t steps() const noexcept { return consumed.size(); }
};

// Discrete-time environment on integer times: xi_k = xi at time k.
template <class Env>
class IntegerTimes {
 public:
  explicit IntegerTimes(Env& env) : env_(&env) {}
  int operator()(Site x, std::size_t k) { return env_->state(x, static_cast<Time>(k)); }

 private:
  Env* env_;
};

// Discrete-time environment on the jump times of an independent Poisson(U)
// clock: xi*_k = xi at chi_k. Step indices must be non-decreasing.
template <class Env>
class JumpChainTimes {
 public:
  JumpChainTimes(Env& env, double total_rate, Stream clock)
      : env_(&env), rate_(total_rate), clock_(clock) {}

  int operator()(Site x, std::size_t k) {
    if (k < index_) throw DomainError("JumpChainTimes: step indices must be non-decreasing");
    while (index_ < k) {
      chi_ += clock_.exponential(rate_);
      ++index_;
    }
    return env_->state(x, chi_);
  }

  Time current_time() const noexcept { return chi_; }

 private:
  Env* env_;
  double rate_;
  Stream clock_;
  std::size_t index_ = 0;
  Time chi_ = 0.0;
};

inline void check_discrete_p(double p) {
  if (!(p > 0.5 && p < 1.0)) throw DomainError("discrete walk: p must lie in (1/2, 1)");
}

// X_{n+1} = X_n + 1 with probability p xi_{n+1}(X_n) + q (1 - xi_{n+1}(X_n)).
template <class EnvAt>
DiscretePath simulate_dt(EnvAt&& env_at, double p, std::size_t n, Stream rng) {
  check_discrete_p(p);
  DiscretePath out;
  out.positions.reserve(n + 1);
  out.consumed.reserve(n);
  Stream steps = rng.split(tags::walker);
  Site x = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const int s = env_at(x, k + 1);
    x += steps.uniform() < (s ? p : 1.0 - p) ? 1 : -1;
    out.consumed.push_back(static_cast<std::uint8_t>(s));
    out.positions.push_back(x);
  }
  return out;
}

// Speed per step over the post-burn-in window, batch-means SE.
inline SpeedEstimate speed_estimate(const DiscretePath& path,
                                    double burn_in_fraction = kDefaultBurnInFraction,
                                    std::size_t batches = kDefaultBatches) {
  if (batches < 2) throw InsufficientData("speed estimate: need at least 2 batches");
  const std::size_t n = path.steps();
  const auto start = static_cast<std::size_t>(burn_in_fraction * static_cast<double>(n));
  const std::size_t window = n - start;
  if (window < kMinWindowEvents || window < batches)
    throw InsufficientData("speed estimate: fewer than 100 steps after burn-in");
  stats::RunningStats s;
  const std::size_t per = window / batches;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t lo = start + b * per;
    const std::size_t hi = b + 1 == batches ? n : lo + per;
    s.add(static_cast<double>(path.positions[hi] - path.positions[lo]) /
          static_cast<double>(hi - lo));
  }
  std::size_t occupied = 0;
  for (std::size_t k = start; k < n; ++k) occupied += path.consumed[k];
  SpeedEstimate e;
  e.v = static_cast<double>(path.positions[n] - path.positions[start]) / static_cast<double>(window);
  e.se = s.sem();
  e.batches = batches;
  e.window_events = window;
  e.occupation = static_cast<double>(occupied) / static_cast<double>(window);
  return e;
}

}  // namespace rwdre
