#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/walker/model.hpp"
#include "rwdre/walker/speed.hpp"

namespace rwdre {

// Continuous-time trajectory sampled at its jump times.
struct WalkSample {
  std::vector<Time> jump_times{0.0};  // chi_0 = 0 < chi_1 < ...
  std::vector<Site> positions{0};     // X(chi_n)
  // consumed[n] = xi_{chi_{n+1}}(X(chi_n)), the site state read by jump n+1.
  std::vector<std::uint8_t> consumed;
  Time horizon = 0.0;
  bool degenerate_params = false;

  std::size_t jumps() const noexcept { return consumed.size(); }

  Site position_at(Time t) const {
    auto it = std::upper_bound(jump_times.begin(), jump_times.end(), t);
    return positions[static_cast<std::size_t>(it - jump_times.begin()) - 1];
  }
};

// Event-driven walker. The jump clock is a Poisson(U) process on its own
// stream; at each ring the walker reads the (post-event) site state at its
// current position and steps right with probability rate_right / U.
// on_jump(t, from, to, consumed_state) is called for every jump.
template <class Env, class OnJump>
void run_walker(Env& env, const ModelParams& m, Time horizon, Stream rng, OnJump&& on_jump) {
  if (!(horizon > 0.0)) throw DomainError("simulate_ct: horizon must be positive");
  Stream clock = rng.split(tags::jump_clock);
  Stream steps = rng.split(tags::walker);
  const double total = m.total_rate();
  const double up_occupied = m.alpha() / total;
  const double up_vacant = m.beta() / total;
  Time t = 0.0;
  Site x = 0;
  while (true) {
    t += clock.exponential(total);
    if (t > horizon) break;
    const int s = env.state(x, t);
    const Site next = x + (steps.uniform() < (s ? up_occupied : up_vacant) ? 1 : -1);
    on_jump(t, x, next, s);
    x = next;
  }
}

template <class Env>
WalkSample simulate_ct(Env& env, const ModelParams& m, Time horizon, Stream rng) {
  WalkSample out;
  out.horizon = horizon;
  out.degenerate_params = m.degenerate();
  run_walker(env, m, horizon, rng, [&](Time t, Site, Site to, int s) {
    out.jump_times.push_back(t);
    out.positions.push_back(to);
    out.consumed.push_back(static_cast<std::uint8_t>(s));
  });
  return out;
}

template <class Env>
WalkSample simulate_ct(Env& env, const ModelParams& m, Time horizon, std::uint64_t seed) {
  return simulate_ct(env, m, horizon, Stream::from_seed(seed));
}

// Streaming speed estimate without storing the path.
template <class Env>
SpeedEstimate simulate_speed(Env& env, const ModelParams& m, Time horizon, Stream rng,
                             double burn_in_fraction = kDefaultBurnInFraction,
                             std::size_t batches = kDefaultBatches) {
  SpeedAccumulator acc(horizon, burn_in_fraction, batches);
  run_walker(env, m, horizon, rng, acc);
  return acc.finish();
}

inline SpeedEstimate speed_estimate(const WalkSample& w,
                                    double burn_in_fraction = kDefaultBurnInFraction,
                                    std::size_t batches = kDefaultBatches) {
  SpeedAccumulator acc(w.horizon, burn_in_fraction, batches);
  for (std::size_t n = 0; n < w.jumps(); ++n)
    acc(w.jump_times[n + 1], w.positions[n], w.positions[n + 1], w.consumed[n]);
  return acc.finish();
}

// The jump chain (chi_n, X*_n, xi*_n) of a continuous-time walk.
struct JumpChain {
  std::vector<Time> chi;
  std::vector<Site> x_star;
  // xi*_{n+1}(X*_n): the state consumed by step n -> n+1.
  std::vector<std::uint8_t> consumed;
  // Optional windows xi_{chi_n}(X*_n + j), |j| <= radius.
  std::vector<std::vector<std::uint8_t>> snapshots;
};

inline JumpChain to_discrete(const WalkSample& w) {
  if (w.jump_times.empty()) throw DomainError("to_discrete: empty sample");
  return JumpChain{w.jump_times, w.positions, w.consumed, {}};
}

// Also records environment windows at the jump times; env must allow
// queries at those times (LazyEnvironment allows any order).
template <class Env>
JumpChain to_discrete(const WalkSample& w, Env& env, int radius) {
  JumpChain out = to_discrete(w);
  out.snapshots.reserve(w.jump_times.size());
  for (std::size_t n = 0; n < w.jump_times.size(); ++n) {
    std::vector<std::uint8_t> win;
    win.reserve(static_cast<std::size_t>(2 * radius + 1));
    for (int j = -radius; j <= radius; ++j)
      win.push_back(static_cast<std::uint8_t>(env.state(w.positions[n] + j, w.jump_times[n])));
    out.snapshots.push_back(std::move(win));
  }
  return out;
}

}  // namespace rwdre
