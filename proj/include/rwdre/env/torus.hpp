#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/env/spin_flip.hpp"

namespace rwdre {

// Fenwick tree over non-negative weights with proportional sampling.
class RateTree {
 public:
  RateTree() = default;
  explicit RateTree(std::size_t n) : values_(n, 0.0), tree_(n + 1, 0.0) {}

  std::size_t size() const noexcept { return values_.size(); }
  double value(std::size_t i) const noexcept { return values_[i]; }

  void set(std::size_t i, double v) noexcept {
    const double d = v - values_[i];
    values_[i] = v;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += d;
  }

  // Recompute from the stored values, clearing accumulated rounding.
  void rebuild() noexcept {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      tree_[i + 1] += values_[i];
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[i + 1];
    }
  }

  double total() const noexcept {
    double s = 0.0;
    for (std::size_t k = values_.size(); k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }

  // Index i with prefix(i) <= u < prefix(i + 1); skips zero-weight slots that
  // rounding might otherwise select.
  std::size_t find(double u) const noexcept {
    std::size_t pos = 0;
    for (std::size_t step = std::bit_floor(values_.size()); step > 0; step >>= 1) {
      if (pos + step < tree_.size() && tree_[pos + step] <= u) {
        pos += step;
        u -= tree_[pos];
      }
    }
    std::size_t i = std::min(pos, values_.size() - 1);
    if (values_[i] > 0.0) return i;
    for (std::size_t k = i; k-- > 0;)
      if (values_[k] > 0.0) return k;
    for (std::size_t k = i + 1; k < values_.size(); ++k)
      if (values_[k] > 0.0) return k;
    return i;
  }

 private:
  std::vector<double> values_;
  std::vector<double> tree_;
};

struct FlipEvent {
  Time time;
  Site site;
  std::uint8_t new_state;
};

// Finite-volume configuration on Z/NZ with translation-invariant flip rates.
class TorusEnvironment {
 public:
  TorusEnvironment(std::vector<std::uint8_t> configuration, RateFunction rates)
      : config_(std::move(configuration)), rates_(std::move(rates)) {
    if (config_.size() < static_cast<std::size_t>(2 * rates_.range() + 3))
      throw DomainError("TorusEnvironment: size must be at least 2*range+3");
    for (auto v : config_)
      if (v > 1) throw DomainError("TorusEnvironment: configuration entries must be 0 or 1");
  }

  std::size_t size() const noexcept { return config_.size(); }
  const RateFunction& rates() const noexcept { return rates_; }
  const std::vector<std::uint8_t>& configuration() const noexcept { return config_; }
  Time time() const noexcept { return time_; }
  void set_time(Time t) noexcept { time_ = t; }

  std::size_t index(Site x) const noexcept {
    const auto n = static_cast<Site>(config_.size());
    Site r = x % n;
    return static_cast<std::size_t>(r < 0 ? r + n : r);
  }

  int state(Site x) const noexcept { return config_[index(x)]; }

  double rate(std::size_t i) const {
    return rates_.rate_at(static_cast<Site>(i), [this](Site y) { return config_[index(y)]; });
  }

  void flip(std::size_t i) noexcept { config_[i] ^= 1u; }

  std::string snapshot() const {
    std::string s(config_.size(), '0');
    for (std::size_t i = 0; i < config_.size(); ++i) s[i] = config_[i] ? '1' : '0';
    return s;
  }

 private:
  std::vector<std::uint8_t> config_;
  RateFunction rates_;
  Time time_ = 0.0;
};

// Exact continuous-time dynamics: holding time Exp(total rate), site chosen
// proportionally to its rate. Advancing discards the draw that overshoots the
// target time, which is exact by memorylessness. Events at exactly the target
// time are applied (cadlag reading).
class Gillespie {
 public:
  Gillespie(TorusEnvironment& env, Stream stream) : env_(&env), rng_(stream), tree_(env.size()) {
    for (std::size_t i = 0; i < env.size(); ++i) tree_.set(i, env.rate(i));
    tree_.rebuild();
  }

  double total_rate() const noexcept { return tree_.total(); }
  std::size_t events() const noexcept { return events_; }
  // Integral of the total rate over the simulated time; the compensator of
  // the event count.
  double integrated_rate() const noexcept { return integrated_rate_; }

  template <class OnEvent>
  void advance_to(Time target, OnEvent&& on_event) {
    TorusEnvironment& env = *env_;
    if (target < env.time()) throw DomainError("Gillespie::advance_to: time moves backwards");
    while (true) {
      const double total = tree_.total();
      if (!(total > 1e-300)) {
        if (std::isinf(target))
          throw SimulationError("Gillespie: total rate is zero with an infinite horizon");
        env.set_time(target);
        return;
      }
      const double dt = rng_.exponential(total);
      if (env.time() + dt > target) {
        integrated_rate_ += total * (target - env.time());
        env.set_time(target);
        return;
      }
      integrated_rate_ += total * dt;
      env.set_time(env.time() + dt);
      const std::size_t i = tree_.find(rng_.uniform() * total);
      env.flip(i);
      refresh_around(i);
      ++events_;
      on_event(FlipEvent{env.time(), static_cast<Site>(i), static_cast<std::uint8_t>(env.state(static_cast<Site>(i)))});
    }
  }

  void advance_to(Time target) {
    advance_to(target, [](const FlipEvent&) {});
  }

 private:
  void refresh_around(std::size_t i) {
    const int r = env_->rates().range();
    for (int d = -r; d <= r; ++d) {
      const std::size_t j = env_->index(static_cast<Site>(i) + d);
      tree_.set(j, env_->rate(j));
    }
    if (++since_rebuild_ >= kRebuildEvery) {
      tree_.rebuild();
      since_rebuild_ = 0;
    }
  }

  static constexpr std::size_t kRebuildEvery = 1u << 16;
  TorusEnvironment* env_;
  Stream rng_;
  RateTree tree_;
  std::size_t events_ = 0;
  std::size_t since_rebuild_ = 0;
  double integrated_rate_ = 0.0;
};

struct EventTrajectory {
  std::vector<std::uint8_t> initial;
  std::vector<FlipEvent> events;
  Time horizon = 0.0;
  double integrated_rate = 0.0;

  // Configuration at time t, cadlag.
  std::vector<std::uint8_t> at(Time t) const {
    auto c = initial;
    for (const auto& e : events) {
      if (e.time > t) break;
      c[static_cast<std::size_t>(e.site)] = e.new_state;
    }
    return c;
  }
};

inline EventTrajectory gillespie_run(TorusEnvironment& env, Time horizon, std::uint64_t seed,
                                     bool keep_events = true) {
  if (!(horizon >= 0.0)) throw DomainError("gillespie_run: horizon must be non-negative");
  EventTrajectory out;
  out.initial = env.configuration();
  Gillespie engine(env, Stream::from_seed(seed).split(tags::environment));
  engine.advance_to(env.time() + horizon, [&](const FlipEvent& e) {
    if (keep_events) out.events.push_back(e);
  });
  out.horizon = horizon;
  out.integrated_rate = engine.integrated_rate();
  return out;
}

inline std::vector<std::uint8_t> product_configuration(std::size_t n, double density, Stream rng) {
  std::vector<std::uint8_t> c(n);
  for (auto& v : c) v = rng.bernoulli(density) ? 1 : 0;
  return c;
}

// Torus started near equilibrium: exact Bernoulli(rho) for independent flips,
// otherwise a product start followed by the system's burn-in.
inline TorusEnvironment equilibrated_torus(const SpinFlipSystem& system, Stream rng) {
  if (const auto& p = system.rates.independent_params()) {
    return TorusEnvironment(product_configuration(system.torus_size, p->rho(), rng.split(tags::initial)),
                            system.rates);
  }
  TorusEnvironment env(product_configuration(system.torus_size, system.initial_density, rng.split(tags::initial)),
                       system.rates);
  Gillespie burn(env, rng.split(tags::burn_in));
  burn.advance_to(system.burn_in_time());
  env.set_time(0.0);
  return env;
}

// Dynamic environment on a torus, read through the walker's interface:
// state(x, t) with non-decreasing t. Sites are wrapped modulo N; the walker
// getting within range + 1 of the antipode of its start is flagged.
class TorusDynamicEnvironment {
 public:
  TorusDynamicEnvironment(TorusEnvironment env, Stream stream)
      : env_(std::move(env)), engine_(env_, stream) {}

  TorusDynamicEnvironment(const TorusDynamicEnvironment&) = delete;
  TorusDynamicEnvironment& operator=(const TorusDynamicEnvironment&) = delete;

  int state(Site x, Time t) {
    if (t < env_.time()) throw DomainError("TorusDynamicEnvironment: queries must be time-ordered");
    const Site guard = static_cast<Site>(env_.size() / 2) - (env_.rates().range() + 1);
    if (x > guard || x < -guard) wrapped_ = true;
    if (t > env_.time()) {
      engine_.advance_to(t, [this](const FlipEvent& e) {
        if (log_ && log_->size() < log_cap_) log_->push_back(e);
      });
    }
    return env_.state(x);
  }

  // Records up to `cap` subsequent flip events into *log.
  void record_events(std::vector<FlipEvent>* log, std::size_t cap) noexcept {
    log_ = log;
    log_cap_ = cap;
  }

  bool wrapped() const noexcept { return wrapped_; }
  const TorusEnvironment& torus() const noexcept { return env_; }
  const Gillespie& engine() const noexcept { return engine_; }

 private:
  TorusEnvironment env_;
  Gillespie engine_;
  bool wrapped_ = false;
  std::vector<FlipEvent>* log_ = nullptr;
  std::size_t log_cap_ = 0;
};

}  // namespace rwdre
