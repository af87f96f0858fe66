#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/spin_flip.hpp"

namespace rwdre {

inline constexpr double kDefaultBurnInFraction = 0.1;
inline constexpr std::size_t kDefaultBatches = 20;
inline constexpr std::size_t kMinWindowEvents = 100;

struct SpeedEstimate {
  double v = 0.0;
  double se = 0.0;
  std::size_t batches = 0;
  std::size_t window_events = 0;  // jumps or steps after burn-in
  // Fraction of post-burn-in jumps made from an occupied site; by PASTA
  // (jump clock independent of the past) this estimates the occupation
  // fraction of the environment process.
  double occupation = 0.0;
};

// Streaming speed estimator for a continuous-time walk: positions at the
// batch boundaries of [f*T, T] plus the consumed-state average. Feed jumps in
// time order; call finish() once the horizon is reached.
class SpeedAccumulator {
 public:
  SpeedAccumulator(Time horizon, double burn_in_fraction = kDefaultBurnInFraction,
                   std::size_t batches = kDefaultBatches)
      : horizon_(horizon), start_(burn_in_fraction * horizon), batches_(batches) {
    if (batches < 2) throw InsufficientData("speed estimate: need at least 2 batches");
    if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
      throw DomainError("speed estimate: burn-in fraction must be in [0, 1)");
    boundary_pos_.reserve(batches + 1);
  }

  void operator()(Time t, Site from, Site to, int consumed) {
    while (boundary_pos_.size() <= batches_ && boundary(boundary_pos_.size()) < t)
      boundary_pos_.push_back(from);
    if (t > start_) {
      ++window_jumps_;
      occupied_ += static_cast<std::size_t>(consumed);
    }
    last_ = to;
  }

  SpeedEstimate finish() {
    while (boundary_pos_.size() <= batches_) boundary_pos_.push_back(last_);
    if (window_jumps_ < kMinWindowEvents)
      throw InsufficientData("speed estimate: fewer than 100 jumps after burn-in");
    const double width = (horizon_ - start_) / static_cast<double>(batches_);
    stats::RunningStats s;
    for (std::size_t b = 0; b < batches_; ++b)
      s.add(static_cast<double>(boundary_pos_[b + 1] - boundary_pos_[b]) / width);
    SpeedEstimate e;
    e.v = static_cast<double>(boundary_pos_[batches_] - boundary_pos_[0]) / (horizon_ - start_);
    e.se = s.sem();
    e.batches = batches_;
    e.window_events = window_jumps_;
    e.occupation = static_cast<double>(occupied_) / static_cast<double>(window_jumps_);
    return e;
  }

  Site position() const noexcept { return last_; }

 private:
  Time boundary(std::size_t k) const noexcept {
    return k == batches_ ? horizon_
                         : start_ + (horizon_ - start_) * static_cast<double>(k) /
                                        static_cast<double>(batches_);
  }

  Time horizon_;
  Time start_;
  std::size_t batches_;
  std::vector<Site> boundary_pos_;
  std::size_t window_jumps_ = 0;
  std::size_t occupied_ = 0;
  Site last_ = 0;
};

// Ensemble of equal-horizon replicas: mean of replica speeds with the
// across-replica standard error (batch SE when there is a single replica).
inline SpeedEstimate combine_replicas(std::span<const SpeedEstimate> reps) {
  if (reps.empty()) throw InsufficientData("combine_replicas: no replicas");
  if (reps.size() == 1) return reps.front();
  stats::RunningStats v, occ;
  SpeedEstimate out;
  for (const auto& r : reps) {
    v.add(r.v);
    occ.add(r.occupation);
    out.window_events += r.window_events;
  }
  out.v = v.mean();
  out.se = v.sem();
  out.batches = reps.size();
  out.occupation = occ.mean();
  return out;
}

}  // namespace rwdre
