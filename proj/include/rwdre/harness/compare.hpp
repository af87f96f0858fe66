#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rwdre/core/error.hpp"
#include "rwdre/core/parallel.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/env/lazy_environment.hpp"
#include "rwdre/expansion/predict.hpp"
#include "rwdre/harness/config.hpp"
#include "rwdre/regen/regeneration.hpp"
#include "rwdre/walker/continuous.hpp"
#include "rwdre/walker/discrete.hpp"

namespace rwdre::harness {

struct SpeedValue {
  double v = 0.0;
  double se = 0.0;
};

struct CompareReport {
  SpeedValue mc;      // direct continuous-time Monte Carlo
  SpeedValue regen;   // regeneration estimator on the jump chain, times U
  SpeedValue series;  // order-3 expansion (no sampling error)
  double z_mc_regen = 0.0;
  double z_mc_series = 0.0;
  double z_regen_series = 0.0;
  double threshold = 3.0;
  bool pass = false;
  expansion::ExpansionReport expansion;
  expansion::DriftIdentity drift_identity;
  std::size_t regen_increments = 0;
  std::size_t steps_per_replica = 0;
  std::size_t replicas = 0;
};

inline double z_score(const SpeedValue& a, const SpeedValue& b) {
  const double s = std::hypot(a.se, b.se);
  if (s == 0.0) return a.v == b.v ? 0.0 : INFINITY;
  return (a.v - b.v) / s;
}

// Continuous-time speed replicas on independent flips.
inline std::vector<SpeedEstimate> mc_speed_replicas(const ModelParams& m, const SpinFlipParams& p,
                                                    Time horizon, std::size_t replicas, Stream root,
                                                    unsigned threads, double burn_in_fraction = kDefaultBurnInFraction,
                                                    std::size_t batches = kDefaultBatches) {
  return map_replicas(replicas, threads, [&](std::size_t r) {
    const Stream rs = root.split(r);
    LazyEnvironment env(p, rs.split(tags::environment));
    return simulate_speed(env, m, horizon, rs, burn_in_fraction, batches);
  });
}

// Regeneration statistics of Z on the jump-chain environment.
inline std::vector<regen::RegenStats> regen_replicas(const ModelParams& m, const SpinFlipParams& p, int L,
                                                     std::size_t steps, std::size_t replicas, Stream root,
                                                     unsigned threads) {
  return map_replicas(replicas, threads, [&](std::size_t r) {
    const Stream rs = root.split(r);
    LazyEnvironment env(p, rs.split(tags::environment));
    JumpChainTimes<LazyEnvironment> chain(env, m.total_rate(), rs.split(tags::jump_clock));
    const regen::ZRun run = regen::simulate_Z(chain, m.p(), L, steps, rs);
    return regen::regen_stats(run, L, m.p());
  });
}

inline CompareReport compare_speeds(const ExperimentConfig& c) {
  const SpinFlipSystem sys = make_system(c.system);
  const auto& ind = sys.rates.independent_params();
  if (!ind) throw ConfigError("compare: needs an independent-flip system");
  const ModelParams m = make_model(c);
  CompareReport rep;
  rep.expansion = expansion::predict_speed(m, sys, 3, {std::nullopt, c.c2, c.c2_tol});
  if (!rep.expansion.valid && !c.force)
    throw ConfigError("compare: drift " + std::to_string(m.drift()) +
                      " is outside the series domain alpha - beta < (eps - M)/2 = " +
                      std::to_string(0.5 * rep.expansion.c) + " (use --force to run anyway)");
  rep.threshold = c.z_threshold;
  rep.replicas = c.replicas;
  const Stream root = Stream::from_seed(c.seed);

  const auto mc = mc_speed_replicas(m, *ind, c.horizon, c.replicas, root.split(tags::mc_direct), c.threads,
                                    c.burn_in_fraction, c.batches);
  const SpeedEstimate mc_all = combine_replicas(mc);
  rep.mc = {mc_all.v, mc_all.se};
  rep.drift_identity = expansion::env_drift_identity_check(mc, m.drift());

  rep.steps_per_replica = static_cast<std::size_t>(std::llround(m.total_rate() * c.horizon));
  const auto rs = regen_replicas(m, *ind, c.L, rep.steps_per_replica, c.replicas, root.split(tags::regen),
                                 c.threads);
  const regen::RegenSpeed rv = regen::regen_speed(rs);
  rep.regen = {m.total_rate() * rv.v, m.total_rate() * rv.se};
  rep.regen_increments = rv.increments;

  rep.series = {rep.expansion.v_pred, 0.0};
  rep.z_mc_regen = z_score(rep.mc, rep.regen);
  rep.z_mc_series = z_score(rep.mc, rep.series);
  rep.z_regen_series = z_score(rep.regen, rep.series);
  rep.pass = std::abs(rep.z_mc_regen) <= rep.threshold && std::abs(rep.z_mc_series) <= rep.threshold &&
             std::abs(rep.z_regen_series) <= rep.threshold;
  return rep;
}

}  // namespace rwdre::harness
