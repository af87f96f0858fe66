#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>

#include "rwdre/core/error.hpp"
#include "rwdre/core/stats.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/expansion/coefficients.hpp"
#include "rwdre/walker/model.hpp"
#include "rwdre/walker/speed.hpp"

namespace rwdre::expansion {

struct ExpansionReport {
  int order = 1;
  double U = 0.0;
  std::optional<double> V;  // independent flips only
  double rho = 0.0;
  double drift = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double c2_error = 0.0;
  std::string c2_method;  // "quadrature", "symmetry", "supplied", "unused"
  std::optional<double> c3;
  double M = 0.0;
  double eps = 0.0;
  double c = 0.0;
  bool valid = false;  // drift < c / 2
  double v_pred = 0.0;
};

struct PredictOptions {
  std::optional<double> rho;  // equilibrium density, needed for interacting systems
  std::optional<double> c2;   // externally estimated c2 (e.g. Monte Carlo)
  double tol = 1e-8;
};

inline ExpansionReport predict_speed(const ModelParams& params, const SpinFlipSystem& system,
                                     int order, const PredictOptions& opt = {}) {
  if (order < 1 || order > 3) throw DomainError("predict_speed: order must be 1, 2 or 3");
  const auto& ind = system.rates.independent_params();
  if (order == 3 && !ind)
    throw DomainError("predict_speed: order 3 needs independent flips (no closed c3 otherwise)");

  ExpansionReport r;
  r.order = order;
  r.U = params.total_rate();
  r.drift = params.drift();
  const MixingConstants mc = mixing_constants(system.rates);
  r.M = mc.M;
  r.eps = mc.eps;
  r.c = mc.c();
  r.valid = r.drift < 0.5 * r.c;

  if (ind) {
    r.V = ind->total_rate();
    r.rho = ind->rho();
  } else if (opt.rho) {
    check_density(*opt.rho);
    r.rho = *opt.rho;
  } else {
    throw DomainError("predict_speed: interacting system needs a density estimate");
  }
  r.c1 = 2.0 * r.rho - 1.0;

  if (order >= 2) {
    if (opt.c2) {
      r.c2 = *opt.c2;
      r.c2_method = "supplied";
    } else if (ind) {
      const C2Result q = c2_numeric(independent_K(*ind), r.U, opt.tol);
      r.c2 = q.value;
      r.c2_error = q.error;
      r.c2_method = "quadrature";
    } else if (system.rates.reflection_symmetric()) {
      r.c2 = 0.0;
      r.c2_method = "symmetry";
    } else {
      throw DomainError("predict_speed: c2 for a non-symmetric interacting system must be supplied");
    }
  } else {
    r.c2_method = "unused";
  }
  if (order == 3) r.c3 = c3_closed(GreenParams(r.U, *r.V), r.rho);

  const double d = r.drift;
  r.v_pred = r.c1 * d;
  if (order >= 2) r.v_pred += r.c2 * d * d;
  if (order == 3) r.v_pred += *r.c3 * d * d * d;
  return r;
}

struct DriftIdentity {
  double rho_tilde = 0.0;
  double rho_tilde_se = 0.0;
  double v = 0.0;
  double v_se = 0.0;
  double residual = 0.0;  // v - (2 rho_tilde - 1)(alpha - beta)
  double residual_se = 0.0;
  std::size_t replicas = 0;
};

// Checks v = (2 rho~ - 1)(alpha - beta) on independent replicas of the
// continuous-time walk; the residual is formed per replica so its SE carries
// the correlation between the speed and the occupation fraction.
inline DriftIdentity env_drift_identity_check(std::span<const SpeedEstimate> reps, double drift) {
  if (reps.empty()) throw InsufficientData("drift identity: no replicas");
  for (const auto& r : reps)
    if (r.window_events < kMinWindowEvents)
      throw InsufficientData("drift identity: horizon too short for a speed estimate");
  DriftIdentity out;
  out.replicas = reps.size();
  if (reps.size() == 1) {
    const auto& r = reps.front();
    const double n = static_cast<double>(r.window_events);
    out.rho_tilde = r.occupation;
    out.rho_tilde_se = std::sqrt(r.occupation * (1.0 - r.occupation) / n);
    out.v = r.v;
    out.v_se = r.se;
    out.residual = r.v - (2.0 * r.occupation - 1.0) * drift;
    out.residual_se = std::hypot(r.se, 2.0 * drift * out.rho_tilde_se);
    return out;
  }
  stats::RunningStats occ, v, res;
  for (const auto& r : reps) {
    occ.add(r.occupation);
    v.add(r.v);
    res.add(r.v - (2.0 * r.occupation - 1.0) * drift);
  }
  out.rho_tilde = occ.mean();
  out.rho_tilde_se = occ.sem();
  out.v = v.mean();
  out.v_se = v.sem();
  out.residual = res.mean();
  out.residual_se = res.sem();
  return out;
}

}  // namespace rwdre::expansion
