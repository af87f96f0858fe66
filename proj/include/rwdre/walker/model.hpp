#pragma once

#include <cmath>

#include "rwdre/core/error.hpp"

namespace rwdre {

// Walker rates: alpha on occupied sites towards the right, beta towards the
// left; swapped on vacant sites. U = alpha + beta is environment-independent.
class ModelParams {
 public:
  ModelParams(double alpha, double beta, bool allow_degenerate = false)
      : alpha_(alpha), beta_(beta) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta))
      throw DomainError("ModelParams: rates must be positive and finite");
    if (!(beta < alpha) && !allow_degenerate)
      throw DomainError("ModelParams: requires 0 < beta < alpha (set the degenerate flag to override)");
  }

  // Parameters with prescribed U = alpha + beta and drift alpha - beta.
  static ModelParams from_rate_and_drift(double total, double drift, bool allow_degenerate = false) {
    return ModelParams(0.5 * (total + drift), 0.5 * (total - drift), allow_degenerate);
  }

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double total_rate() const noexcept { return alpha_ + beta_; }  // U
  double drift() const noexcept { return alpha_ - beta_; }
  double p() const noexcept { return alpha_ / (alpha_ + beta_); }
  double q() const noexcept { return beta_ / (alpha_ + beta_); }
  double r() const noexcept { return 0.5 * q(); }
  // Outside 0 < beta < alpha; accepted only with the degenerate flag.
  bool degenerate() const noexcept { return !(beta_ < alpha_); }

 private:
  double alpha_;
  double beta_;
};

struct StepRates {
  double right;
  double left;
};

constexpr StepRates step_rates(int site_state, double alpha, double beta) noexcept {
  return site_state ? StepRates{alpha, beta} : StepRates{beta, alpha};
}

inline StepRates step_rates(int site_state, const ModelParams& m) noexcept {
  return step_rates(site_state, m.alpha(), m.beta());
}

}  // namespace rwdre
