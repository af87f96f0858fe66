#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rwdre/core/stats.hpp"
#include "rwdre/env/correlation.hpp"
#include "rwdre/env/lazy_environment.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/env/torus.hpp"

using namespace rwdre;

namespace {

double binom_se(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

// Glauber rate evaluated straight from its definition.
double glauber_rate(double J, int left, int own, int right) {
  auto s = [](int v) { return 2.0 * v - 1.0; };
  return std::exp(-J * s(own) * (s(left) + s(right)));
}

}  // namespace

TEST(SpinFlipParams, DensityAndRate) {
  EXPECT_DOUBLE_EQ(SpinFlipParams(0.5, 0.5).rho(), 0.5);
  EXPECT_NEAR(SpinFlipParams(0.7, 0.3).rho(), 0.7, 1e-15);
  EXPECT_DOUBLE_EQ(SpinFlipParams(0.7, 0.3).total_rate(), 1.0);
  EXPECT_THROW(SpinFlipParams(0.0, 1.0), DomainError);
  EXPECT_THROW(SpinFlipParams(1.0, -1.0), DomainError);
}

TEST(SampleEquilibrium, DensityWithinThreeSe) {
  const SpinFlipParams p(0.999, 0.001);
  const auto c = sample_equilibrium(p, {0, 99999}, 17);
  double mean = 0;
  for (auto v : c) mean += v;
  mean /= static_cast<double>(c.size());
  EXPECT_NEAR(mean, p.rho(), 3.0 * binom_se(p.rho(), c.size()));
}

TEST(SampleEquilibrium, ReproducibleAndOverlapConsistent) {
  const SpinFlipParams p(0.7, 0.3);
  EXPECT_EQ(sample_equilibrium(p, {-50, 50}, 3), sample_equilibrium(p, {-50, 50}, 3));
  const auto wide = sample_equilibrium(p, {-50, 50}, 3);
  const auto narrow = sample_equilibrium(p, {0, 10}, 3);
  for (std::size_t i = 0; i <= 10; ++i) EXPECT_EQ(narrow[i], wide[i + 50]);
  EXPECT_THROW(sample_equilibrium(p, {1, 0}, 3), DomainError);
}

TEST(TransitionProb, ClosedFormValues) {
  const SpinFlipParams p(0.5, 0.5);
  EXPECT_DOUBLE_EQ(transition_prob_one(p, 0.0), 1.0);
  EXPECT_NEAR(transition_prob_one(p, 1.0), 0.5 + 0.5 * std::exp(-1.0), 1e-15);
  EXPECT_NEAR(transition_prob_one(p, 1.0), 0.6839397, 1e-7);
  EXPECT_NEAR(transition_prob_one(p, 1e3), p.rho(), 1e-15);
  const SpinFlipParams q(0.7, 0.3);
  EXPECT_NEAR(transition_prob(q, 0, 1, 2.0), 0.7 * (1.0 - std::exp(-2.0)), 1e-15);
}

TEST(LazyEnvironment, RepeatedQueriesAgree) {
  LazyEnvironment env(SpinFlipParams(0.7, 0.3), Stream::from_seed(5));
  std::vector<int> first;
  for (int x = -20; x <= 20; ++x)
    for (double t : {0.0, 0.3, 2.5, 1.1}) first.push_back(env.state(x, t));
  std::size_t k = 0;
  for (int x = -20; x <= 20; ++x)
    for (double t : {0.0, 0.3, 2.5, 1.1}) EXPECT_EQ(env.state(x, t), first[k++]);
}

TEST(LazyEnvironment, SameSeedSamePath) {
  LazyEnvironment a(SpinFlipParams(0.7, 0.3), Stream::from_seed(8));
  LazyEnvironment b(SpinFlipParams(0.7, 0.3), Stream::from_seed(8));
  for (int x = -5; x <= 5; ++x)
    for (double t = 0; t < 10; t += 0.37) ASSERT_EQ(a.state(x, t), b.state(x, t));
}

TEST(LazyEnvironment, InitialMarginalIsBernoulliRho) {
  const SpinFlipParams p(0.7, 0.3);
  const std::size_t n = 100000;
  double ones = 0;
  for (std::size_t r = 0; r < n; ++r) {
    LazyEnvironment env(p, Stream::from_seed(1).split(r));
    ones += env.state(0, 0.0);
  }
  EXPECT_NEAR(ones / n, p.rho(), 3.0 * binom_se(p.rho(), n));
}

TEST(LazyEnvironment, ConditionalTransitionMatchesClosedForm) {
  const SpinFlipParams p(0.5, 0.5);
  std::size_t started = 0, stayed = 0;
  for (std::size_t r = 0; r < 100000; ++r) {
    LazyEnvironment env(p, Stream::from_seed(2).split(r));
    if (env.state(0, 0.0) != 1) continue;
    ++started;
    stayed += static_cast<std::size_t>(env.state(0, 1.0));
  }
  const double expect = transition_prob_one(p, 1.0);
  EXPECT_NEAR(static_cast<double>(stayed) / started, expect, 3.0 * binom_se(expect, started));
}

TEST(LazyEnvironment, OutOfOrderQueriesHaveMarkovJointLaw) {
  // Query t = 2 first, then t = 0 (backward) and t = 1 (bridge); the joint
  // law must still be the chain's finite-dimensional law.
  const SpinFlipParams p(0.6, 0.4);
  const std::size_t n = 100000;
  std::size_t all_one = 0;
  for (std::size_t r = 0; r < n; ++r) {
    LazyEnvironment env(p, Stream::from_seed(4).split(r));
    const int s2 = env.state(3, 2.0), s0 = env.state(3, 0.0), s1 = env.state(3, 1.0);
    all_one += static_cast<std::size_t>(s0 && s1 && s2);
  }
  const double expect = p.rho() * transition_prob_one(p, 1.0) * transition_prob_one(p, 1.0);
  EXPECT_NEAR(static_cast<double>(all_one) / n, expect, 3.0 * binom_se(expect, n));
}

TEST(LazyEnvironment, ResourceCapEnforced) {
  LazyEnvironment env(SpinFlipParams(0.5, 0.5), Stream::from_seed(1), 100);
  EXPECT_NO_THROW(env.state(49, 0.0));
  EXPECT_NO_THROW(env.state(-50, 0.0));
  EXPECT_THROW(env.state(50, 0.0), ResourceError);
  EXPECT_THROW(env.state(0, -1.0), DomainError);
}

TEST(LazyEnvironment, StationaryAtEveryTime) {
  const SpinFlipParams p(0.7, 0.3);
  const std::size_t n = 20000;
  for (double t : {0.0, 0.5, 3.0, 10.0}) {
    double ones = 0;
    for (std::size_t r = 0; r < n; ++r) {
      LazyEnvironment env(p, Stream::from_seed(6).split(r));
      ones += env.state(0, t);
    }
    EXPECT_NEAR(ones / n, p.rho(), 3.0 * binom_se(p.rho(), n)) << "t = " << t;
  }
}

TEST(Torus, SizeAndEntryValidation) {
  EXPECT_THROW(TorusEnvironment(std::vector<std::uint8_t>(4, 0), RateFunction::glauber(0.1)), DomainError);
  EXPECT_THROW(TorusEnvironment(std::vector<std::uint8_t>{0, 1, 2}, RateFunction::constant(1.0)), DomainError);
  EXPECT_NO_THROW(TorusEnvironment(std::vector<std::uint8_t>(5, 0), RateFunction::glauber(0.1)));
}

TEST(Gillespie, IndependentFlipsMarginal) {
  const SpinFlipParams p(0.5, 0.5);
  std::size_t started = 0, stayed = 0;
  for (std::size_t r = 0; r < 100000; ++r) {
    Stream s = Stream::from_seed(12).split(r);
    TorusEnvironment env(product_configuration(3, p.rho(), s.split(tags::initial)), RateFunction::independent(p));
    if (env.state(0) != 1) continue;
    ++started;
    Gillespie g(env, s.split(tags::environment));
    g.advance_to(1.0);
    stayed += static_cast<std::size_t>(env.state(0));
  }
  const double expect = transition_prob_one(p, 1.0);
  EXPECT_NEAR(static_cast<double>(stayed) / started, expect, 3.0 * binom_se(expect, started));
}

TEST(Gillespie, ZeroRatesFreezeConfiguration) {
  TorusEnvironment env(product_configuration(32, 0.5, Stream::from_seed(1)), RateFunction::constant(0.0));
  const auto before = env.configuration();
  const auto traj = gillespie_run(env, 100.0, 3);
  EXPECT_TRUE(traj.events.empty());
  EXPECT_EQ(env.configuration(), before);
  Gillespie g(env, Stream::from_seed(2));
  EXPECT_THROW(g.advance_to(INFINITY), SimulationError);
}

TEST(Gillespie, GlauberFlipCountMatchesIntegratedRate) {
  const SpinFlipSystem sys = SpinFlipSystem::glauber(0.1, 256);
  TorusEnvironment env(product_configuration(256, 0.5, Stream::from_seed(4)), sys.rates);
  const auto traj = gillespie_run(env, 50.0, 9);
  const double n = static_cast<double>(traj.events.size());
  // The event count minus its compensator is a martingale with variance E[count].
  EXPECT_NEAR(n, traj.integrated_rate, 3.0 * std::sqrt(traj.integrated_rate));
  const double per_site = n / (256.0 * 50.0);
  EXPECT_GT(per_site, std::exp(-0.2));
  EXPECT_LT(per_site, std::exp(0.2));
}

TEST(Gillespie, SameSeedBitIdenticalTrajectory) {
  const auto rates = RateFunction::glauber(0.3);
  TorusEnvironment a(product_configuration(64, 0.5, Stream::from_seed(1)), rates);
  TorusEnvironment b(product_configuration(64, 0.5, Stream::from_seed(1)), rates);
  const auto ta = gillespie_run(a, 10.0, 77), tb = gillespie_run(b, 10.0, 77);
  ASSERT_EQ(ta.events.size(), tb.events.size());
  for (std::size_t i = 0; i < ta.events.size(); ++i) {
    EXPECT_EQ(ta.events[i].time, tb.events[i].time);
    EXPECT_EQ(ta.events[i].site, tb.events[i].site);
  }
  EXPECT_EQ(a.snapshot(), b.snapshot());
}

TEST(Gillespie, CadlagReadingAtEventTimes) {
  const auto rates = RateFunction::independent(SpinFlipParams(1.0, 1.0));
  TorusEnvironment env(product_configuration(16, 0.5, Stream::from_seed(2)), rates);
  const auto traj = gillespie_run(env, 5.0, 5);
  ASSERT_FALSE(traj.events.empty());
  const auto& e = traj.events.front();
  EXPECT_EQ(traj.at(e.time)[static_cast<std::size_t>(e.site)], e.new_state);
  EXPECT_NE(traj.at(std::nextafter(e.time, 0.0))[static_cast<std::size_t>(e.site)], e.new_state);

  // The forward-reading torus applies an event scheduled exactly at the query time.
  TorusEnvironment env2(traj.initial, rates);
  TorusDynamicEnvironment dyn(std::move(env2), Stream::from_seed(5).split(tags::environment));
  EXPECT_EQ(dyn.state(e.site, e.time), e.new_state);
}

TEST(Gillespie, LazyAndTorusSingleSiteLawsAgree) {
  const SpinFlipParams p(0.6, 0.9);
  const std::size_t n = 10000;
  // Encode the site's path at times 0, 0.5, 1, 1.5 as an integer 0..15.
  std::vector<double> lazy(n), torus(n);
  const double times[] = {0.0, 0.5, 1.0, 1.5};
  for (std::size_t r = 0; r < n; ++r) {
    LazyEnvironment env(p, Stream::from_seed(30).split(r));
    int code = 0;
    for (double t : times) code = 2 * code + env.state(0, t);
    lazy[r] = code;
    const Stream s = Stream::from_seed(31).split(r);
    TorusEnvironment te(product_configuration(3, p.rho(), s.split(tags::initial)), RateFunction::independent(p));
    TorusDynamicEnvironment dyn(std::move(te), s.split(tags::environment));
    code = 0;
    for (double t : times) code = 2 * code + dyn.state(0, t);
    torus[r] = code;
  }
  EXPECT_GT(stats::ks_two_sample(lazy, torus).p_value, 0.01);
}

TEST(Torus, WrapFlagNearAntipode) {
  const auto rates = RateFunction::glauber(0.1);
  TorusDynamicEnvironment dyn(TorusEnvironment(std::vector<std::uint8_t>(20, 0), rates), Stream::from_seed(1));
  dyn.state(5, 0.0);
  EXPECT_FALSE(dyn.wrapped());
  dyn.state(9, 0.1);
  EXPECT_TRUE(dyn.wrapped());
  EXPECT_THROW(dyn.state(0, 0.05), DomainError);
}

TEST(Correlation, IndependentClosedFormAndMonteCarlo) {
  const SpinFlipParams p(0.7, 0.3);
  const auto sys = SpinFlipSystem::independent(p);
  EXPECT_NEAR(independent_correlation(p, 0, 0.0), p.rho(), 1e-15);
  for (auto [i, t] : {std::pair<Site, double>{0, 0.5}, {1, 0.5}, {0, 2.0}, {-2, 1.0}}) {
    const auto est = correlation_K(sys, i, t, 40000, 100 + static_cast<std::uint64_t>(i + 10));
    EXPECT_NEAR(est.value, independent_correlation(p, i, t), 3.0 * est.se) << i << " " << t;
  }
  const auto k0 = correlation_K(sys, 0, 0.0, 1000, 3);
  EXPECT_EQ(k0.value, correlation_K(sys, 0, 0.0, 1000, 3).value);
}

TEST(Correlation, GlauberReflectionSymmetry) {
  const auto sys = SpinFlipSystem::glauber(0.3, 128);
  const auto kp = correlation_K(sys, 1, 0.5, 100, 41);
  const auto km = correlation_K(sys, -1, 0.5, 100, 43);
  EXPECT_NEAR(kp.value, km.value, 3.0 * std::hypot(kp.se, km.se));
}

TEST(MixingConstants, IndependentAndConstantRates) {
  const SpinFlipParams p(0.7, 0.3);
  const auto mc = mixing_constants(RateFunction::independent(p));
  EXPECT_EQ(mc.M, 0.0);
  EXPECT_EQ(mc.eps, p.gamma() + p.delta());
  const auto cc = mixing_constants(RateFunction::constant(1.5));
  EXPECT_EQ(cc.M, 0.0);
  EXPECT_EQ(cc.eps, 3.0);
  EXPECT_EQ(cc.c(), 3.0);
}

TEST(MixingConstants, GlauberMatchesDirectScan) {
  const double J = 0.4;
  double M = 0.0, eps = INFINITY;
  // Neighbour at offset -1 and offset +1.
  for (int side = 0; side < 2; ++side) {
    double sup = 0.0;
    for (int l = 0; l < 2; ++l)
      for (int o = 0; o < 2; ++o)
        for (int r = 0; r < 2; ++r) {
          const double a = glauber_rate(J, l, o, r);
          const double b = side == 0 ? glauber_rate(J, 1 - l, o, r) : glauber_rate(J, l, o, 1 - r);
          sup = std::max(sup, std::abs(a - b));
        }
    M += sup;
  }
  for (int l = 0; l < 2; ++l)
    for (int o = 0; o < 2; ++o)
      for (int r = 0; r < 2; ++r) eps = std::min(eps, glauber_rate(J, l, o, r) + glauber_rate(J, l, 1 - o, r));
  const auto mc = mixing_constants(RateFunction::glauber(J));
  EXPECT_NEAR(mc.M, M, 1e-14);
  EXPECT_NEAR(mc.eps, eps, 1e-14);
}

TEST(MixingConstants, RandomTablesMatchPairScan) {
  Stream s = Stream::from_seed(21);
  for (int R = 0; R <= 3; ++R) {
    const std::size_t n = std::size_t{1} << (2 * R + 1);
    std::vector<double> table(n);
    for (auto& v : table) v = 3.0 * s.uniform();
    const auto rates = RateFunction::from_table(R, table);
    // Double loop over all window pairs, keeping those that differ in one site.
    std::vector<double> sup(static_cast<std::size_t>(2 * R + 1), 0.0);
    double eps = INFINITY;
    for (std::uint32_t a = 0; a < n; ++a)
      for (std::uint32_t b = 0; b < n; ++b) {
        const std::uint32_t d = a ^ b;
        if (std::popcount(d) != 1) continue;
        const int j = std::countr_zero(d);
        sup[static_cast<std::size_t>(j)] = std::max(sup[static_cast<std::size_t>(j)], std::abs(table[a] - table[b]));
        if (j == R) eps = std::min(eps, table[a] + table[b]);
      }
    double M = 0.0;
    for (int j = 0; j <= 2 * R; ++j)
      if (j != R) M += sup[static_cast<std::size_t>(j)];
    const auto mc = mixing_constants(rates);
    EXPECT_NEAR(mc.M, M, 1e-12) << "range " << R;
    EXPECT_EQ(mc.eps, eps) << "range " << R;
  }
}

TEST(MixingConstants, RangeCap) {
  const auto rates = RateFunction::from_function(4, [](std::span<const std::uint8_t>) { return 1.0; });
  EXPECT_THROW(mixing_constants(rates, 3), DomainError);
  EXPECT_NO_THROW(mixing_constants(rates));
}

TEST(RateFunction, GlauberProperties) {
  const auto g = RateFunction::glauber(0.2);
  EXPECT_TRUE(g.reflection_symmetric());
  EXPECT_TRUE(g.attractive());
  EXPECT_FALSE(RateFunction::glauber(-0.2).attractive());
  EXPECT_THROW(RateFunction::from_table(1, {1.0, 2.0}), DomainError);
  EXPECT_THROW(RateFunction::constant(-1.0), DomainError);
}

TEST(SpinFlipSystem, DefaultBurnIn) {
  const auto g = SpinFlipSystem::glauber(0.1);
  EXPECT_NEAR(g.burn_in_time(), 100.0 / mixing_constants(g.rates).c(), 1e-12);
  auto h = g;
  h.burn_in = 5.0;
  EXPECT_EQ(h.burn_in_time(), 5.0);
}
