#pragma once

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rwdre/core/error.hpp"
#include "rwdre/core/parallel.hpp"
#include "rwdre/core/random.hpp"
#include "rwdre/env/lazy_environment.hpp"
#include "rwdre/env/torus.hpp"
#include "rwdre/expansion/green.hpp"
#include "rwdre/expansion/predict.hpp"
#include "rwdre/harness/compare.hpp"
#include "rwdre/harness/config.hpp"
#include "rwdre/harness/output.hpp"
#include "rwdre/mixing/coupling.hpp"
#include "rwdre/mixing/gamma.hpp"
#include "rwdre/mixing/phi.hpp"
#include "rwdre/regen/regeneration.hpp"
#include "rwdre/walker/continuous.hpp"
#include "rwdre/walker/discrete.hpp"

namespace rwdre::harness {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSimulation = 3;
inline constexpr int kExitComparison = 4;

struct RunResult {
  int exit_code = kExitOk;
  nlohmann::json report;
  std::string summary;
};

namespace detail {

using nlohmann::json;

struct Context {
  const ExperimentConfig& cfg;
  std::string hash;
  std::filesystem::path dir;

  CsvWriter csv(const std::string& name, const std::vector<std::string>& cols) const {
    return CsvWriter(dir / name, hash, cfg.seed, cols);
  }
};

inline json speed_json(const SpeedEstimate& s) {
  return {{"v", s.v}, {"se", s.se}, {"batches", s.batches}, {"window_events", s.window_events},
          {"occupation", s.occupation}};
}

inline json expansion_json(const expansion::ExpansionReport& r) {
  json j = {{"order", r.order}, {"U", r.U},       {"rho", r.rho}, {"drift", r.drift},
            {"c1", r.c1},       {"c2", r.c2},     {"c2_error", r.c2_error}, {"c2_method", r.c2_method},
            {"M", r.M},         {"eps", r.eps},   {"c", r.c},     {"valid", r.valid},
            {"v_pred", r.v_pred}};
  j["V"] = r.V ? json(*r.V) : json(nullptr);
  j["c3"] = r.c3 ? json(*r.c3) : json(nullptr);
  return j;
}

inline json system_metadata(const SpinFlipSystem& sys) {
  json j = {{"kind", sys.rates.kind()}, {"range", sys.rates.range()},
            {"independent", sys.is_independent()}, {"reflection_symmetric", sys.rates.reflection_symmetric()},
            {"attractive", sys.rates.attractive()}};
  if (sys.is_independent()) {
    j["equilibrium"] = "exact product Bernoulli(rho) start";
    j["rho"] = sys.rates.independent_params()->rho();
  } else {
    j["equilibrium"] = "product start followed by burn-in; not an exact equilibrium sample";
    j["burn_in_time"] = sys.burn_in_time();
    j["torus_size"] = sys.torus_size;
  }
  return j;
}

struct SimReplica {
  SpeedEstimate speed;
  bool wrapped = false;
  std::vector<std::pair<double, Site>> path;
  std::vector<FlipEvent> events;
};

// Runs fn(env) on a fresh equilibrium environment of the right kind.
template <class Fn>
auto with_environment(const SpinFlipSystem& sys, Stream rs, Fn&& fn) {
  if (const auto& p = sys.rates.independent_params()) {
    LazyEnvironment env(*p, rs.split(tags::environment));
    return fn(env, false);
  }
  const Stream es = rs.split(tags::environment);
  TorusDynamicEnvironment env(equilibrated_torus(sys, es), es.split(tags::environment));
  return fn(env, true);
}

inline json run_simulate(const Context& ctx, std::string& summary) {
  const auto& c = ctx.cfg;
  const SpinFlipSystem sys = make_system(c.system);
  const ModelParams m = make_model(c);
  const Stream root = Stream::from_seed(c.seed).split(tags::mc_direct);
  json res = {{"system", system_metadata(sys)}, {"time_model", c.time_model},
              {"degenerate_params", m.degenerate()}};

  auto reps = map_replicas(c.replicas, c.threads, [&](std::size_t r) {
    const Stream rs = root.split(r);
    return with_environment(sys, rs, [&](auto& env, bool torus) {
      SimReplica out;
      if constexpr (std::is_same_v<std::decay_t<decltype(env)>, TorusDynamicEnvironment>) {
        if (r == 0 && c.export_events) env.record_events(&out.events, c.path_rows);
      }
      if (c.time_model == "continuous") {
        SpeedAccumulator acc(c.horizon, c.burn_in_fraction, c.batches);
        run_walker(env, m, c.horizon, rs, [&](Time t, Site from, Site to, int s) {
          acc(t, from, to, s);
          if (r == 0 && out.path.size() < c.path_rows) out.path.push_back({t, to});
        });
        out.speed = acc.finish();
      } else {
        DiscretePath path;
        if (c.time_model == "integer") {
          path = simulate_dt(IntegerTimes<std::decay_t<decltype(env)>>(env), m.p(), c.steps, rs);
        } else {
          path = simulate_dt(JumpChainTimes<std::decay_t<decltype(env)>>(env, m.total_rate(), rs.split(tags::jump_clock)),
                             m.p(), c.steps, rs);
        }
        out.speed = speed_estimate(path, c.burn_in_fraction, c.batches);
        if (r == 0)
          for (std::size_t n = 1; n < path.positions.size() && out.path.size() < c.path_rows; ++n)
            out.path.push_back({static_cast<double>(n), path.positions[n]});
      }
      if constexpr (std::is_same_v<std::decay_t<decltype(env)>, TorusDynamicEnvironment>) out.wrapped = env.wrapped();
      (void)torus;
      return out;
    });
  });

  std::vector<SpeedEstimate> speeds;
  bool wrapped = false;
  for (const auto& r : reps) {
    speeds.push_back(r.speed);
    wrapped = wrapped || r.wrapped;
  }
  const SpeedEstimate all = combine_replicas(speeds);
  res["speed"] = speed_json(all);
  res["replicas"] = c.replicas;
  res["torus_wrapped"] = wrapped;
  if (c.time_model == "jump_chain") res["speed_continuous"] = {{"v", m.total_rate() * all.v}, {"se", m.total_rate() * all.se}};
  if (c.time_model == "continuous") {
    const auto di = expansion::env_drift_identity_check(speeds, m.drift());
    res["drift_identity"] = {{"rho_tilde", di.rho_tilde}, {"rho_tilde_se", di.rho_tilde_se},
                             {"residual", di.residual},   {"residual_se", di.residual_se}};
  }

  auto path = ctx.csv("path.csv", {"replica", c.time_model == "continuous" ? "time" : "n", "position"});
  path.row(0, 0.0, Site{0});
  for (const auto& [t, x] : reps.front().path) path.row(0, t, x);
  if (!reps.front().events.empty()) {
    auto ev = ctx.csv("events.csv", {"replica", "time", "site", "new_state"});
    for (const auto& e : reps.front().events) ev.row(0, e.time, e.site, static_cast<int>(e.new_state));
  }
  std::ostringstream s;
  s << "simulate: v = " << fmt(all.v) << " +/- " << fmt(all.se) << " (" << c.replicas << " replicas)"
    << (wrapped ? " [torus wrapped]" : "");
  summary = s.str();
  return res;
}

inline json run_regen(const Context& ctx, std::string& summary) {
  const auto& c = ctx.cfg;
  const SpinFlipSystem sys = make_system(c.system);
  const ModelParams m = make_model(c);
  check_discrete_p(m.p());
  const std::string grid = c.time_model == "integer" ? "integer" : "jump_chain";
  const Stream root = Stream::from_seed(c.seed).split(tags::regen);
  struct Rep {
    regen::RegenStats stats;
    SpeedEstimate direct;
    regen::EpsSeq eps_head;
    regen::EpsSeq eps;
    bool wrapped = false;
  };
  auto reps = map_replicas(c.replicas, c.threads, [&](std::size_t r) {
    const Stream rs = root.split(r);
    return with_environment(sys, rs, [&](auto& env, bool) {
      using Env = std::decay_t<decltype(env)>;
      regen::ZRun run = grid == "integer"
                            ? regen::simulate_Z(IntegerTimes<Env>(env), m.p(), c.L, c.steps, rs)
                            : regen::simulate_Z(JumpChainTimes<Env>(env, m.total_rate(), rs.split(tags::jump_clock)),
                                                m.p(), c.L, c.steps, rs);
      Rep out;
      out.stats = regen::regen_stats(run, c.L, m.p());
      DiscretePath dp;
      dp.positions.clear();
      for (const auto& h : run.path) dp.positions.push_back(h.x);
      dp.consumed = run.consumed;
      out.direct = speed_estimate(dp, c.burn_in_fraction, c.batches);
      if (r == 0) out.eps_head.assign(run.eps.begin(), run.eps.begin() + static_cast<std::ptrdiff_t>(std::min(c.eps_rows, run.eps.size())));
      // Enough of the sequence for the geometric-I and tau_1 checks.
      const std::size_t keep = std::min(run.eps.size(), static_cast<std::size_t>(c.L) * 4096);
      out.eps.assign(run.eps.begin(), run.eps.begin() + static_cast<std::ptrdiff_t>(keep));
      if constexpr (std::is_same_v<Env, TorusDynamicEnvironment>) out.wrapped = env.wrapped();
      return out;
    });
  });
  std::vector<regen::RegenStats> stats;
  std::vector<SpeedEstimate> direct;
  std::vector<double> T;
  std::vector<regen::EpsSeq> eps;
  bool wrapped = false;
  for (auto& r : reps) {
    stats.push_back(r.stats);
    direct.push_back(r.direct);
    T.insert(T.end(), r.stats.T.begin(), r.stats.T.end());
    eps.push_back(std::move(r.eps));
    wrapped = wrapped || r.wrapped;
  }
  const regen::RegenSpeed rv = regen::regen_speed(stats);
  const SpeedEstimate dv = combine_replicas(direct);
  const double rL = std::pow(m.r(), c.L);
  json res = {{"system", system_metadata(sys)},
              {"time_grid", grid},
              {"p", m.p()},
              {"r", m.r()},
              {"rL", rL},
              {"L", c.L},
              {"regen_speed", {{"v", rv.v}, {"se", rv.se}, {"increments", rv.increments}}},
              {"direct_speed", speed_json(dv)},
              {"torus_wrapped", wrapped}};
  if (grid == "jump_chain") res["regen_speed_continuous"] = {{"v", m.total_rate() * rv.v}, {"se", m.total_rate() * rv.se}};
  if (eps.size() >= regen::kMinGeometricObservations) {
    const auto g = regen::geometric_I_check(eps, c.L, m.p());
    res["geometric_I"] = {{"ks_statistic", g.ks.statistic}, {"ks_p", g.ks.p_value}, {"mean", g.mean_I},
                          {"se", g.se_I}, {"expected_mean", g.expected_mean}, {"observations", g.observations},
                          {"tau1_bound_holds", g.tau_bound_holds}};
  }
  if (!T.empty()) {
    const double a = 0.5 * regen::moment_cap(rL, c.L);
    const auto mc = regen::moment_bound_check(T, rL, c.L, a);
    res["moment_check"] = {{"a", a}, {"empirical", mc.empirical}, {"se", mc.se}, {"bound", mc.bound}, {"pass", mc.pass}};
  }
  auto csv = ctx.csv("eps.csv", {"replica", "n", "eps"});
  for (std::size_t n = 0; n < reps.front().eps_head.size(); ++n)
    csv.row(0, n + 1, static_cast<int>(reps.front().eps_head[n]));
  std::ostringstream s;
  s << "regen: v* = " << fmt(rv.v) << " +/- " << fmt(rv.se) << " from " << rv.increments << " increments";
  summary = s.str();
  return res;
}

inline json run_expand(const Context& ctx, std::string& summary) {
  const auto& c = ctx.cfg;
  const SpinFlipSystem sys = make_system(c.system);
  const ModelParams m = make_model(c);
  const auto rep = expansion::predict_speed(m, sys, c.order, {c.rho, c.c2, c.c2_tol});
  if (!rep.valid && !c.force)
    throw ConfigError("expand: drift " + fmt(rep.drift) + " is outside the series domain alpha - beta < (eps - M)/2 = " +
                      fmt(0.5 * rep.c) + " (use --force to report anyway)");
  json res = {{"system", system_metadata(sys)}, {"expansion", expansion_json(rep)}};
  if (rep.V) {
    const expansion::GreenParams gp(rep.U, *rep.V);
    json g = json::array();
    for (long long y = 0; y <= 5; ++y) g.push_back(expansion::green_closed(gp, y));
    res["green"] = g;
    res["f_UV"] = expansion::f_UV(gp);
  }
  auto csv = ctx.csv("coefficients.csv", {"U", "V", "rho", "c1", "c2", "c3", "valid"});
  csv.row(rep.U, rep.V ? fmt(*rep.V) : std::string(), rep.rho, rep.c1, rep.c2,
          rep.c3 ? fmt(*rep.c3) : std::string(), rep.valid);
  std::ostringstream s;
  s << "expand: v_pred = " << fmt(rep.v_pred) << " (c1 " << fmt(rep.c1) << ", c2 " << fmt(rep.c2);
  if (rep.c3) s << ", c3 " << fmt(*rep.c3);
  s << ")" << (rep.valid ? "" : " [outside series domain]");
  summary = s.str();
  return res;
}

inline json run_mix(const Context& ctx, std::string& summary) {
  const auto& c = ctx.cfg;
  const SpinFlipSystem sys = make_system(c.system);
  const MixingConstants mc = mixing_constants(sys.rates);
  const mixing::GammaMatrix gm = mixing::gamma_matrix(sys.rates);
  json res = {{"system", system_metadata(sys)},
              {"M", mc.M},
              {"eps", mc.eps},
              {"c", mc.c()},
              {"gamma_M", gm.M},
              {"phi_label", mixing::PhiEstimate::kLabel}};
  auto g = ctx.csv("gamma.csv", {"u", "v", "gamma"});
  for (int v = -gm.range; v <= gm.range; ++v) g.row(0, v, gm.at(0, v));
  auto phi = ctx.csv("phi.csv", {"t", "phi", "ci_lo", "ci_hi"});
  json curve = json::array();
  for (std::size_t k = 0; k < c.tips.size(); ++k) {
    const mixing::ConeSpec cone{c.theta, c.tips[k]};
    const auto est = mixing::phi_estimate(sys, cone, mixing::single_site_family(cone, c.reach), c.replicas,
                                          Stream::from_seed(c.seed).split(tags::mc_direct, k).key(), c.threads);
    phi.row(cone.t, est.phi, est.ci.lo, est.ci.hi);
    curve.push_back({{"t", cone.t}, {"phi", est.phi}, {"ci_lo", est.ci.lo}, {"ci_hi", est.ci.hi}});
  }
  res["phi"] = curve;
  std::ostringstream s;
  s << "mix: M = " << fmt(mc.M) << ", eps = " << fmt(mc.eps) << ", c = " << fmt(mc.c());
  summary = s.str();
  return res;
}

inline json run_couple(const Context& ctx, std::string& summary) {
  const auto& c = ctx.cfg;
  const SpinFlipSystem sys = make_system(c.system);
  const Time H = c.couple_horizon ? *c.couple_horizon : mixing::default_coupling_horizon(sys.rates);
  const auto runs = mixing::extreme_pair_ensemble(sys, H, c.replicas, c.seed, c.threads);
  const auto d = mixing::decay_estimate(runs, sys.rates, c.grid);
  std::size_t violations = 0;
  for (const auto& r : runs) violations += r.ordering_violations;
  json res = {{"system", system_metadata(sys)},
              {"horizon", H},
              {"rate", d.rate},
              {"rate_se", d.rate_se},
              {"integral", d.integral},
              {"tail_flag", d.tail_flag},
              {"within_bound", d.within_bound},
              {"c", d.c},
              {"ordering_violations", violations},
              {"start_pair", "[0],[1]"}};
  if (!sys.rates.attractive())
    res["caveat"] = "rates are not attractive: the ([0],[1]) curve is not the supremum over initial pairs";
  auto csv = ctx.csv("decay.csv", {"t", "rho_hat", "ci_lo", "ci_hi", "bound"});
  for (const auto& p : d.curve) csv.row(p.t, p.rho_hat, p.ci.lo, p.ci.hi, p.bound);
  std::ostringstream s;
  s << "couple: decay rate = " << fmt(d.rate) << " +/- " << fmt(d.rate_se) << " (bound rate " << fmt(d.c) << ")"
    << (d.tail_flag ? " [tail flag]" : "");
  summary = s.str();
  return res;
}

inline json run_compare(const Context& ctx, std::string& summary, bool& pass) {
  const auto rep = compare_speeds(ctx.cfg);
  pass = rep.pass;
  auto sv = [](const SpeedValue& v) { return json{{"v", v.v}, {"se", v.se}}; };
  json res = {{"v_mc", sv(rep.mc)},
              {"v_regen", sv(rep.regen)},
              {"v_series", sv(rep.series)},
              {"z", {{"mc_regen", rep.z_mc_regen}, {"mc_series", rep.z_mc_series}, {"regen_series", rep.z_regen_series}}},
              {"threshold", rep.threshold},
              {"pass", rep.pass},
              {"regen_increments", rep.regen_increments},
              {"steps_per_replica", rep.steps_per_replica},
              {"expansion", expansion_json(rep.expansion)},
              {"drift_identity", {{"rho_tilde", rep.drift_identity.rho_tilde},
                                  {"residual", rep.drift_identity.residual},
                                  {"residual_se", rep.drift_identity.residual_se}}}};
  std::ostringstream s;
  s << "compare: mc " << fmt(rep.mc.v) << " +/- " << fmt(rep.mc.se) << ", regen " << fmt(rep.regen.v) << " +/- "
    << fmt(rep.regen.se) << ", series " << fmt(rep.series.v) << " -> " << (rep.pass ? "PASS" : "FAIL");
  summary = s.str();
  return res;
}

}  // namespace detail

// Validates, runs the configured mode and writes report.json plus CSVs into
// cfg.out. Errors propagate as exceptions; run_main maps them to exit codes.
inline RunResult run(const ExperimentConfig& cfg) {
  validate(cfg);
  detail::Context ctx{cfg, config_hash(cfg), cfg.out};
  std::error_code ec;
  std::filesystem::create_directories(ctx.dir, ec);
  if (ec) throw ResourceError("cannot create output directory '" + cfg.out + "': " + ec.message());
  RunResult rr;
  bool pass = true;
  nlohmann::json results;
  if (cfg.mode == "simulate") results = detail::run_simulate(ctx, rr.summary);
  else if (cfg.mode == "regen") results = detail::run_regen(ctx, rr.summary);
  else if (cfg.mode == "expand") results = detail::run_expand(ctx, rr.summary);
  else if (cfg.mode == "mix") results = detail::run_mix(ctx, rr.summary);
  else if (cfg.mode == "couple") results = detail::run_couple(ctx, rr.summary);
  else results = detail::run_compare(ctx, rr.summary, pass);
  rr.report = {{"mode", cfg.mode}, {"config_hash", ctx.hash}, {"seed", cfg.seed},
               {"config", to_json(cfg)}, {"results", results}};
  write_json(ctx.dir / "report.json", rr.report);
  rr.exit_code = pass ? kExitOk : kExitComparison;
  return rr;
}

inline int run_main(const ExperimentConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const RunResult rr = run(cfg);
    out << rr.summary << '\n';
    return rr.exit_code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "invalid parameters: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "simulation error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSimulation;
  }
}

}  // namespace rwdre::harness
