#pragma once

#include <openssl/evp.h>

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rwdre/core/error.hpp"
#include "rwdre/env/spin_flip.hpp"
#include "rwdre/walker/model.hpp"

namespace rwdre::harness {

using nlohmann::json;

struct SystemConfig {
  std::string kind = "independent";  // independent | glauber | constant | table
  double gamma = 0.5;
  double delta = 0.5;
  double J = 0.1;
  double lambda = 1.0;
  int range = 0;
  std::vector<double> table;
  std::size_t torus_size = 1024;
  std::optional<double> burn_in;
  double initial_density = 0.5;
};

struct ExperimentConfig {
  std::string mode = "simulate";
  double alpha = 1.1;
  double beta = 0.9;
  bool allow_degenerate = false;
  SystemConfig system;
  double horizon = 1e4;         // continuous time
  std::size_t steps = 100000;   // discrete steps
  std::string time_model = "continuous";  // continuous | integer | jump_chain
  int L = 2;
  std::size_t replicas = 16;
  std::uint64_t seed = 1;
  double burn_in_fraction = 0.1;
  std::size_t batches = 20;
  int order = 3;
  std::optional<double> rho;  // density estimate for interacting systems
  std::optional<double> c2;   // externally supplied c2
  double green_tol = 1e-10;
  double c2_tol = 1e-8;
  double z_threshold = 3.0;
  double theta = 0.7853981633974483;
  std::vector<double> tips{0.0, 1.0, 2.0, 5.0, 10.0};
  int reach = 3;
  std::optional<double> couple_horizon;  // default 20 / (eps - M)
  std::size_t grid = 40;
  std::size_t path_rows = 100000;
  bool export_events = false;
  std::size_t eps_rows = 100000;
  bool force = false;
  // Not part of the experiment's identity: outputs never depend on them.
  std::string out = "out";
  unsigned threads = 1;
};

inline const std::set<std::string>& known_modes() {
  static const std::set<std::string> m{"simulate", "regen", "expand", "mix", "couple", "compare"};
  return m;
}

inline RateFunction make_rates(const SystemConfig& s) {
  if (s.kind == "independent") return RateFunction::independent(SpinFlipParams(s.gamma, s.delta));
  if (s.kind == "glauber") return RateFunction::glauber(s.J);
  if (s.kind == "constant") return RateFunction::constant(s.lambda);
  if (s.kind == "table") return RateFunction::from_table(s.range, s.table);
  throw ConfigError("system.kind must be independent, glauber, constant or table (got '" + s.kind + "')");
}

inline SpinFlipSystem make_system(const SystemConfig& s) {
  SpinFlipSystem sys{make_rates(s), s.torus_size, s.burn_in, s.initial_density};
  return sys;
}

inline ModelParams make_model(const ExperimentConfig& c) {
  if (!(c.beta < c.alpha) && !c.allow_degenerate)
    throw ConfigError("model: walker rates need 0 < beta < alpha (drift towards occupied sites); "
                      "set allow_degenerate to run outside this range");
  try {
    return ModelParams(c.alpha, c.beta, c.allow_degenerate);
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
}

inline void validate(const ExperimentConfig& c) {
  if (!known_modes().count(c.mode)) throw ConfigError("mode '" + c.mode + "' is not one of simulate|regen|expand|mix|couple|compare");
  make_model(c);
  try {
    const SpinFlipSystem sys = make_system(c.system);
    if (c.system.torus_size < static_cast<std::size_t>(2 * sys.rates.range() + 3))
      throw ConfigError("system.torus_size must be at least 2*range+3");
  } catch (const DomainError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  if (c.replicas < 1) throw ConfigError("replicas must be at least 1");
  if (!(c.horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (c.steps < 1) throw ConfigError("steps must be positive");
  if (c.time_model != "continuous" && c.time_model != "integer" && c.time_model != "jump_chain")
    throw ConfigError("time_model must be continuous, integer or jump_chain");
  if (c.L < 2 || c.L % 2) throw ConfigError("L must be even and at least 2");
  if (c.order < 1 || c.order > 3) throw ConfigError("order must be 1, 2 or 3");
  if (!(c.burn_in_fraction >= 0.0 && c.burn_in_fraction < 1.0)) throw ConfigError("burn_in_fraction must be in [0, 1)");
  if (c.batches < 2) throw ConfigError("batches must be at least 2");
  if (!(c.green_tol > 0.0) || !(c.c2_tol > 0.0)) throw ConfigError("tolerances must be positive");
  if (!(c.theta > 0.0 && c.theta < 1.5707963267948966)) throw ConfigError("theta must lie in (0, pi/2)");
  if (c.grid < 3) throw ConfigError("grid must be at least 3");
}

// Experiment identity: every field except out and threads.
inline json to_json(const ExperimentConfig& c) {
  json sys = {{"kind", c.system.kind},     {"gamma", c.system.gamma},
              {"delta", c.system.delta},   {"J", c.system.J},
              {"lambda", c.system.lambda}, {"range", c.system.range},
              {"table", c.system.table},   {"torus_size", c.system.torus_size},
              {"initial_density", c.system.initial_density}};
  sys["burn_in"] = c.system.burn_in ? json(*c.system.burn_in) : json(nullptr);
  json j = {{"mode", c.mode},
            {"model", {{"alpha", c.alpha}, {"beta", c.beta}, {"allow_degenerate", c.allow_degenerate}}},
            {"system", sys},
            {"horizon", c.horizon},
            {"steps", c.steps},
            {"time_model", c.time_model},
            {"L", c.L},
            {"replicas", c.replicas},
            {"seed", c.seed},
            {"burn_in_fraction", c.burn_in_fraction},
            {"batches", c.batches},
            {"order", c.order},
            {"tolerances", {{"green", c.green_tol}, {"c2", c.c2_tol}, {"z", c.z_threshold}}},
            {"mix", {{"theta", c.theta}, {"tips", c.tips}, {"reach", c.reach}}},
            {"couple", {{"grid", c.grid}}},
            {"export", {{"path_rows", c.path_rows}, {"events", c.export_events}, {"eps_rows", c.eps_rows}}},
            {"force", c.force}};
  j["rho"] = c.rho ? json(*c.rho) : json(nullptr);
  j["c2"] = c.c2 ? json(*c.c2) : json(nullptr);
  j["couple"]["horizon"] = c.couple_horizon ? json(*c.couple_horizon) : json(nullptr);
  return j;
}

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  try {
    out = j[key].get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& out, const std::string& where) {
  if (!j.contains(key) || j[key].is_null()) return;
  T v{};
  read(j, key, v, where);
  out = v;
}

}  // namespace detail

inline ExperimentConfig from_json(const json& j, ExperimentConfig c = {}) {
  using detail::read;
  detail::check_keys(j, {"mode", "model", "system", "horizon", "steps", "time_model", "L", "replicas", "seed",
                         "burn_in_fraction", "batches", "order", "rho", "c2", "tolerances", "mix", "couple",
                         "export", "force", "out", "threads"},
                     "config");
  read(j, "mode", c.mode, "config");
  if (j.contains("model")) {
    const json& m = j["model"];
    detail::check_keys(m, {"alpha", "beta", "allow_degenerate"}, "model");
    read(m, "alpha", c.alpha, "model");
    read(m, "beta", c.beta, "model");
    read(m, "allow_degenerate", c.allow_degenerate, "model");
  }
  if (j.contains("system")) {
    const json& s = j["system"];
    detail::check_keys(s, {"kind", "gamma", "delta", "J", "lambda", "range", "table", "torus_size", "burn_in",
                           "initial_density"},
                       "system");
    read(s, "kind", c.system.kind, "system");
    read(s, "gamma", c.system.gamma, "system");
    read(s, "delta", c.system.delta, "system");
    read(s, "J", c.system.J, "system");
    read(s, "lambda", c.system.lambda, "system");
    read(s, "range", c.system.range, "system");
    read(s, "table", c.system.table, "system");
    read(s, "torus_size", c.system.torus_size, "system");
    read(s, "burn_in", c.system.burn_in, "system");
    read(s, "initial_density", c.system.initial_density, "system");
  }
  read(j, "horizon", c.horizon, "config");
  read(j, "steps", c.steps, "config");
  read(j, "time_model", c.time_model, "config");
  read(j, "L", c.L, "config");
  read(j, "replicas", c.replicas, "config");
  read(j, "seed", c.seed, "config");
  read(j, "burn_in_fraction", c.burn_in_fraction, "config");
  read(j, "batches", c.batches, "config");
  read(j, "order", c.order, "config");
  read(j, "rho", c.rho, "config");
  read(j, "c2", c.c2, "config");
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    detail::check_keys(t, {"green", "c2", "z"}, "tolerances");
    read(t, "green", c.green_tol, "tolerances");
    read(t, "c2", c.c2_tol, "tolerances");
    read(t, "z", c.z_threshold, "tolerances");
  }
  if (j.contains("mix")) {
    const json& m = j["mix"];
    detail::check_keys(m, {"theta", "tips", "reach"}, "mix");
    read(m, "theta", c.theta, "mix");
    read(m, "tips", c.tips, "mix");
    read(m, "reach", c.reach, "mix");
  }
  if (j.contains("couple")) {
    const json& m = j["couple"];
    detail::check_keys(m, {"horizon", "grid"}, "couple");
    read(m, "horizon", c.couple_horizon, "couple");
    read(m, "grid", c.grid, "couple");
  }
  if (j.contains("export")) {
    const json& m = j["export"];
    detail::check_keys(m, {"path_rows", "events", "eps_rows"}, "export");
    read(m, "path_rows", c.path_rows, "export");
    read(m, "events", c.export_events, "export");
    read(m, "eps_rows", c.eps_rows, "export");
  }
  read(j, "force", c.force, "config");
  read(j, "out", c.out, "config");
  read(j, "threads", c.threads, "config");
  return c;
}

inline ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in '" + path + "': " + e.what());
  }
  return from_json(j, std::move(base));
}

// Git blob hash (SHA-1 of "blob <size>\0<content>") of the canonical config JSON.
inline std::string config_hash(const ExperimentConfig& c) {
  const std::string body = to_json(c).dump();
  const std::string blob = "blob " + std::to_string(body.size()) + std::string(1, '\0') + body;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1)
    throw Error("config_hash: SHA-1 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

}  // namespace rwdre::harness
