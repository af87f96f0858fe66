#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "rwdre/harness/run.hpp"

int main(int argc, char** argv) {
  using namespace rwdre::harness;
  CLI::App app{"Random walks in dynamic random environments: simulation, regeneration, expansion"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  bool force = false;

  for (const auto& mode : known_modes()) {
    CLI::App* sub = app.add_subcommand(mode, "run the " + mode + " experiment");
    sub->add_option("--config", config_path, "JSON experiment configuration");
    sub->add_option("--seed", seed, "root seed");
    sub->add_option("--replicas", replicas, "number of independent replicas");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker threads (0 = all cores); never changes results");
    sub->add_flag("--force", force, "run outside the series validity domain");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) cfg = load_config(config_path);
  } catch (const rwdre::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
  cfg.mode = app.get_subcommands().front()->get_name();
  if (seed) cfg.seed = *seed;
  if (replicas) cfg.replicas = *replicas;
  if (out) cfg.out = *out;
  if (threads) cfg.threads = *threads;
  if (force) cfg.force = true;
  return run_main(cfg);
}
