#include <cstdlib>
#include <iostream>
#include <string>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "bornholo/commands.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kRuntime = 2 };

void apply_environment(int& threads) {
  if (const char* t = std::getenv("BORN_HOLO_THREADS"); t && threads <= 0) threads = std::atoi(t);
  spdlog::set_level(spdlog::level::info);
  if (const char* lvl = std::getenv("BORN_HOLO_LOG_LEVEL"))
    spdlog::set_level(spdlog::level::from_str(lvl));
}

} // namespace

int main(int argc, char** argv) {
  using namespace bornholo;

  CLI::App app{"Multiple-scattering holographic simulation and 3D reconstruction"};
  app.require_subcommand(1);
  std::string config_path, out_dir;
  unsigned long long seed = 0;
  int threads = 0;

  const struct {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&);
  } commands[] = {
      {"simulate", "Generate a phantom and its multiply scattered hologram", cli::cmd_simulate},
      {"reconstruct", "Invert a hologram into a 3D scattering-potential volume", cli::cmd_reconstruct},
      {"analyze", "Count particles and score a volume against ground truth", cli::cmd_analyze},
      {"compare", "Run a density/contrast/order sweep and tabulate the results", cli::cmd_compare},
  };
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Random seed (overrides seed)");
    sub->add_option("--threads", threads, "Worker threads (default: BORN_HOLO_THREADS or runtime default)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  apply_environment(threads);
  cli::set_threads(threads);

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return kValidation;
  }
  for (CLI::App* sub : app.get_subcommands()) {
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (sub->count("--seed")) cfg.seed = seed;
    for (const auto& c : commands) {
      if (sub->get_name() != c.name) continue;
      try {
        c.run(cfg);
      } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kValidation;
      } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kRuntime;
      }
    }
  }
  return kOk;
}
