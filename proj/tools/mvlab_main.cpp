#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvlab/config.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_error_json(const std::string& dir, const std::string& command,
                      const std::string& message) {
  try {
    std::ofstream out(dir + "/error.json");
    out << nlohmann::json{{"error", message}, {"command", command}}.dump(2) << "\n";
  } catch (...) {
    // the error itself still goes to stderr
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mvlab - stationary laws, convergence rates and interaction thresholds for "
               "distribution dependent SDEs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  long long seed = -1;
  int threads = 0;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "TOML run configuration")->required();
    cmd->add_option("--output", output_dir, "output directory (overrides the config)");
    cmd->add_option("--seed", seed, "seed override");
    cmd->add_option("--threads", threads, "worker cap; never changes results");
  };

  for (const char* name : {"simulate", "stationary", "converge", "rates", "phase-scan"})
    add_common(app.add_subcommand(name));

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  if (threads == 0) {
    if (const char* env = std::getenv("MVLAB_THREADS")) threads = std::atoi(env);
  }

  std::string dir = ".";
  try {
    mvlab::cli::RunConfig cfg = mvlab::cli::parse_config(slurp(config_path), command);
    if (!output_dir.empty()) {
      cfg.output_dir = output_dir;
      cfg.resolved["output_dir"] = output_dir;
    }
    if (seed >= 0) {
      cfg.seed = static_cast<uint64_t>(seed);
      cfg.sim.seed = cfg.seed;
      cfg.resolved["seed"] = cfg.seed;
      cfg.resolved["sim"]["seed"] = cfg.seed;
    }
    if (threads > 0) {
      cfg.threads = threads;
      cfg.sim.threads = threads;
      cfg.resolved["threads"] = threads;
    }
    dir = cfg.output_dir;
    return mvlab::cli::run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    write_error_json(dir, command, e.what());
    return 1;
  }
}
