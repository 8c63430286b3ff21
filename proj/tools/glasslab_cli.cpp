// Command line front end: runs one experiment config and writes its report.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "glasslab/runner.hpp"
#include "glasslab/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"glasslab: simulation lab for hierarchical Gibbs structure"};
  app.set_version_flag("--version", std::string(glasslab::kVersion));

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out_dir;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "path to the experiment config")->required();
  std::uint64_t seed_value = 0;
  auto* seed_opt = run->add_option("--seed", seed_value, "override the config seed");
  int workers_value = 0;
  auto* workers_opt =
      run->add_option("--workers", workers_value, "worker threads (0 = hardware)");
  run->add_option("--out", out_dir, "output directory (default: config value or cwd)");

  app.require_subcommand(1);
  CLI11_PARSE(app, argc, argv);

  if (seed_opt->count() > 0) seed = seed_value;
  if (workers_opt->count() > 0) workers = workers_value;

  try {
    glasslab::RunReport report = glasslab::run_experiment_file(config_path, seed, workers);
    if (out_dir.empty()) {
      if (const char* env = std::getenv("GLASSLAB_OUT")) out_dir = env;
    }
    if (out_dir.empty()) {
      if (report.config_echo.contains("out")) {
        out_dir = report.config_echo["out"].get<std::string>();
      } else {
        out_dir = ".";
      }
    }
    glasslab::emit_report(report, out_dir);
    std::cout << report.to_json(true).dump(2) << std::endl;
    return 0;
  } catch (const glasslab::validation_error& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << std::endl;
    return 3;
  }
}
