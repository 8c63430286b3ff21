#ifndef GLASSLAB_RUNNER_HPP
#define GLASSLAB_RUNNER_HPP

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glasslab/io.hpp"

namespace glasslab {

// Bad configuration or parameters; the CLI maps this to exit code 2.
struct validation_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricRecord {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  std::uint64_t samples = 0;
  double tolerance = 0.0;
  std::string tolerance_kind;  // how the tolerance was formed
  bool pass = true;
  nlohmann::json extra;

  nlohmann::json to_json() const;
};

struct RunReport {
  std::string experiment;
  std::uint64_t seed = 0;
  int workers = 1;
  nlohmann::json config_echo;
  std::vector<MetricRecord> metrics;
  std::vector<DataTable> tables;
  // Files emitted verbatim (native instance/replica formats).
  std::vector<std::pair<std::string, std::string>> raw_files;
  double wall_seconds = 0.0;

  bool all_passed() const;
  // Deterministic part (excludes wall time) plus, optionally, timing.
  nlohmann::json to_json(bool include_timing) const;
};

// Validates and executes one experiment described by a config document.
RunReport run_experiment(const nlohmann::json& config,
                         std::optional<std::uint64_t> seed_override = std::nullopt,
                         std::optional<int> workers_override = std::nullopt);

RunReport run_experiment_file(const std::string& config_path,
                              std::optional<std::uint64_t> seed_override = std::nullopt,
                              std::optional<int> workers_override = std::nullopt);

// report.json plus one CSV file per table, under out_dir.
void emit_report(const RunReport& report, const std::string& out_dir);

}  // namespace glasslab

#endif
