// Acceptance suite: each criterion is one experiment config checked into the
// repo; this driver runs a criterion, prints one PASS/FAIL line per pinned
// metric, and exits nonzero when a criterion fails.

#include <cstdio>
#include <cstring>
#include <string>

#include "glasslab/runner.hpp"

namespace {

struct Criterion {
  int number;
  const char* config;
  const char* summary;
};

const Criterion kCriteria[] = {
    {1, "criterion01.json", "cascade pair wedge law matches the zeta increments"},
    {2, "criterion02.json", "bottom-level weight ratios: tilted PD law and parent independence"},
    {3, "criterion03.json", "identity defect panel near zero on cascades, control flagged"},
    {4, "criterion04.json", "tilt algebra residuals at working and stress magnitudes"},
    {5, "criterion05.json", "reweighting identity two-sided agreement on a one-level tree"},
    {6, "criterion06.json", "pure-state spins independent of cluster weights, plant caught"},
    {7, "criterion07.json", "exchangeability p-values uniform, coordinate plant rejected"},
    {8, "criterion08.json", "free-energy sandwich and concentration growth exponent"},
    {9, "criterion09.json", "metropolis matches exact enumeration frequencies"},
    {10, "criterion10.json", "ultrametric matrices and configuration round trip"},
};

int run_criterion(const Criterion& c) {
  std::string path = std::string(GLASSLAB_CONFIG_DIR) + "/" + c.config;
  glasslab::RunReport report;
  try {
    report = glasslab::run_experiment_file(path);
  } catch (const std::exception& e) {
    std::printf("[FAIL] criterion %d: %s -- error: %s\n", c.number, c.summary, e.what());
    return 1;
  }
  for (const auto& m : report.metrics) {
    std::printf("  [%s] %-42s estimate=%.6g se=%.3g tol=%.6g (%s)\n",
                m.pass ? "ok" : "FAIL", m.name.c_str(), m.estimate, m.se, m.tolerance,
                m.tolerance_kind.c_str());
  }
  bool pass = report.all_passed();
  std::printf("[%s] criterion %d: %s (%.1fs)\n", pass ? "PASS" : "FAIL", c.number, c.summary,
              report.wall_seconds);
  std::fflush(stdout);
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  int failures = 0;
  if (argc > 1) {
    int wanted = std::atoi(argv[1]);
    for (const Criterion& c : kCriteria) {
      if (c.number == wanted) return run_criterion(c);
    }
    std::fprintf(stderr, "unknown criterion %s\n", argv[1]);
    return 2;
  }
  for (const Criterion& c : kCriteria) failures += run_criterion(c);
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures;
}
