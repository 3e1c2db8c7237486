#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "svderiv/graphical_derivative.hpp"
#include "svderiv/lipschitz_analysis.hpp"
#include "svderiv/map_config.hpp"

namespace svderiv {

inline constexpr const char* kVersion = "svderiv 0.1.0";

/// Everything a run depends on. The map is kept as its JSON description so
/// the report can echo it verbatim.
struct ExperimentConfig {
  std::string experiment;
  nlohmann::json map;
  RegionSpec region;
  LimitSchedule schedule;
  double tol = kDefaultMembershipTol;
  std::uint64_t seed = 0;
  int points = 20;
  /// Explicit base points; when nonempty they replace the sampled ones.
  std::vector<Vec> xbar;
  int budget = 8;
  int trials = 24;
  std::vector<std::string> suites;
  double k = 1.0;
  int directions = 64;
};

inline const std::vector<std::string>& known_experiments() {
  static const std::vector<std::string> names{"derivative", "montecarlo", "counterexample", "verify"};
  return names;
}

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> names{"witness", "calmness", "compatibility", "iso-vs-lip"};
  return names;
}

/// Reads a config document (schema in README.md). Unknown keys, unknown
/// suites and ill-typed values raise ConfigError. The map is built once here
/// so that a malformed map is also a configuration error.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::string& experiment);

/// Range and consistency checks against the built map; throws ConfigError.
void validate(const ExperimentConfig& config, const SetValuedMap& map);

nlohmann::json config_to_json(const ExperimentConfig& config);

/// Rows are JSON objects keyed by column name, kept in point order.
struct RunReport {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<nlohmann::json> records;
  nlohmann::json counters = nlohmann::json::object();
  nlohmann::json config;
  bool pass = true;
};

/// Classifies each (xbar, ybar): every generator value of a Generated map,
/// f(xbar) for a Singleton map, Y(xbar, p) for one seeded p otherwise.
/// Verdicts are data, so the report always passes.
RunReport run_derivative(const ExperimentConfig& config);

/// `points` base points uniform in the region, one seeded ybar each; passes
/// when no point is classified NotDifferentiable. Generated and Singleton
/// maps only.
RunReport run_montecarlo(const ExperimentConfig& config);

/// Exposed-point ratios of the truncated-epigraph map for tau = 1e-1..1e-4
/// next to Hausdorff ratios of the map itself. Ignores config.map.
RunReport run_counterexample(const ExperimentConfig& config);

/// Runs config.suites, one row per check.
RunReport run_verify(const ExperimentConfig& config);

/// Dispatches on config.experiment.
RunReport run_experiment(const ExperimentConfig& config);

/// '#' comment line listing the columns, the header row, then one row per
/// record followed by the schedule and tolerance.
std::string report_csv(const RunReport& report, const ExperimentConfig& config);
std::string report_json(const RunReport& report);

/// Writes to a sibling temporary file and renames it over path.
void write_atomically(const std::filesystem::path& path, const std::string& content);

/// Writes <dir>/<experiment>.csv and <dir>/<experiment>.json, creating dir.
void write_report(const RunReport& report, const ExperimentConfig& config, const std::filesystem::path& dir);

/// SVDERIV_THREADS when set to a positive integer, else the hardware count.
int thread_count();

}  // namespace svderiv
