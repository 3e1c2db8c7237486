#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "svderiv/experiments.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitConfigError = 2;

nlohmann::json load_config(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw svderiv::ConfigError("cannot read config file '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw svderiv::ConfigError("config '" + path + "': " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graphical derivatives of set-valued maps: verification experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> points;
  std::optional<double> tol;

  for (const auto& name : svderiv::known_experiments()) {
    auto* sub = app.add_subcommand(name);
    auto* cfg = sub->add_option("--config", config_path, "experiment config (JSON)");
    if (name != "counterexample") cfg->required();
    sub->add_option("--out", out_dir, "output directory")->required();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--points", points, "override the number of points")->check(CLI::NonNegativeNumber);
    sub->add_option("--tol", tol, "override the membership tolerance")->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  try {
    auto cfg = svderiv::parse_config(load_config(config_path), experiment);
    if (seed) cfg.seed = *seed;
    if (points) cfg.points = *points;
    if (tol) cfg.tol = *tol;
    svderiv::validate(cfg, svderiv::map_from_json(cfg.map));

    const auto report = svderiv::run_experiment(cfg);
    svderiv::write_report(report, cfg, out_dir);
    std::cout << experiment << ": " << report.records.size() << " rows, " << (report.pass ? "pass" : "FAIL")
              << " -> " << out_dir << "\n";
    return report.pass ? kExitPass : kExitPropertyFailure;
  } catch (const svderiv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
}
