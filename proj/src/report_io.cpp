#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <set>
#include <thread>

#include "svderiv/experiments.hpp"

namespace svderiv {

using nlohmann::json;

namespace {

Vec vec_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + ": expected an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

json vec_to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

template <class T>
T read(const json& doc, const char* key, T fallback) {
  if (!doc.contains(key)) return fallback;
  const json& value = doc.at(key);
  if constexpr (std::is_same_v<T, double>) {
    if (!value.is_number()) throw ConfigError(std::string(key) + ": expected a number");
  } else if constexpr (std::is_integral_v<T>) {
    if (!value.is_number_integer()) throw ConfigError(std::string(key) + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (value.is_number_integer() && !value.is_number_unsigned()) {
        throw ConfigError(std::string(key) + ": expected a nonnegative integer");
      }
    }
  }
  return value.get<T>();
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const json& value) {
  if (value.is_null()) return "";
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_number_integer()) return value.dump();
  if (value.is_number()) return format_double(value.get<double>());
  if (value.is_array()) {
    std::string out;
    for (const auto& e : value) {
      if (!out.empty()) out += ' ';
      out += csv_field(e);
    }
    return out;
  }
  std::string s = value.is_string() ? value.get<std::string>() : value.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c == '\n' ? ' ' : c;
  }
  return quoted + '"';
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::string& experiment) {
  if (std::find(known_experiments().begin(), known_experiments().end(), experiment) == known_experiments().end()) {
    throw ConfigError("unknown experiment '" + experiment + "'");
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> keys{"map",    "region", "schedule", "tol", "seed",  "points",
                                          "xbar",   "budget", "trials",   "suites", "k", "directions"};
  for (const auto& [key, value] : doc.items()) {
    if (!keys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  ExperimentConfig cfg;
  cfg.experiment = experiment;

  int d = 1;
  std::optional<SetValuedMap> map;
  if (experiment == "counterexample") {
    cfg.map = json{{"kind", "truncated_epigraph"}};
  } else {
    if (!doc.contains("map")) throw ConfigError("config: missing 'map'");
    cfg.map = doc.at("map");
  }
  try {
    map = map_from_json(cfg.map);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("map: ") + e.what());
  }
  d = map->domain_dim();

  cfg.tol = read(doc, "tol", cfg.tol);
  cfg.seed = read<std::uint64_t>(doc, "seed", cfg.seed);
  cfg.points = read(doc, "points", cfg.points);
  cfg.budget = read(doc, "budget", cfg.budget);
  cfg.trials = read(doc, "trials", cfg.trials);
  cfg.k = read(doc, "k", cfg.k);
  cfg.directions = read(doc, "directions", cfg.directions);

  cfg.region.center = Vec::Zero(d);
  if (doc.contains("region")) {
    const json& r = doc.at("region");
    if (!r.is_object()) throw ConfigError("region: expected an object");
    for (const auto& [key, value] : r.items()) {
      if (key != "center" && key != "radius" && key != "samples") throw ConfigError("region: unknown key '" + key + "'");
    }
    if (r.contains("center")) cfg.region.center = vec_from_json(r.at("center"), "region.center");
    cfg.region.radius = read(r, "radius", cfg.region.radius);
    cfg.region.sample_count = read(r, "samples", cfg.region.sample_count);
  }
  if (cfg.region.center.size() != d) throw ConfigError("region.center: dimension does not match the map");

  if (doc.contains("schedule")) {
    const json& s = doc.at("schedule");
    if (!s.is_object()) throw ConfigError("schedule: expected an object");
    for (const auto& [key, value] : s.items()) {
      if (key != "h0" && key != "gamma" && key != "count") throw ConfigError("schedule: unknown key '" + key + "'");
    }
    cfg.schedule.h0 = read(s, "h0", cfg.schedule.h0);
    cfg.schedule.gamma = read(s, "gamma", cfg.schedule.gamma);
    cfg.schedule.count = read(s, "count", cfg.schedule.count);
  }

  if (doc.contains("xbar")) {
    const json& xs = doc.at("xbar");
    if (!xs.is_array()) throw ConfigError("xbar: expected an array of points");
    for (const auto& x : xs) {
      cfg.xbar.push_back(x.is_number() ? Vec::Constant(1, x.get<double>()) : vec_from_json(x, "xbar"));
      if (cfg.xbar.back().size() != d) throw ConfigError("xbar: dimension does not match the map");
    }
  }

  if (doc.contains("suites")) {
    const json& s = doc.at("suites");
    if (!s.is_array()) throw ConfigError("suites: expected an array of names");
    for (const auto& name : s) {
      if (!name.is_string()) throw ConfigError("suites: expected an array of names");
      cfg.suites.push_back(name.get<std::string>());
    }
  }
  validate(cfg, *map);
  return cfg;
}

void validate(const ExperimentConfig& cfg, const SetValuedMap& map) {
  try {
    cfg.schedule.validate();
    cfg.region.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");
  if (cfg.points < 0) throw ConfigError("points must be nonnegative");
  if (cfg.budget < 1) throw ConfigError("budget must be at least 1");
  if (cfg.trials < 0) throw ConfigError("trials must be nonnegative");
  if (!(cfg.k >= 0.0)) throw ConfigError("k must be nonnegative");
  if (cfg.directions < 1) throw ConfigError("directions must be at least 1");

  if (cfg.experiment == "montecarlo" && map.kind() == MapKind::kSupportParametrized) {
    throw ConfigError("montecarlo needs a generated or singleton map");
  }
  if (cfg.experiment == "verify") {
    if (cfg.suites.empty()) throw ConfigError("verify: 'suites' must name at least one suite");
    for (const auto& s : cfg.suites) {
      if (std::find(known_suites().begin(), known_suites().end(), s) == known_suites().end()) {
        throw ConfigError("unknown suite '" + s + "'");
      }
      if ((s == "compatibility" || s == "calmness") && map.kind() != MapKind::kSingleton) {
        throw ConfigError("suite '" + s + "' needs a singleton map");
      }
    }
  }
}

json config_to_json(const ExperimentConfig& cfg) {
  json xs = json::array();
  for (const auto& x : cfg.xbar) xs.push_back(vec_to_json(x));
  return json{{"experiment", cfg.experiment},
              {"map", cfg.map},
              {"region",
               {{"center", vec_to_json(cfg.region.center)},
                {"radius", cfg.region.radius},
                {"samples", cfg.region.sample_count}}},
              {"schedule", {{"h0", cfg.schedule.h0}, {"gamma", cfg.schedule.gamma}, {"count", cfg.schedule.count}}},
              {"tol", cfg.tol},
              {"seed", cfg.seed},
              {"points", cfg.points},
              {"xbar", xs},
              {"budget", cfg.budget},
              {"trials", cfg.trials},
              {"suites", cfg.suites},
              {"k", cfg.k},
              {"directions", cfg.directions}};
}

std::string report_csv(const RunReport& report, const ExperimentConfig& config) {
  std::vector<std::string> columns = report.columns;
  for (const char* c : {"h0", "gamma", "steps", "tol"}) columns.emplace_back(c);
  std::string header;
  for (const auto& c : columns) header += (header.empty() ? "" : ",") + c;

  std::string out = "# " + report.experiment + " (" + kVersion + "): " + header + "\n" + header + "\n";
  const std::string tail = "," + format_double(config.schedule.h0) + "," + format_double(config.schedule.gamma) +
                           "," + std::to_string(config.schedule.count) + "," + format_double(config.tol);
  for (const auto& rec : report.records) {
    std::string row;
    for (std::size_t i = 0; i < report.columns.size(); ++i) {
      if (i) row += ',';
      const auto it = rec.find(report.columns[i]);
      if (it != rec.end()) row += csv_field(*it);
    }
    out += row + tail + "\n";
  }
  return out;
}

std::string report_json(const RunReport& report) {
  const json doc{{"version", kVersion},
                 {"experiment", report.experiment},
                 {"pass", report.pass},
                 {"records", report.records.size()},
                 {"counters", report.counters},
                 {"config", report.config}};
  return doc.dump(2) + "\n";
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

void write_report(const RunReport& report, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_atomically(dir / (report.experiment + ".csv"), report_csv(report, config));
  write_atomically(dir / (report.experiment + ".json"), report_json(report));
}

int thread_count() {
  if (const char* env = std::getenv("SVDERIV_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(std::min(n, 1024L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace svderiv
