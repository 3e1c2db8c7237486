#include "svderiv/experiments.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <thread>

#include "svderiv/rng.hpp"

namespace svderiv {

using nlohmann::json;

namespace {

json vec_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string short_vec(const Vec& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? " " : "") + short_num(v[i]);
  return out + "]";
}

std::string short_mat(const Mat& m) {
  std::string out = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r) out += "; ";
    for (Eigen::Index c = 0; c < m.cols(); ++c) out += (c ? " " : "") + short_num(m(r, c));
  }
  return out + "]";
}

std::string describe(const Cone& cone) {
  if (const auto* h = std::get_if<HalfSpaceCone>(&cone)) {
    return "halfspace g=" + short_vec(h->gradient) + " n=" + short_vec(h->normal);
  }
  const auto& p = std::get<PolyhedralCone>(cone);
  if (p.generators.empty()) return "{0}";
  return "polyhedral(" + std::to_string(p.generators.size()) + " generators)";
}

std::string describe(const DerivativeCone& cone) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, AffinePlusCone>) {
          return "affine L=" + short_mat(c.linear) + " + " + describe(c.cone);
        } else if constexpr (std::is_same_v<T, HalfSpaceCone>) {
          return describe(Cone{c});
        } else {
          return "empirical(" + std::to_string(c.hull.generators.size()) + " generators)";
        }
      },
      cone.rep);
}

// Runs body(i) for i < n on up to thread_count() workers. Each body writes
// only its own slot, so results never depend on scheduling.
void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

int point_count(const ExperimentConfig& cfg) {
  return cfg.xbar.empty() ? cfg.points : static_cast<int>(cfg.xbar.size());
}

Vec base_point(const ExperimentConfig& cfg, int i, Rng& rng) {
  if (!cfg.xbar.empty()) return cfg.xbar[static_cast<std::size_t>(i)];
  return rng.in_ball(cfg.region.center, cfg.region.radius);
}

Vec exposed(const SetValuedMap& map, const Vec& x, const Vec& p) {
  if (map.kind() == MapKind::kSupportParametrized) return map.support_family().argmax(x, p);
  return map.eval(x).support_point(p);
}

// Extreme points worth classifying at x: the generator values, or one seeded
// exposed point of a support map.
std::vector<Vec> boundary_choices(const SetValuedMap& map, const Vec& x, Rng& rng) {
  std::vector<Vec> ys;
  if (map.kind() == MapKind::kSupportParametrized) {
    ys.push_back(exposed(map, x, rng.unit_vector(map.codomain_dim())));
    return ys;
  }
  for (const auto& g : map.generators()) {
    Vec y = g.f(x);
    bool seen = false;
    for (const auto& z : ys) seen = seen || (z - y).norm() <= 1e-12 * (1.0 + y.norm());
    if (!seen) ys.push_back(std::move(y));
  }
  return ys;
}

// A seeded point of F(x): flat Dirichlet weights over the generators, or an
// exposed point of a support map.
Vec random_member(const SetValuedMap& map, const Vec& x, Rng& rng) {
  if (map.kind() == MapKind::kSupportParametrized) return exposed(map, x, rng.unit_vector(map.codomain_dim()));
  const auto& gens = map.generators();
  Vec w(static_cast<Eigen::Index>(gens.size()));
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = -std::log(1.0 - rng.uniform());
  w /= w.sum();
  Vec y = Vec::Zero(map.codomain_dim());
  for (std::size_t j = 0; j < gens.size(); ++j) y += w[static_cast<Eigen::Index>(j)] * gens[j].f(x);
  return y;
}

json classify_record(const SetValuedMap& map, const ExperimentConfig& cfg, const Vec& x, const Vec& y,
                     std::uint64_t seed) {
  json rec{{"x", vec_json(x)}, {"y", vec_json(y)}};
  try {
    const GraphPoint gp = make_graph_point(map, x, y);
    const auto verdict =
        classify_differentiability(map, gp, cfg.budget, cfg.schedule, cfg.tol, ClassifierOptions{cfg.trials, seed});
    rec["verdict"] = to_string(verdict.status);
    rec["accepted"] = verdict.accepted_samples;
    rec["checks"] = 1 + verdict.report.scaling_checks + verdict.report.midpoint_checks;
    rec["failures"] = verdict.report.total_failures();
    if (verdict.witness_probe) {
      const auto d = decide_membership(*verdict.witness_probe, gp, cfg.tol);
      rec["witness_tail_min"] = d.tail_min;
      rec["witness_slope"] = d.slope;
    }
    if (verdict.cone) rec["cone"] = describe(*verdict.cone);
    rec["reason"] = verdict.reason;
  } catch (const std::exception& e) {
    rec["verdict"] = "error";
    rec["error"] = e.what();
  }
  return rec;
}

json tally(const std::vector<json>& records) {
  std::map<std::string, int> counts{
      {"Differentiable", 0}, {"NotDifferentiable", 0}, {"Inconclusive", 0}, {"error", 0}};
  for (const auto& r : records) ++counts[r.at("verdict").get<std::string>()];
  return json{{"records", records.size()},
              {"differentiable", counts["Differentiable"]},
              {"not_differentiable", counts["NotDifferentiable"]},
              {"inconclusive", counts["Inconclusive"]},
              {"errors", counts["error"]}};
}

RunReport start(const ExperimentConfig& cfg, std::vector<std::string> columns) {
  RunReport report;
  report.experiment = cfg.experiment;
  report.columns = std::move(columns);
  report.config = config_to_json(cfg);
  return report;
}

}  // namespace

RunReport run_derivative(const ExperimentConfig& cfg) {
  const SetValuedMap map = map_from_json(cfg.map);
  RunReport report = start(cfg, {"index", "branch", "x", "y", "verdict", "accepted", "checks", "failures",
                                 "witness_tail_min", "witness_slope", "cone", "reason", "error"});
  const int n = point_count(cfg);
  std::vector<std::vector<json>> slots(static_cast<std::size_t>(n));
  parallel_for(n, [&](int i) {
    const std::uint64_t seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    auto& out = slots[static_cast<std::size_t>(i)];
    Vec x = base_point(cfg, i, rng);
    std::vector<Vec> ys;
    try {
      ys = boundary_choices(map, x, rng);
    } catch (const std::exception& e) {
      out.push_back(json{{"index", i}, {"branch", 0}, {"x", vec_json(x)}, {"verdict", "error"}, {"error", e.what()}});
      return;
    }
    for (std::size_t j = 0; j < ys.size(); ++j) {
      json rec = classify_record(map, cfg, x, ys[j], stream_seed(seed, j + 1));
      rec["index"] = i;
      rec["branch"] = j;
      out.push_back(std::move(rec));
    }
  });
  for (auto& s : slots) {
    for (auto& r : s) report.records.push_back(std::move(r));
  }
  report.counters = tally(report.records);
  report.counters["points"] = n;
  return report;
}

RunReport run_montecarlo(const ExperimentConfig& cfg) {
  const SetValuedMap map = map_from_json(cfg.map);
  if (map.kind() == MapKind::kSupportParametrized) throw ConfigError("montecarlo needs a generated or singleton map");
  RunReport report = start(cfg, {"index", "x", "y", "verdict", "accepted", "failures", "error"});
  const int n = point_count(cfg);
  report.records.resize(static_cast<std::size_t>(n));
  parallel_for(n, [&](int i) {
    const std::uint64_t seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    const Vec x = base_point(cfg, i, rng);
    json rec;
    try {
      const auto& gens = map.generators();
      const auto pick = std::min(gens.size() - 1, static_cast<std::size_t>(rng.uniform() * gens.size()));
      rec = classify_record(map, cfg, x, gens[pick].f(x), stream_seed(seed, 1));
    } catch (const std::exception& e) {
      rec = json{{"x", vec_json(x)}, {"verdict", "error"}, {"error", e.what()}};
    }
    rec["index"] = i;
    report.records[static_cast<std::size_t>(i)] = std::move(rec);
  });
  report.counters = tally(report.records);
  json failures = json::array();
  for (const auto& r : report.records) {
    if (r.at("verdict") == "NotDifferentiable") failures.push_back(json{{"index", r.at("index")}, {"x", r.at("x")}});
  }
  const int hits = report.counters["not_differentiable"];
  report.counters["failure_fraction"] = n == 0 ? 0.0 : static_cast<double>(hits) / n;
  report.counters["failure_list"] = failures;
  report.pass = hits == 0;
  return report;
}

RunReport run_counterexample(const ExperimentConfig& cfg) {
  const SetValuedMap map = counterexample_map();
  const Vec p = counterexample_direction();
  const auto& argmax = map.support_family().argmax;
  RunReport report = start(cfg, {"tau", "y", "ratio", "expected", "rel_error", "hausdorff_ratio"});

  const Vec zero = Vec::Zero(1);
  const Vec y0 = argmax(zero, p);
  const ConvexBody f0 = map.eval(zero);
  double worst_rel = 0.0;
  double worst_hausdorff = 0.0;
  for (double tau : {1e-1, 1e-2, 1e-3, 1e-4}) {
    const Vec t = Vec::Constant(1, tau);
    const Vec y = argmax(t, p);
    const double ratio = (y - y0).norm() / tau;
    const double expected = 1.0 / std::sqrt(tau);
    const ConvexBody ft = map.eval(t);
    const double hausdorff = std::max(one_sided_hausdorff(ft, f0), one_sided_hausdorff(f0, ft)) / tau;
    const double rel = std::abs(ratio - expected) / expected;
    worst_rel = std::max(worst_rel, rel);
    worst_hausdorff = std::max(worst_hausdorff, hausdorff);
    report.records.push_back(json{{"tau", tau},
                                  {"y", vec_json(y)},
                                  {"ratio", ratio},
                                  {"expected", expected},
                                  {"rel_error", rel},
                                  {"hausdorff_ratio", hausdorff}});
  }

  RegionSpec region = cfg.region;
  region.seed = cfg.seed;
  const auto lip = estimate_lipschitz(map, region);
  const auto iso = estimate_isotropic_lipschitz(map, region, cfg.directions);
  report.counters = json{{"max_rel_error", worst_rel},
                         {"max_hausdorff_ratio", worst_hausdorff},
                         {"lipschitz_estimate", lip.k},
                         {"isotropic_estimate", iso.k},
                         {"isotropic_diverged", iso.diverged},
                         {"isotropic_direction", iso.direction ? vec_json(*iso.direction) : json()}};
  report.pass = worst_rel <= 0.01 && worst_hausdorff <= 3.0 && lip.k <= 3.0;
  return report;
}

namespace {

struct SuiteRow {
  Vec x;
  Vec y;
  Vec u;
  Vec v;
  double value = 0.0;
  std::optional<double> bound;
  bool pass = false;
  std::string error;
};

json suite_json(const std::string& suite, int index, const SuiteRow& r) {
  json rec{{"suite", suite}, {"index", index}, {"x", vec_json(r.x)}, {"pass", r.pass}};
  if (r.y.size()) rec["y"] = vec_json(r.y);
  if (r.u.size()) rec["u"] = vec_json(r.u);
  if (r.v.size()) rec["v"] = vec_json(r.v);
  if (r.error.empty()) {
    rec["value"] = r.value;
    if (r.bound) rec["bound"] = *r.bound;
  } else {
    rec["error"] = r.error;
  }
  return rec;
}

// Radius of the neighbourhood on which the calmness constant is measured.
constexpr double kCalmnessRadius = 1e-3;

SuiteRow run_suite_point(const std::string& suite, const SetValuedMap& map, const ExperimentConfig& cfg, int i) {
  const std::uint64_t seed = stream_seed(cfg.seed, static_cast<std::uint64_t>(i));
  Rng rng(seed);
  SuiteRow row;
  row.x = base_point(cfg, i, rng);
  try {
    if (suite == "compatibility") {
      const VecFn f = map.generators()[0].f;
      const JacobianFn jac = [map](const Vec& x) { return map.generator_jacobian(0, x); };
      row.y = f(row.x);
      const auto rep = compatibility_check(f, jac, row.x, map.codomain_dim(), cfg.schedule, cfg.tol, cfg.budget, seed);
      row.value = std::max(rep.membership_deviation, rep.sampled_deviation);
      row.bound = cfg.tol;
      row.pass = rep.pass;
    } else if (suite == "calmness") {
      const VecFn f = map.generators()[0].f;
      row.y = f(row.x);
      const double k = calmness_constant(f, row.x, RegionSpec{row.x, kCalmnessRadius, 64, seed}).k;
      const GraphPoint gp = make_graph_point(map, row.x, row.y);
      for (const auto& s : sample_derivative_graph(map, gp, cfg.budget, cfg.schedule, cfg.tol, seed)) {
        const double norm = s.u.norm();
        if (norm > 0.0 && s.v.norm() / norm >= row.value) {
          row.value = s.v.norm() / norm;
          row.u = s.u;
          row.v = s.v;
        }
      }
      row.bound = k + cfg.tol;
      row.pass = row.value <= *row.bound;
    } else if (suite == "witness") {
      row.y = random_member(map, row.x, rng);
      row.u = rng.unit_vector(map.domain_dim()) * rng.uniform(0.5, 2.0);
      row.bound = cfg.k * (1.0 + cfg.tol);
      const GraphPoint gp = make_graph_point(map, row.x, row.y);
      row.v = intersection_witness(map, gp, row.u, cfg.k, cfg.schedule, cfg.tol);
      row.value = row.v.norm() / row.u.norm();
      row.pass = row.value <= *row.bound;
    }
  } catch (const std::exception& e) {
    row.pass = false;
    row.error = e.what();
  }
  return row;
}

}  // namespace

RunReport run_verify(const ExperimentConfig& cfg) {
  const SetValuedMap map = map_from_json(cfg.map);
  validate(cfg, map);
  RunReport report = start(cfg, {"suite", "index", "x", "y", "u", "v", "value", "bound", "pass", "error"});
  const int n = point_count(cfg);
  for (const auto& suite : cfg.suites) {
    std::vector<json> rows;
    if (suite == "iso-vs-lip") {
      SuiteRow row;
      row.x = cfg.region.center;
      try {
        RegionSpec region = cfg.region;
        region.seed = cfg.seed;
        const auto rep = isotropic_implies_lipschitz_report(map, region, cfg.directions);
        row.value = rep.lipschitz.k;
        if (!rep.isotropic.diverged) row.bound = 1.05 * rep.isotropic.k;
        row.pass = rep.pass;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      rows.push_back(suite_json(suite, 0, row));
    } else {
      rows.resize(static_cast<std::size_t>(n));
      parallel_for(n, [&](int i) { rows[static_cast<std::size_t>(i)] = suite_json(suite, i, run_suite_point(suite, map, cfg, i)); });
    }
    int failures = 0;
    int errors = 0;
    for (const auto& r : rows) {
      failures += !r.at("pass").get<bool>();
      errors += r.contains("error");
    }
    report.counters[suite] = json{{"checks", rows.size()}, {"failures", failures}, {"errors", errors}, {"pass", failures == 0}};
    report.pass = report.pass && failures == 0;
    for (auto& r : rows) report.records.push_back(std::move(r));
  }
  return report;
}

RunReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.experiment == "derivative") return run_derivative(cfg);
  if (cfg.experiment == "montecarlo") return run_montecarlo(cfg);
  if (cfg.experiment == "counterexample") return run_counterexample(cfg);
  if (cfg.experiment == "verify") return run_verify(cfg);
  throw ConfigError("unknown experiment '" + cfg.experiment + "'");
}

}  // namespace svderiv
