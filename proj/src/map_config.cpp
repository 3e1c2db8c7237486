#include "svderiv/map_config.hpp"

#include <memory>
#include <vector>

#include "svderiv/expression.hpp"

namespace svderiv {

namespace {

using nlohmann::json;

int require_int(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number_integer()) {
    throw ConfigError(std::string("map: '") + key + "' must be an integer");
  }
  const int v = doc.at(key).get<int>();
  if (v < 1) throw ConfigError(std::string("map: '") + key + "' must be positive");
  return v;
}

std::vector<Expression> parse_components(const json& entry, int d, int l) {
  std::vector<Expression> comps;
  try {
    if (entry.is_string()) {
      if (l != 1) throw ConfigError("map: a bare expression string requires l = 1");
      comps.push_back(Expression::parse(entry.get<std::string>(), d));
    } else if (entry.is_array()) {
      if (static_cast<int>(entry.size()) != l) {
        throw ConfigError("map: function entry has " + std::to_string(entry.size()) +
                          " components, expected l = " + std::to_string(l));
      }
      for (const auto& e : entry) {
        if (!e.is_string()) throw ConfigError("map: function components must be strings");
        comps.push_back(Expression::parse(e.get<std::string>(), d));
      }
    } else {
      throw ConfigError("map: function entries must be strings or arrays of strings");
    }
  } catch (const ExpressionError& e) {
    throw ConfigError(std::string("map: ") + e.what());
  }
  return comps;
}

Generator to_generator(std::vector<Expression> comps, int d) {
  auto shared = std::make_shared<const std::vector<Expression>>(std::move(comps));
  Generator g;
  g.f = [shared](const Vec& x) {
    Vec y(static_cast<int>(shared->size()));
    for (std::size_t i = 0; i < shared->size(); ++i) y[static_cast<int>(i)] = (*shared)[i].eval(x);
    return y;
  };
  g.jacobian = [shared, d](const Vec& x) {
    Mat jac(static_cast<int>(shared->size()), d);
    for (std::size_t i = 0; i < shared->size(); ++i) {
      jac.row(static_cast<int>(i)) = (*shared)[i].eval_with_gradient(x).second.transpose();
    }
    return jac;
  };
  return g;
}

}  // namespace

SetValuedMap map_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("map: expected a JSON object");
  if (!doc.contains("kind") || !doc.at("kind").is_string()) throw ConfigError("map: missing 'kind'");
  const std::string kind = doc.at("kind").get<std::string>();

  SetValuedMap map = [&]() -> SetValuedMap {
    if (kind == "truncated_epigraph") {
      if (doc.contains("d") && doc.at("d") != 1) throw ConfigError("map: truncated_epigraph has d = 1");
      if (doc.contains("l") && doc.at("l") != 2) throw ConfigError("map: truncated_epigraph has l = 2");
      return counterexample_map();
    }
    const int d = require_int(doc, "d");
    const int l = require_int(doc, "l");
    if (!doc.contains("functions") || !doc.at("functions").is_array()) {
      throw ConfigError("map: 'functions' must be an array");
    }
    const json& fns = doc.at("functions");
    if (kind == "singleton") {
      if (fns.size() != 1) throw ConfigError("map: singleton takes exactly one function");
      Generator g = to_generator(parse_components(fns[0], d, l), d);
      return singleton_lift(g.f, d, l, g.jacobian);
    }
    if (kind == "generated") {
      std::vector<Generator> gens;
      for (const auto& entry : fns) gens.push_back(to_generator(parse_components(entry, d, l), d));
      try {
        return generated_map(std::move(gens), d, l);
      } catch (const MapError& e) {
        throw ConfigError(e.what());
      }
    }
    if (kind == "ball") {
      if (fns.size() != 2) throw ConfigError("map: ball takes a center entry and a radius expression");
      Generator center = to_generator(parse_components(fns[0], d, l), d);
      auto radius = parse_components(fns[1], d, 1);
      auto r = std::make_shared<const Expression>(radius.front());
      return ball_valued_map(center.f, [r](const Vec& x) { return r->eval(x); }, d, l);
    }
    throw ConfigError("map: unknown kind '" + kind + "'");
  }();

  if (doc.contains("lipschitz")) {
    if (!doc.at("lipschitz").is_number()) throw ConfigError("map: 'lipschitz' must be a number");
    map = map.with_lipschitz_hint(doc.at("lipschitz").get<double>());
  }
  return map.with_name(kind);
}

}  // namespace svderiv
