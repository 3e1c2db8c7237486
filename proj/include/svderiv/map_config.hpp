#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "svderiv/set_maps.hpp"

namespace svderiv {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Builds a map from its JSON description:
///
///     {"kind": "generated" | "singleton" | "ball" | "truncated_epigraph",
///      "d": int, "l": int,
///      "functions": [...],
///      "lipschitz": number}                      (optional hint)
///
/// Each entry of "functions" is one vector-valued function R^d -> R^l, written
/// as an array of l expression strings (a bare string is accepted when l = 1).
/// singleton takes one entry, generated takes N <= l + 1 entries, ball takes
/// the center entry followed by the radius expression. truncated_epigraph takes no
/// functions and has d = 1, l = 2. Expressions follow the Expression grammar
/// and contribute exact Jacobians.
SetValuedMap map_from_json(const nlohmann::json& doc);

}  // namespace svderiv
