#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "svderiv/set_maps.hpp"

namespace svderiv {

class LipschitzError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ball of the given radius around center; pair i is drawn from its own
/// stream, so a larger sample_count only adds pairs.
struct RegionSpec {
  Vec center;
  double radius = 1.0;
  int sample_count = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PointPair {
  Vec x;
  Vec x_prime;
};

/// Separation log-uniform in [1e-4 radius, radius], midpoint uniform in the
/// ball shrunk so both ends stay inside the region.
PointPair region_pair(const RegionSpec& region, int index);

/// Sampled maxima, hence empirical lower bounds of the true constants.
struct LipschitzEstimate {
  double k = 0.0;
  Vec x;
  Vec x_prime;
  bool diverged = false;
  /// Direction p achieving k (isotropic estimates only).
  std::optional<Vec> direction;
  /// (|x - x'|, largest ratio) along the anchored shells (isotropic only).
  std::vector<std::pair<double, double>> shell_profile;
  /// Grid directions skipped because the exposed face was not a point.
  int flat_directions = 0;
};

/// max over sampled pairs of max(e(F(x), F(x')), e(F(x'), F(x))) / |x - x'|.
LipschitzEstimate estimate_lipschitz(const SetValuedMap& map, const RegionSpec& region);

inline constexpr int kShellCount = 30;
inline constexpr double kDivergenceThreshold = 1e3;

/// max over sampled (x, x', p) of |Y(x, p) - Y(x', p)| / |x - x'|. The
/// directions are the coordinate axes (both signs) plus a sphere grid of
/// direction_count points. Divergence is read off shells |x - center| =
/// radius 2^-j anchored at the center: four consecutive shells growing by at
/// least 5% each and ending above 1e3. Throws LipschitzError when no grid
/// direction exposes a single point.
LipschitzEstimate estimate_isotropic_lipschitz(const SetValuedMap& map, const RegionSpec& region,
                                               int direction_count);

struct CalmnessEstimate {
  double k = 0.0;
  /// (shell radius, largest ratio on the shell)
  std::vector<std::pair<double, double>> profile;
};

inline constexpr int kCalmnessShells = 16;

/// max of |f(x) - f(xbar)| / |x - xbar| over shells of radius r / 2^j,
/// j = 0..15, each probed along the coordinate axes and sample_count seeded
/// unit directions.
CalmnessEstimate calmness_constant(const VecFn& f, const Vec& xbar, const RegionSpec& region);

struct IsotropicComparison {
  LipschitzEstimate lipschitz;
  LipschitzEstimate isotropic;
  bool pass = false;
};

/// Passes when k_lip <= 1.05 k_iso, or vacuously when the isotropic estimate diverged.
IsotropicComparison isotropic_implies_lipschitz_report(const SetValuedMap& map, const RegionSpec& region,
                                                       int direction_count = 64);

}  // namespace svderiv
