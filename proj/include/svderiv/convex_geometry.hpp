#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace svderiv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Support oracle of a compact convex body: p -> sigma(p) and a maximizer
/// Y(p) with <p, Y(p)> = sigma(p). Y is only queried for p != 0.
struct SupportOracle {
  std::function<double(const Vec&)> support;
  std::function<Vec(const Vec&)> argmax;
};

/// Nonempty compact convex subset of R^l, stored either as the convex hull of
/// a finite vertex list or through its support oracle.
class ConvexBody {
 public:
  static ConvexBody from_vertices(std::vector<Vec> vertices);
  static ConvexBody from_oracle(int dim, SupportOracle oracle);
  static ConvexBody point(Vec y) { return from_vertices({std::move(y)}); }

  int dim() const { return dim_; }
  bool is_polytope() const { return std::holds_alternative<std::vector<Vec>>(rep_); }

  /// Throws GeometryError when the body is oracle-backed.
  const std::vector<Vec>& vertices() const;
  const SupportOracle& oracle() const;

  /// Y(p) for either representation (first maximizing vertex for polytopes).
  Vec support_point(const Vec& p) const;

 private:
  ConvexBody(int dim, std::variant<std::vector<Vec>, SupportOracle> rep)
      : dim_(dim), rep_(std::move(rep)) {}

  int dim_;
  std::variant<std::vector<Vec>, SupportOracle> rep_;
};

/// { sum_i mu_i g_i : mu_i >= 0 }.
struct PolyhedralCone {
  int dim = 0;
  std::vector<Vec> generators;

  static PolyhedralCone whole_space(int dim);
};

/// { (u, w) in R^d x R^l : <gradient, u> >= <normal, w> } with |normal| = 1.
/// A zero-length gradient gives the half-space { w : <normal, w> <= 0 } of R^l.
struct HalfSpaceCone {
  Vec gradient;
  Vec normal;

  int domain_dim() const { return static_cast<int>(gradient.size()); }
  int codomain_dim() const { return static_cast<int>(normal.size()); }
};

using Cone = std::variant<PolyhedralCone, HalfSpaceCone>;

struct SimplexCoefficients {
  Vec lambda;
};

struct Projection {
  double distance = 0.0;
  Vec nearest;
};

double support_value(const ConvexBody& body, const Vec& p);

/// Exposed face Y = { y in body : <p, y> = sigma(p) }. Polytopes return the
/// hull of all vertices within 1e-9 (|sigma| + 1) of the maximum.
ConvexBody argmax_face(const ConvexBody& body, const Vec& p);

/// Euclidean projection. Polytopes use Wolfe's minimum-norm-point active
/// set; oracle bodies use Frank-Wolfe with the support oracle as linear
/// minimization oracle, polished on the dual (sphere) side.
Projection distance_to_body(const Vec& z, const ConvexBody& body);

/// sup_{a in A} dist(a, B). Oracle sources are sampled on a fixed direction
/// grid (see sphere_directions), which makes the value a lower bound.
double one_sided_hausdorff(const ConvexBody& a, const ConvexBody& b);

/// Contingent cone T_K(ybar). Polytopes: cone{v_j - ybar}. Oracle bodies:
/// whole space in the interior, { w : <pbar, w> <= 0 } at smooth boundary
/// points, and the cone on sampled Y(p) - ybar at non-smooth points.
Cone tangent_cone(const ConvexBody& body, const Vec& ybar);

/// Unit outer normal when N_K(ybar) is a single ray, std::nullopt when the
/// normal cone is larger. Throws for interior or exterior points.
std::optional<Vec> normal_direction(const ConvexBody& body, const Vec& ybar);

bool affinely_independent(std::span<const Vec> points);

SimplexCoefficients barycentric_coordinates(std::span<const Vec> points, const Vec& y);

/// Relative test: the residual of the best representation must be at most
/// tol * |z|, which keeps the answer invariant under positive scaling of z.
bool cone_contains(const PolyhedralCone& cone, const Vec& z, double tol);
/// z = (u, w) stacked; for a zero-length gradient z = w.
bool cone_contains(const HalfSpaceCone& cone, const Vec& z, double tol);
bool cone_contains(const Cone& cone, const Vec& z, double tol);

/// Deterministic unit directions: +-1 in R^1, an evenly spaced circle with a
/// half-step offset in R^2, a Fibonacci sphere in R^3, seeded Gaussian
/// directions above that.
std::vector<Vec> sphere_directions(int dim, int count);

inline constexpr int kHausdorffDirections = 256;

/// min_{x >= 0} |A x - b| (Lawson-Hanson active set).
Vec nonnegative_least_squares(const Mat& a, const Vec& b);

}  // namespace svderiv
