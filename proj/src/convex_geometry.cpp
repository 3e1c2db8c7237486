#include "svderiv/convex_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "svderiv/rng.hpp"

namespace svderiv {

namespace {

void require_dim(int expected, Eigen::Index got, const char* what) {
  if (got != expected) {
    throw GeometryError(std::string(what) + ": dimension mismatch (expected " +
                        std::to_string(expected) + ", got " + std::to_string(got) + ")");
  }
}

// Rough diameter, used only to scale tolerances and step sizes.
double body_scale(const ConvexBody& body) {
  if (body.is_polytope()) {
    const auto& v = body.vertices();
    double s = 0.0;
    for (const auto& x : v) s = std::max(s, (x - v.front()).norm());
    return s;
  }
  double s = 0.0;
  for (int i = 0; i < body.dim(); ++i) {
    Vec e = Vec::Unit(body.dim(), i);
    s = std::max(s, body.oracle().support(e) + body.oracle().support(-e));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Wolfe's minimum-norm-point algorithm on the translated points v_j - z.

Vec affine_min_norm(const std::vector<Vec>& pts, const std::vector<int>& active) {
  const int m = static_cast<int>(active.size());
  Mat kkt = Mat::Zero(m + 1, m + 1);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) kkt(i, j) = pts[active[i]].dot(pts[active[j]]);
    kkt(i, m) = 1.0;
    kkt(m, i) = 1.0;
  }
  Vec rhs = Vec::Zero(m + 1);
  rhs[m] = 1.0;
  Vec sol = kkt.completeOrthogonalDecomposition().solve(rhs);
  return sol.head(m);
}

Projection project_onto_polytope(const std::vector<Vec>& vertices, const Vec& z) {
  const int n = static_cast<int>(vertices.size());
  std::vector<Vec> pts(n);
  double scale = 0.0;
  for (int j = 0; j < n; ++j) {
    pts[j] = vertices[j] - z;
    scale = std::max(scale, pts[j].squaredNorm());
  }
  if (n == 1) return {pts[0].norm(), vertices[0]};

  int start = 0;
  for (int j = 1; j < n; ++j) {
    if (pts[j].squaredNorm() < pts[start].squaredNorm()) start = j;
  }
  std::vector<int> active{start};
  std::vector<double> weight{1.0};
  Vec x = pts[start];
  const double eps = 1e-12;

  auto recompute = [&] {
    x.setZero(z.size());
    for (std::size_t i = 0; i < active.size(); ++i) x += weight[i] * pts[active[i]];
  };

  for (int major = 0; major < 10 * n + 100; ++major) {
    if (x.squaredNorm() <= 1e-30 * (1.0 + scale)) break;
    int entering = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double val = x.dot(pts[j]);
      if (val < best) {
        best = val;
        entering = j;
      }
    }
    if (x.squaredNorm() - best <= eps * scale) break;
    if (std::find(active.begin(), active.end(), entering) != active.end()) break;
    active.push_back(entering);
    weight.push_back(0.0);

    for (int minor = 0; minor < n + 5; ++minor) {
      Vec alpha = affine_min_norm(pts, active);
      if ((alpha.array() > eps).all()) {
        for (std::size_t i = 0; i < active.size(); ++i) weight[i] = alpha[i];
        break;
      }
      double theta = 1.0;
      for (std::size_t i = 0; i < active.size(); ++i) {
        if (alpha[i] <= eps) {
          const double denom = weight[i] - alpha[i];
          if (denom > 0.0) theta = std::min(theta, weight[i] / denom);
        }
      }
      std::vector<int> kept;
      std::vector<double> kept_w;
      for (std::size_t i = 0; i < active.size(); ++i) {
        const double w = theta * alpha[i] + (1.0 - theta) * weight[i];
        if (w > eps) {
          kept.push_back(active[i]);
          kept_w.push_back(w);
        }
      }
      if (kept.empty()) {
        kept.push_back(active.back());
        kept_w.push_back(1.0);
      }
      active = std::move(kept);
      weight = std::move(kept_w);
    }
    double total = 0.0;
    for (double w : weight) total += w;
    for (double& w : weight) w /= total;
    recompute();
  }

  // z inside the hull: return it exactly instead of its reconstruction
  if (x.squaredNorm() <= 1e-30 * (1.0 + scale)) return {0.0, z};
  Vec nearest = Vec::Zero(z.size());
  for (std::size_t i = 0; i < active.size(); ++i) nearest += weight[i] * vertices[active[i]];
  return {x.norm(), nearest};
}

// ---------------------------------------------------------------------------
// Sphere search on the gap g(p) = sigma(p) - <p, z>. Its Riemannian gradient is
// the tangential part of Y(p) - z. min g < 0 gives -dist(z, K); min g = 0 at
// the outer normals of a boundary point z.

struct SphereMinimum {
  Vec direction;
  double gap = 0.0;
  double grad_norm = 0.0;
};

double gap_at(const SupportOracle& oracle, const Vec& p, const Vec& z) {
  return oracle.support(p) - p.dot(z);
}

Vec tangential(const Vec& p, const Vec& g) { return g - p.dot(g) * p; }

SphereMinimum minimize_gap(const SupportOracle& oracle, const Vec& z, Vec p, double scale) {
  p.normalize();
  double f = gap_at(oracle, p, z);
  Vec g = tangential(p, oracle.argmax(p) - z);
  SphereMinimum best{p, f, g.norm()};
  // Near the optimum the gap is flat to rounding; rank iterates there by
  // gradient norm, which still shrinks linearly.
  const double noise = 1e-14 * (1.0 + scale + z.norm());
  auto improves = [&](double fv, double gv) {
    return fv < best.gap - noise || (fv <= best.gap + noise && gv < best.grad_norm);
  };
  double step = 1.0 / std::max(scale, 1e-9);
  for (int it = 0; it < 300; ++it) {
    const double gn = g.norm();
    if (gn <= 1e-15 * (1.0 + scale)) break;
    const double s = std::min(step, 0.5 / gn);
    Vec q = (p - s * g).normalized();
    const double fq = gap_at(oracle, q, z);
    Vec gq = tangential(q, oracle.argmax(q) - z);
    if (fq > f + 1e-14 * (1.0 + std::abs(f)) && gq.norm() >= gn) {
      step = 0.25 * s;
      if (step < 1e-16) break;
      continue;
    }
    const Vec ds = q - p;
    const double sy = ds.dot(gq - g);
    step = sy > 0.0 ? ds.squaredNorm() / sy : 2.0 * s;
    p = std::move(q);
    f = fq;
    g = std::move(gq);
    if (improves(f, g.norm())) best = {p, f, g.norm()};
  }
  return best;
}

SphereMinimum grid_then_minimize(const SupportOracle& oracle, const Vec& z, double scale) {
  const int dim = static_cast<int>(z.size());
  if (dim == 1) {
    const Vec plus = Vec::Ones(1);
    const Vec minus = -plus;
    const double gp = gap_at(oracle, plus, z);
    const double gm = gap_at(oracle, minus, z);
    return gp <= gm ? SphereMinimum{plus, gp, 0.0} : SphereMinimum{minus, gm, 0.0};
  }
  Vec best_dir;
  double best_gap = std::numeric_limits<double>::infinity();
  for (const auto& p : sphere_directions(dim, kHausdorffDirections)) {
    const double g = gap_at(oracle, p, z);
    if (g < best_gap) {
      best_gap = g;
      best_dir = p;
    }
  }
  return minimize_gap(oracle, z, best_dir, scale);
}

Projection project_onto_oracle(const SupportOracle& oracle, const Vec& z, double scale) {
  const int dim = static_cast<int>(z.size());
  // Frank-Wolfe with exact line search; LMO(grad) = Y(-grad).
  const Vec e = Vec::Unit(dim, 0);
  const Vec center = 0.5 * (oracle.argmax(e) + oracle.argmax(-e));
  Vec seed = z - center;
  if (seed.norm() < 1e-14) seed = e;
  Vec y = oracle.argmax(seed);
  for (int it = 0; it < 200; ++it) {
    const Vec grad = y - z;
    if (grad.squaredNorm() <= 1e-32 * (1.0 + scale * scale)) break;
    const Vec s = oracle.argmax(-grad);
    const Vec d = s - y;
    const double fw_gap = -grad.dot(d);
    if (fw_gap <= 1e-16 * (1.0 + scale * scale)) break;
    const double gamma = std::clamp(fw_gap / d.squaredNorm(), 0.0, 1.0);
    y += gamma * d;
  }

  Vec p0 = z - y;
  if (p0.norm() < 1e-14) p0 = e;
  SphereMinimum dual = minimize_gap(oracle, z, p0, scale);
  const double inside_tol = 1e-13 * (1.0 + z.norm() + scale);
  if (dual.gap >= -inside_tol) {
    // No separating direction found: z lies in the body.
    return {0.0, z};
  }
  // The oracle returns one point of the exposed face at the dual direction.
  // Exposed points of nearby directions span the rest of that face, and the
  // projection onto their hull stays inside the body.
  const Vec& p = dual.direction;
  std::vector<Vec> pool{y, oracle.argmax(p)};
  const Mat tangents = Eigen::JacobiSVD<Mat>(Mat::Identity(dim, dim) - p * p.transpose(), Eigen::ComputeFullU)
                           .matrixU()
                           .leftCols(dim - 1);
  for (double delta : {1e-2, 1e-4, 1e-6, 1e-8}) {
    for (int k = 0; k < dim - 1; ++k) {
      for (double sign : {1.0, -1.0}) pool.push_back(oracle.argmax((p + sign * delta * tangents.col(k)).normalized()));
    }
  }
  Projection best = project_onto_polytope(pool, z);
  for (const auto& c : pool) {
    const double d = (z - c).norm();
    if (d < best.distance) best = {d, c};
  }
  return best;
}

struct OracleLocation {
  enum class Where { kInterior, kBoundary, kOutside } where;
  Vec normal;
  bool smooth = false;
};

OracleLocation locate_in_oracle(const ConvexBody& body, const Vec& ybar) {
  const auto& oracle = body.oracle();
  const double scale = body_scale(body);
  const double tol = 1e-7 * (1.0 + scale);
  const int dim = body.dim();

  if (dim == 1) {
    const double gp = oracle.support(Vec::Ones(1)) - ybar[0];
    const double gm = oracle.support(-Vec::Ones(1)) + ybar[0];
    if (gp < -tol || gm < -tol) return {OracleLocation::Where::kOutside, {}, false};
    const bool on_plus = gp <= tol;
    const bool on_minus = gm <= tol;
    if (!on_plus && !on_minus) return {OracleLocation::Where::kInterior, {}, false};
    if (on_plus && on_minus) return {OracleLocation::Where::kBoundary, Vec::Ones(1), false};
    return {OracleLocation::Where::kBoundary, on_plus ? Vec(Vec::Ones(1)) : Vec(-Vec::Ones(1)), true};
  }

  const SphereMinimum m = grid_then_minimize(oracle, ybar, scale);
  if (m.gap < -tol) return {OracleLocation::Where::kOutside, m.direction, false};
  if (m.gap > tol) return {OracleLocation::Where::kInterior, m.direction, false};

  // The gap grows quadratically off a smooth normal; it stays ~0 along a
  // normal cone of dimension >= 2.
  const Vec& p = m.direction;
  Mat basis = Mat::Identity(dim, dim) - p * p.transpose();
  Eigen::JacobiSVD<Mat> svd(basis, Eigen::ComputeFullU);
  const double eps = 1e-3;
  const double rise = 1e-11 * (1.0 + scale);
  bool smooth = true;
  for (int k = 0; k < dim - 1 && smooth; ++k) {
    const Vec q = svd.matrixU().col(k);
    for (double sign : {1.0, -1.0}) {
      const Vec pp = (p + sign * eps * q).normalized();
      if (gap_at(oracle, pp, ybar) - m.gap <= rise) {
        smooth = false;
        break;
      }
    }
  }
  return {OracleLocation::Where::kBoundary, p, smooth};
}

// Candidate outer normals of a polytope at ybar: unit vectors orthogonal to
// l-1 independent generators and nonpositive on every generator.
std::vector<Vec> polytope_normal_candidates(const std::vector<Vec>& gens, int dim, double tol) {
  std::vector<Vec> candidates;
  auto feasible = [&](const Vec& p) {
    for (const auto& g : gens) {
      if (p.dot(g) > tol) return false;
    }
    return true;
  };
  auto add = [&](const Vec& p) {
    for (const auto& c : candidates) {
      if ((c - p).norm() < 1e-7) return;
    }
    candidates.push_back(p);
  };
  if (dim == 1) {
    for (double s : {1.0, -1.0}) {
      Vec p = Vec::Constant(1, s);
      if (feasible(p)) add(p);
    }
    return candidates;
  }
  const int n = static_cast<int>(gens.size());
  const int k = dim - 1;
  if (n < k) return candidates;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    Mat m(dim, k);
    for (int i = 0; i < k; ++i) m.col(i) = gens[idx[i]];
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU);
    const auto& sv = svd.singularValues();
    if (sv[k - 1] > 1e-9 * std::max(1.0, sv[0])) {
      const Vec p = svd.matrixU().col(dim - 1);
      if (feasible(p)) add(p);
      if (feasible(-p)) add(-p);
    }
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < k; ++i) idx[i] = idx[i - 1] + 1;
  }
  return candidates;
}

int affine_rank(const std::vector<Vec>& pts) {
  if (pts.size() <= 1) return 0;
  const int dim = static_cast<int>(pts.front().size());
  Mat m(dim, static_cast<int>(pts.size()) - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) m.col(static_cast<int>(i) - 1) = pts[i] - pts[0];
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv[i] > 1e-9 * std::max(1.0, sv[0])) ++rank;
  }
  return rank;
}

}  // namespace

// ---------------------------------------------------------------------------

ConvexBody ConvexBody::from_vertices(std::vector<Vec> vertices) {
  if (vertices.empty()) throw GeometryError("vertex set must be nonempty");
  const int dim = static_cast<int>(vertices.front().size());
  if (dim < 1) throw GeometryError("body dimension must be positive");
  for (const auto& v : vertices) {
    require_dim(dim, v.size(), "vertex");
    if (!v.allFinite()) throw GeometryError("vertex has non-finite entries");
  }
  return ConvexBody(dim, std::move(vertices));
}

ConvexBody ConvexBody::from_oracle(int dim, SupportOracle oracle) {
  if (dim < 1) throw GeometryError("body dimension must be positive");
  if (!oracle.support || !oracle.argmax) throw GeometryError("support oracle is incomplete");
  return ConvexBody(dim, std::move(oracle));
}

const std::vector<Vec>& ConvexBody::vertices() const {
  if (!is_polytope()) throw GeometryError("body is not a vertex set");
  return std::get<std::vector<Vec>>(rep_);
}

const SupportOracle& ConvexBody::oracle() const {
  if (is_polytope()) throw GeometryError("body is not oracle-backed");
  return std::get<SupportOracle>(rep_);
}

Vec ConvexBody::support_point(const Vec& p) const {
  require_dim(dim_, p.size(), "support_point");
  if (!is_polytope()) return oracle().argmax(p);
  const auto& v = vertices();
  std::size_t best = 0;
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (p.dot(v[j]) > p.dot(v[best])) best = j;
  }
  return v[best];
}

PolyhedralCone PolyhedralCone::whole_space(int dim) {
  PolyhedralCone cone{dim, {}};
  for (int i = 0; i < dim; ++i) {
    cone.generators.push_back(Vec::Unit(dim, i));
    cone.generators.push_back(-Vec::Unit(dim, i));
  }
  return cone;
}

double support_value(const ConvexBody& body, const Vec& p) {
  require_dim(body.dim(), p.size(), "support_value");
  if (p.squaredNorm() == 0.0) return 0.0;
  if (!body.is_polytope()) return body.oracle().support(p);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : body.vertices()) best = std::max(best, p.dot(v));
  return best;
}

ConvexBody argmax_face(const ConvexBody& body, const Vec& p) {
  require_dim(body.dim(), p.size(), "argmax_face");
  if (p.norm() == 0.0) throw GeometryError("argmax_face: direction must be nonzero");
  if (!body.is_polytope()) return ConvexBody::point(body.oracle().argmax(p));
  const double sigma = support_value(body, p);
  const double tol = 1e-9 * (std::abs(sigma) + 1.0);
  std::vector<Vec> face;
  for (const auto& v : body.vertices()) {
    if (p.dot(v) >= sigma - tol) face.push_back(v);
  }
  return ConvexBody::from_vertices(std::move(face));
}

Projection distance_to_body(const Vec& z, const ConvexBody& body) {
  require_dim(body.dim(), z.size(), "distance_to_body");
  if (body.is_polytope()) return project_onto_polytope(body.vertices(), z);
  return project_onto_oracle(body.oracle(), z, body_scale(body));
}

double one_sided_hausdorff(const ConvexBody& a, const ConvexBody& b) {
  if (a.dim() != b.dim()) throw GeometryError("one_sided_hausdorff: dimension mismatch");
  double worst = 0.0;
  if (a.is_polytope()) {
    for (const auto& v : a.vertices()) worst = std::max(worst, distance_to_body(v, b).distance);
    return worst;
  }
  for (const auto& p : sphere_directions(a.dim(), kHausdorffDirections)) {
    worst = std::max(worst, distance_to_body(a.oracle().argmax(p), b).distance);
  }
  return worst;
}

Cone tangent_cone(const ConvexBody& body, const Vec& ybar) {
  require_dim(body.dim(), ybar.size(), "tangent_cone");
  if (body.is_polytope()) {
    const auto& verts = body.vertices();
    const double scale = body_scale(body);
    if (distance_to_body(ybar, body).distance > 1e-7 * (1.0 + scale)) {
      throw GeometryError("tangent_cone: point lies outside the body");
    }
    PolyhedralCone cone{body.dim(), {}};
    for (const auto& v : verts) {
      Vec g = v - ybar;
      if (g.norm() > 1e-14 * (1.0 + scale)) cone.generators.push_back(std::move(g));
    }
    return cone;
  }
  const OracleLocation loc = locate_in_oracle(body, ybar);
  switch (loc.where) {
    case OracleLocation::Where::kOutside:
      throw GeometryError("tangent_cone: point lies outside the body");
    case OracleLocation::Where::kInterior:
      return PolyhedralCone::whole_space(body.dim());
    case OracleLocation::Where::kBoundary:
      break;
  }
  if (loc.smooth) return HalfSpaceCone{Vec(0), loc.normal};
  // Inner approximation at a non-smooth boundary point.
  PolyhedralCone cone{body.dim(), {}};
  const int count = body.dim() == 1 ? 2 : kHausdorffDirections;
  for (const auto& p : sphere_directions(body.dim(), count)) {
    Vec g = body.oracle().argmax(p) - ybar;
    if (g.norm() > 1e-12) cone.generators.push_back(std::move(g));
  }
  return cone;
}

std::optional<Vec> normal_direction(const ConvexBody& body, const Vec& ybar) {
  require_dim(body.dim(), ybar.size(), "normal_direction");
  if (!body.is_polytope()) {
    const OracleLocation loc = locate_in_oracle(body, ybar);
    if (loc.where == OracleLocation::Where::kOutside) {
      throw GeometryError("normal_direction: point lies outside the body");
    }
    if (loc.where == OracleLocation::Where::kInterior) {
      throw GeometryError("normal_direction: point is interior");
    }
    if (!loc.smooth) return std::nullopt;
    return loc.normal;
  }

  const auto& verts = body.vertices();
  const double scale = body_scale(body);
  if (distance_to_body(ybar, body).distance > 1e-7 * (1.0 + scale)) {
    throw GeometryError("normal_direction: point lies outside the body");
  }
  // Lower-dimensional hulls have no interior and a normal cone containing a line.
  if (affine_rank(verts) < body.dim()) return std::nullopt;
  std::vector<Vec> gens;
  for (const auto& v : verts) {
    Vec g = v - ybar;
    if (g.norm() > 1e-12 * (1.0 + scale)) gens.push_back(std::move(g));
  }
  const auto candidates = polytope_normal_candidates(gens, body.dim(), 1e-9 * (1.0 + scale));
  if (candidates.empty()) throw GeometryError("normal_direction: point is interior");
  if (candidates.size() > 1) return std::nullopt;
  return candidates.front();
}

bool affinely_independent(std::span<const Vec> points) {
  if (points.empty()) return true;
  const int n = static_cast<int>(points.size());
  if (n == 1) return true;
  const int dim = static_cast<int>(points.front().size());
  if (n - 1 > dim) return false;
  Mat m(dim, n - 1);
  for (int i = 0; i < n - 1; ++i) {
    require_dim(dim, points[i].size(), "affinely_independent");
    m.col(i) = points[i] - points[n - 1];
  }
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  return sv[n - 2] > 1e-9 * std::max(1.0, sv[0]);
}

SimplexCoefficients barycentric_coordinates(std::span<const Vec> points, const Vec& y) {
  if (points.empty()) throw GeometryError("barycentric_coordinates: empty point list");
  if (!affinely_independent(points)) {
    throw GeometryError("barycentric_coordinates: points are affinely dependent");
  }
  const int n = static_cast<int>(points.size());
  const int dim = static_cast<int>(points.front().size());
  require_dim(dim, y.size(), "barycentric_coordinates");
  Mat a(dim + 1, n);
  for (int j = 0; j < n; ++j) {
    a.block(0, j, dim, 1) = points[j];
    a(dim, j) = 1.0;
  }
  Vec b(dim + 1);
  b.head(dim) = y;
  b[dim] = 1.0;
  Vec lambda = a.colPivHouseholderQr().solve(b);
  double scale = 1.0 + y.norm();
  for (const auto& p : points) scale = std::max(scale, 1.0 + p.norm());
  if ((a * lambda - b).norm() > 1e-9 * scale) {
    throw GeometryError("barycentric_coordinates: point is off the affine hull");
  }
  if ((lambda.array() < -1e-6).any()) {
    throw GeometryError("barycentric_coordinates: point lies outside the hull");
  }
  lambda = lambda.cwiseMax(0.0).cwiseMin(1.0);
  lambda /= lambda.sum();
  return {lambda};
}

Vec nonnegative_least_squares(const Mat& a, const Vec& b) {
  const int n = static_cast<int>(a.cols());
  Vec x = Vec::Zero(n);
  if (n == 0) return x;
  std::vector<bool> passive(n, false);
  const double tol = 1e-12 * std::max(1.0, a.norm()) * std::max(1.0, b.norm());

  auto solve_passive = [&](Vec& z) {
    std::vector<int> cols;
    for (int j = 0; j < n; ++j) {
      if (passive[j]) cols.push_back(j);
    }
    z.setZero(n);
    if (cols.empty()) return;
    Mat sub(a.rows(), static_cast<int>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) sub.col(static_cast<int>(i)) = a.col(cols[i]);
    const Vec s = sub.colPivHouseholderQr().solve(b);
    for (std::size_t i = 0; i < cols.size(); ++i) z[cols[i]] = s[static_cast<int>(i)];
  };

  for (int outer = 0; outer < 3 * n + 10; ++outer) {
    const Vec w = a.transpose() * (b - a * x);
    int entering = -1;
    double best = tol;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > best) {
        best = w[j];
        entering = j;
      }
    }
    if (entering < 0) break;
    passive[entering] = true;
    Vec z;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      solve_passive(z);
      bool positive = true;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) positive = false;
      }
      if (positive) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= 0.0) alpha = std::min(alpha, x[j] / (x[j] - z[j]));
      }
      x += alpha * (z - x);
      for (int j = 0; j < n; ++j) {
        if (passive[j] && x[j] <= 1e-15) {
          passive[j] = false;
          x[j] = 0.0;
        }
      }
    }
  }
  return x;
}

bool cone_contains(const PolyhedralCone& cone, const Vec& z, double tol) {
  require_dim(cone.dim, z.size(), "cone_contains");
  const double zn = z.norm();
  if (zn == 0.0) return true;
  if (cone.generators.empty()) return false;
  Mat g(cone.dim, static_cast<int>(cone.generators.size()));
  for (std::size_t j = 0; j < cone.generators.size(); ++j) g.col(static_cast<int>(j)) = cone.generators[j];
  const Vec mu = nonnegative_least_squares(g, z);
  return (g * mu - z).norm() <= tol * zn;
}

bool cone_contains(const HalfSpaceCone& cone, const Vec& z, double tol) {
  const int d = cone.domain_dim();
  require_dim(d + cone.codomain_dim(), z.size(), "cone_contains");
  const double lhs = cone.normal.dot(z.tail(cone.codomain_dim()));
  const double rhs = d > 0 ? cone.gradient.dot(z.head(d)) : 0.0;
  return lhs - rhs <= tol * z.norm();
}

bool cone_contains(const Cone& cone, const Vec& z, double tol) {
  return std::visit([&](const auto& c) { return cone_contains(c, z, tol); }, cone);
}

std::vector<Vec> sphere_directions(int dim, int count) {
  std::vector<Vec> dirs;
  if (dim == 1) {
    dirs.push_back(Vec::Ones(1));
    dirs.push_back(-Vec::Ones(1));
    return dirs;
  }
  dirs.reserve(count);
  if (dim == 2) {
    for (int i = 0; i < count; ++i) {
      const double t = 2.0 * std::numbers::pi * (i + 0.5) / count;
      Vec p(2);
      p << std::cos(t), std::sin(t);
      dirs.push_back(p);
    }
  } else if (dim == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
      const double zc = 1.0 - (2.0 * i + 1.0) / count;
      const double r = std::sqrt(std::max(0.0, 1.0 - zc * zc));
      Vec p(3);
      p << r * std::cos(golden * i), r * std::sin(golden * i), zc;
      dirs.push_back(p);
    }
  } else {
    Rng rng(0x5EEDD1CEULL);
    for (int i = 0; i < count; ++i) dirs.push_back(rng.unit_vector(dim));
  }
  return dirs;
}

}  // namespace svderiv
