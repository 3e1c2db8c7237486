#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "svderiv/convex_geometry.hpp"
#include "svderiv/rng.hpp"
#include "svderiv/set_maps.hpp"

namespace svderiv {

class DerivativeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Steps h_k = h0 * gamma^k, k = 0..count-1.
struct LimitSchedule {
  double h0 = 0.1;
  double gamma = 0.5;
  int count = 20;

  /// Throws DerivativeError unless h0 > 0, 0 < gamma < 1 and count >= 1.
  void validate() const;
  double step(int k) const;
};

inline constexpr double kDefaultMembershipTol = 1e-4;
/// Number of trailing schedule points used by the membership decision.
inline constexpr int kTailWindow = 5;

struct DerivativeProbe {
  Vec u;
  Vec v;
  std::vector<std::pair<double, double>> residuals;  // (h_k, r_k)
};

enum class Membership { kMember, kNonMember, kInconclusive };

const char* to_string(Membership m);

/// Diagnostics of the decision rule on one residual curve.
struct MembershipDecision {
  Membership verdict = Membership::kNonMember;
  double tail_min = 0.0;
  double max_residual = 0.0;
  /// Least-squares slope of log r against log h over residuals above the
  /// rounding floor; +infinity when fewer than two such points exist.
  double slope = 0.0;
};

/// r_k = dist(ybar + h_k v, F(xbar + h_k u)) / h_k along the schedule.
DerivativeProbe residual_curve(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, const Vec& v,
                               const LimitSchedule& schedule);

/// Member when the tail minimum is <= tol and either the residuals are <= tol
/// everywhere or the log-log slope is nonnegative. Borderline curves (small
/// but growing, or decaying but not yet under tol) are Inconclusive.
MembershipDecision decide_membership(const DerivativeProbe& probe, const GraphPoint& gp, double tol);

Membership membership(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, const Vec& v,
                      const LimitSchedule& schedule, double tol);

/// True only for Membership::kMember.
bool derivative_membership(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, const Vec& v,
                           const LimitSchedule& schedule, double tol);

struct GraphPair {
  Vec u;
  Vec v;
};

/// Seeded sampling of accepted pairs. Attempt i draws u from the unit sphere
/// scaled by 0.5, 1, 2 (cycling) and a Gaussian start v, then iterates
/// v <- (P_{F(xbar + h_k u)}(ybar + h_k v) - ybar) / h_k along the schedule;
/// the candidate is the mean of the last iterates and is kept only when it is
/// a member. Attempts whose evaluation fails are dropped.
std::vector<GraphPair> sample_derivative_graph(const SetValuedMap& map, const GraphPoint& gp, int budget,
                                               const LimitSchedule& schedule, double tol,
                                               std::uint64_t seed = 0);

/// Graph {(u, L u + c) : c in cone}; `linear` is l x d.
struct AffinePlusCone {
  Mat linear;
  Cone cone;
};

/// Cone spanned by sampled (u, v) pairs in R^(d+l). Only an inner
/// approximation, reported as empirical.
struct EmpiricalCone {
  PolyhedralCone hull;
};

struct DerivativeCone {
  std::variant<AffinePlusCone, HalfSpaceCone, EmpiricalCone> rep;

  bool is_empirical() const { return std::holds_alternative<EmpiricalCone>(rep); }
  /// Tolerance relative to |(u, v)|.
  bool contains(const Vec& u, const Vec& v, double tol) const;
};

/// Draws a pair from the graph of the cone (standard Gaussian based).
GraphPair sample_cone(const DerivativeCone& cone, int domain_dim, int codomain_dim, Rng& rng);

/// L = sum_j lambda_j J_j(xbar) with lambda the barycentric coordinates of
/// ybar, cone = tangent cone of F(xbar) at ybar. Singleton and Generated maps.
DerivativeCone closed_form_derivative(const SetValuedMap& map, const GraphPoint& gp);

/// {(u, w) : <g, u> >= <pbar, w>} where pbar is the unit normal at ybar and
/// g the central difference in x of sigma_{F(x)}(pbar).
HalfSpaceCone halfspace_derivative(const SetValuedMap& map, const GraphPoint& gp,
                                   double fd_step = kJacobianFdStep);

struct FailedCheck {
  enum class Kind { kOrigin, kScaling, kMidpoint };
  Kind kind = Kind::kOrigin;
  GraphPair first;
  GraphPair second;
  GraphPair candidate;
};

const char* to_string(FailedCheck::Kind kind);

struct ConvexProcessReport {
  bool origin_ok = true;
  int scaling_checks = 0;
  int scaling_failures = 0;
  int midpoint_checks = 0;
  int midpoint_failures = 0;
  std::vector<FailedCheck> failures;
  std::string warning;

  int total_failures() const { return (origin_ok ? 0 : 1) + scaling_failures + midpoint_failures; }
  bool pass() const { return total_failures() == 0; }
};

using MembershipFn = std::function<bool(const Vec& u, const Vec& v)>;

/// Checks 0 in T(0), then per trial one scaling check (lambda alternating 0.5
/// and 2) and one midpoint check on seeded random samples. Zero trials pass
/// vacuously with a warning. Throws DerivativeError for empty samples.
ConvexProcessReport verify_convex_process(const std::vector<GraphPair>& samples, const MembershipFn& membership,
                                          int trials, std::uint64_t seed = 0);

struct ClassifierVerdict {
  enum class Status { kDifferentiable, kNotDifferentiable, kInconclusive };
  Status status = Status::kInconclusive;
  std::optional<DerivativeCone> cone;
  std::optional<FailedCheck> witness;
  /// Residual curve of the failing candidate.
  std::optional<DerivativeProbe> witness_probe;
  std::string reason;
  ConvexProcessReport report;
  int accepted_samples = 0;
};

const char* to_string(ClassifierVerdict::Status status);

struct ClassifierOptions {
  int trials = 24;
  std::uint64_t seed = 0;
};

ClassifierVerdict classify_differentiability(const SetValuedMap& map, const GraphPoint& gp, int budget,
                                             const LimitSchedule& schedule, double tol,
                                             const ClassifierOptions& options = {});

struct CompatibilityReport {
  /// Largest tail residual of (u, J u) over the probed u.
  double membership_deviation = 0.0;
  /// Largest |v - J u| over sampled pairs.
  double sampled_deviation = 0.0;
  int probed = 0;
  int sampled = 0;
  bool pass = false;
};

/// Both directions of the compatibility of DF(xbar, f(xbar)) with df(xbar):
/// (u, J u) is a member for the basis, their negatives and random u, and every
/// sampled pair lies on the graph of J within tol.
CompatibilityReport compatibility_check(const VecFn& f, const JacobianFn& jacobian, const Vec& xbar, int codomain_dim,
                                        const LimitSchedule& schedule, double tol, int budget = 12,
                                        std::uint64_t seed = 0);

/// v in DF(xbar, ybar)(u) with |v| <= k |u| (1 + tol), found as the tail mean
/// of (P_{F(xbar + h_k u)}(ybar) - ybar) / h_k. Throws DerivativeError when
/// the candidate fails, which indicates k is below the local Lipschitz constant.
Vec intersection_witness(const SetValuedMap& map, const GraphPoint& gp, const Vec& u, double k,
                         const LimitSchedule& schedule, double tol);

}  // namespace svderiv
