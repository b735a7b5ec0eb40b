#pragma once

#include "toricbern/expr.hpp"
#include "toricbern/numeric.hpp"
#include "toricbern/polytope.hpp"

#include <optional>
#include <vector>

namespace toricbern {

/// A point of the open orbit seen in both real charts: action coordinate x in
/// the interior of P and log coordinate rho = grad u(x).
struct MomentChart {
  Vec x;
  Vec rho;
};

struct ConvexityReport {
  double min_eigenvalue = 0.0;
  Vec argmin;
  int samples = 0;
  bool pass = false;
};

/// Toric Kähler metric given by its symplectic potential
///   u(x) = sum_r ell_r(x) log ell_r(x) + g(x)
/// on a Delzant polytope. The perturbation g must be smooth up to the boundary.
class ToricMetric {
public:
  /// Canonical (Guillemin) metric, g = 0.
  explicit ToricMetric(DelzantPolytope polytope);
  /// Throws DimensionMismatch if g's dimension differs from the polytope's and
  /// DomainError if g is not finite on a validation grid over the closed polytope.
  ToricMetric(DelzantPolytope polytope, Expr perturbation);
  /// Empty text means g = 0.
  static ToricMetric from_string(DelzantPolytope polytope, std::string_view perturbation);

  const DelzantPolytope& polytope() const noexcept { return polytope_; }
  int dim() const noexcept { return polytope_.dim(); }
  const Expr& perturbation() const noexcept { return g_; }
  bool is_canonical() const noexcept { return canonical_; }

  // Perturbation and its cached symbolic derivatives.
  double g(const Vec& x) const;
  Vec grad_g(const Vec& x) const;
  Mat hess_g(const Vec& x) const;
  /// d/dx_i of hess_g.
  Mat third_g(const Vec& x, int i) const;
  /// d^2/dx_i dx_j of hess_g.
  Mat fourth_g(const Vec& x, int i, int j) const;

  /// Closed polytope; 0 log 0 = 0. Throws OutsidePolytope.
  double u(const Vec& x) const;
  /// rho = sum_r (1 + log ell_r) v_r + grad g. Throws OutsidePolytope, BoundaryPoint.
  Vec grad_u(const Vec& x) const;
  /// G = sum_r v_r v_r^T / ell_r + hess g.
  Mat hessian_u(const Vec& x) const;
  /// H = G^{-1}. Throws NotPositiveDefinite when G is not positive definite at x.
  Mat inverse_hessian(const Vec& x) const;

  /// Solves grad u(x) = rho by damped Newton from the centroid.
  /// Throws ConvergenceFailure after 200 iterations or on stagnation.
  Vec moment_inverse(const Vec& rho) const;
  MomentChart chart_from_rho(const Vec& rho) const { return {moment_inverse(rho), rho}; }
  MomentChart chart_from_x(const Vec& x) const { return {x, grad_u(x)}; }

  /// Legendre transform <x, rho> - u(x) at x = moment_inverse(rho).
  double kahler_potential(const Vec& rho) const;

  /// Abreu's formula S = -sum_{jk} d^2 H_jk / dx_j dx_k, with the outer
  /// derivatives taken by central differences of the exact H. The step is
  /// min(1e-4, d/4) where d is the distance from x to the boundary.
  double scalar_curvature(const Vec& x) const;
  /// Same quantity from the closed-form derivatives of H = G^{-1}
  /// (uses third and fourth derivatives of g). Accurate up to the boundary.
  double scalar_curvature_exact(const Vec& x) const;

  /// Minimum eigenvalue of G over an interior grid with `resolution` cells per axis.
  ConvexityReport check_convexity(int resolution) const;

private:
  void require_interior(const Vec& x, const char* who) const;
  std::size_t flat(std::initializer_list<int> idx) const;

  DelzantPolytope polytope_;
  Expr g_;
  bool canonical_ = true;
  std::vector<Expr> d1_;  // m
  std::vector<Expr> d2_;  // m^2
  std::vector<Expr> d3_;  // m^3
  std::vector<Expr> d4_;  // m^4
};

}  // namespace toricbern
