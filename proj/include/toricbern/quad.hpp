#pragma once

#include "toricbern/numeric.hpp"
#include "toricbern/polytope.hpp"

#include <functional>
#include <span>
#include <vector>

namespace toricbern {

struct QuadratureSpec {
  int order = 16;        ///< Gauss points per collapsed axis
  int max_levels = 8;    ///< dyadic refinement levels after level 0
  double tolerance = 1e-10;

  /// order 16, 8 levels, tolerance 1e-10 / 1e-8 / 1e-6 for m = 1 / 2 / 3.
  static QuadratureSpec defaults_for(int dim);
  /// Throws std::invalid_argument unless order >= 4 and tolerance > 0.
  void validate() const;
};

/// Value of the finest level plus the per-level history.
struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int level = 0;
  std::vector<double> level_values;
  std::vector<double> error_estimates;  ///< |I_L - I_{L-1}| for L >= 1
};

using RealFunction = std::function<double(const Vec&)>;

/// Reference rule on the k-simplex {y >= 0, sum y <= 1}: conical product of
/// Gauss-Jacobi rules, exact for total degree 2*order - 1. Weights sum to 1/k!.
struct ReferenceRule {
  int dim = 0;
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
};
ReferenceRule simplex_rule(int dim, int order);

/// Gauss-Jacobi nodes/weights on [0,1] for the weight (1-u)^a.
void gauss_jacobi(int n, int a, std::vector<double>& nodes, std::vector<double>& weights);

/// Splits a simplex into 2^k congruent children per level (midpoint subdivision).
std::vector<Simplex> refine(const std::vector<Simplex>& cells, int levels);

/// Quadrature nodes grouped by cell.
struct NodeSet {
  std::vector<Vec> points;
  std::vector<double> weights;
  std::vector<std::size_t> cell_offsets;  ///< size = cells + 1
};
NodeSet build_nodes(const std::vector<Simplex>& cells, int order, int level);

/// Integral over P of f. Converges when two successive levels agree within
/// tolerance * integral of |f|. Throws NoConvergence.
QuadratureResult integrate_polytope_detailed(const DelzantPolytope& polytope, const RealFunction& f,
                                             const QuadratureSpec& spec);
double integrate_polytope(const DelzantPolytope& polytope, const RealFunction& f, const QuadratureSpec& spec);

/// log of the integral over P of exp(E). Each cell is shifted by its own
/// maximum and cells are combined by log-sum-exp; levels must agree within
/// `tolerance` in log (i.e. relatively). Throws NoConvergence.
QuadratureResult integrate_log_detailed(const DelzantPolytope& polytope, const RealFunction& exponent,
                                        const QuadratureSpec& spec);
double integrate_log(const DelzantPolytope& polytope, const RealFunction& exponent, const QuadratureSpec& spec);

/// Many log-integrals sharing the same nodes. `exponents(x, out)` fills out[i]
/// with E_i(x). Each entry converges independently.
using ExponentFamily = std::function<void(const Vec&, std::span<double>)>;
std::vector<double> integrate_log_family(const DelzantPolytope& polytope, std::size_t count,
                                         const ExponentFamily& exponents, const QuadratureSpec& spec);

/// Integral of f over facet r against the Leray measure (Euclidean / |v_r|).
double integrate_facet_leray(const DelzantPolytope& polytope, int r, const RealFunction& f, const QuadratureSpec& spec);
/// Sum over all facets.
double integrate_boundary_leray(const DelzantPolytope& polytope, const RealFunction& f, const QuadratureSpec& spec);

}  // namespace toricbern
