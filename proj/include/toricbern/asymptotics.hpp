#pragma once

#include "toricbern/bernstein.hpp"
#include "toricbern/expr.hpp"
#include "toricbern/metric.hpp"
#include "toricbern/polytope.hpp"
#include "toricbern/quad.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace toricbern {

/// First correction 1/2 sum_{jk} H_jk(x) d_j d_k f(x). Throws OutsidePolytope.
double L1_apply(const ToricMetric& metric, const Expr& f, const Vec& x);

/// Second correction of the classical Bernstein polynomials on [0, 1]:
///   (x - x^2)(1 - 2x)/6 f''' + (x - x^2)^2/8 f''''.
/// Throws UnsupportedMetric unless the metric is the canonical interval.
double L2_classical_apply(const ToricMetric& metric, const Expr& f, const Vec& x);

/// a_1 = S/2 from the finite-difference scalar curvature.
double bergman_a1(const ToricMetric& metric, const Vec& x);

/// Sum of f(alpha/N) over NP ∩ Z^m.
double riemann_sum(const DelzantPolytope& polytope, const Expr& f, std::int64_t n);

/// N^m int_P f + N^{m-1}/2 int_{dP} f dsigma (Leray measure).
double em_two_term(const DelzantPolytope& polytope, const Expr& f, const QuadratureSpec& spec, std::int64_t n);

/// The three integrals of the integration-by-parts identity
///   int H_jk f_jk = -int S f + int_{dP} f dsigma.
struct DonaldsonTerms {
  double hessian_term = 0.0;    ///< int sum H_jk f_jk
  double curvature_term = 0.0;  ///< int (H_jk)_jk f = -int S f
  double boundary_term = 0.0;   ///< int_{dP} f dsigma
  double residual() const { return std::abs(hessian_term - curvature_term - boundary_term); }
};
DonaldsonTerms donaldson_terms(const ToricMetric& metric, const Expr& f, const QuadratureSpec& spec);
double donaldson_residual(const ToricMetric& metric, const Expr& f, const QuadratureSpec& spec);

/// sum_alpha (alpha/N - x)^beta p_alpha(x), |beta| <= 4.
double measure_moments(const BernsteinEvaluator& evaluator, const Vec& x, const IntVec& beta);

/// Least-squares slope of log(residual) against log(N). Needs >= 3 samples
/// with positive residuals, else NonPositiveResidual / std::invalid_argument.
double estimate_order(const std::vector<std::pair<double, double>>& samples);

struct ExpansionRow {
  std::int64_t n = 0;
  double value = 0.0;
  double reference = 0.0;
  double residual = 0.0;
};

/// Residual table for one convergence experiment. The order is fitted on the
/// largest three N; the report passes when fitted <= expected + slack.
struct ExpansionReport {
  std::string name;
  std::vector<ExpansionRow> rows;
  double expected_order = 0.0;
  double slack = 0.0;
  double fitted_order = 0.0;
  bool pass = false;

  /// Appends a row; N must exceed the previous one and the residual must be finite.
  void add(std::int64_t n, double value, double reference);
  /// Fits the order and sets `pass`. Throws NonPositiveResidual.
  void fit();
  /// Header "N,value,reference,residual", 17 significant digits.
  std::string to_csv() const;
  /// { "name", "fitted", "expected", "pass" }
  std::string to_json() const;
};

/// Formats a double with 17 significant digits.
std::string format_real(double v);

}  // namespace toricbern
