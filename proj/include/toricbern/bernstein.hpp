#pragma once

#include "toricbern/expr.hpp"
#include "toricbern/metric.hpp"
#include "toricbern/numeric.hpp"
#include "toricbern/polytope.hpp"
#include "toricbern/quad.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace toricbern {

/// E(alpha, x) in the facet form, finite on the closed polytope except where a
/// facet with positive weight vanishes (then -inf). Throws OutsidePolytope.
double weight_exponent(const ToricMetric& metric, std::int64_t n, std::span<const std::int64_t> alpha, const Vec& x);

/// log of the integral over P of exp(E(alpha, .)). Throws NoConvergence.
double norming_constant(const ToricMetric& metric, std::int64_t n, std::span<const std::int64_t> alpha,
                        const QuadratureSpec& spec);

/// log((N - |alpha|)! alpha_1! ... alpha_m! / (N + m)!). Throws NotSimplex when
/// `polytope` is not the standard simplex.
double norming_closed_form_simplex(const DelzantPolytope& polytope, std::int64_t n, std::span<const std::int64_t> alpha);
/// Same value without the polytope check.
double norming_closed_form_simplex(std::int64_t n, std::span<const std::int64_t> alpha);

enum class NormingMethod { ClosedForm, Quadrature };

/// log Q(alpha) for every lattice point of NP, aligned with lattice().points.
class NormingTable {
public:
  /// Closed form on the canonical standard simplex (with five entries checked
  /// against quadrature to 1e-7), quadrature otherwise.
  static NormingTable build(const ToricMetric& metric, std::int64_t n, const QuadratureSpec& spec);
  /// Quadrature for every entry regardless of the polytope.
  static NormingTable build_quadrature(const ToricMetric& metric, std::int64_t n, const QuadratureSpec& spec);

  std::int64_t dilation() const noexcept { return lattice_.dilation; }
  const LatticeSet& lattice() const noexcept { return lattice_; }
  std::size_t size() const noexcept { return log_q_.size(); }
  double log_q(std::size_t i) const { return log_q_.at(i); }
  /// Throws std::out_of_range when alpha is not a lattice point of NP.
  double log_q(const IntVec& alpha) const;
  NormingMethod method(std::size_t i) const { return methods_.at(i); }
  /// Largest |difference| seen by the closed-form cross-check (0 if not run).
  double cross_check_error() const noexcept { return cross_check_error_; }

  /// { "N": n, "entries": [ { "alpha": [...], "logQ": v, "method": "cf" | "quad" } ] }
  std::string to_json() const;
  /// Throws std::invalid_argument when the document does not match NP.
  static NormingTable from_json(const DelzantPolytope& polytope, std::string_view text);

private:
  NormingTable() = default;
  void index();

  LatticeSet lattice_;
  std::vector<double> log_q_;
  std::vector<NormingMethod> methods_;
  std::map<IntVec, std::size_t> lookup_;
  double cross_check_error_ = 0.0;
};

/// Probabilities p_alpha over the lattice points of NP at a point x.
struct EmpiricalMeasure {
  Vec x;
  std::int64_t dilation = 0;
  std::vector<IntVec> support;
  std::vector<double> probabilities;
};

/// Normalized Bernstein operator of a toric metric at level N. Immutable after
/// construction; all member functions are safe to call concurrently.
class BernsteinEvaluator {
public:
  BernsteinEvaluator(ToricMetric metric, NormingTable table);
  static BernsteinEvaluator build(const ToricMetric& metric, std::int64_t n, const QuadratureSpec& spec);

  const ToricMetric& metric() const noexcept { return metric_; }
  const NormingTable& table() const noexcept { return table_; }
  std::int64_t dilation() const noexcept { return table_.dilation(); }
  std::size_t lattice_size() const noexcept { return table_.size(); }

  /// E(alpha, x) - log Q(alpha) for every lattice point, in lattice order.
  std::vector<double> log_weights(const Vec& x) const;

  /// log of the Bergman diagonal D(x).
  double log_denominator(const Vec& x) const;
  double denominator(const Vec& x) const { return std::exp(log_denominator(x)); }

  /// Sum of f(alpha/N) p_alpha(x).
  double evaluate(const Expr& f, const Vec& x) const;
  /// Same with f(alpha/N) supplied in lattice order.
  double evaluate(std::span<const double> samples, const Vec& x) const;

  /// Unnormalized sum of f(alpha/N) exp(E - log Q) = D(x) * B f(x).
  double numerator(const Expr& f, const Vec& x) const;
  /// log of the numerator. Throws DomainError unless the numerator is positive.
  double log_numerator(const Expr& f, const Vec& x) const;

  EmpiricalMeasure measure(const Vec& x) const;

  /// Window radius c * sqrt(log N / N) in the max norm.
  double window_radius(double c) const;
  /// Lattice indices summed by evaluate_truncated: the window plus every
  /// alpha within 2/N of x.
  std::vector<std::size_t> window(const Vec& x, double c) const;
  /// Sum restricted to window(x, c), renormalized over the window.
  double evaluate_truncated(const Expr& f, const Vec& x, double c = 10.0) const;

  /// numerator / |NP ∩ Z^m|.
  double evaluate_dimension_normalized(const Expr& f, const Vec& x) const;

  /// f(alpha/N) for every lattice point.
  std::vector<double> sample(const Expr& f) const;

private:
  struct Prepared {
    std::vector<double> log_ell;  // per facet, -inf on the facet
    double offset = 0.0;          // N(g - <x, grad g>) - N <x, vbar>
    Vec linear;                   // vbar + grad g
  };
  Prepared prepare(const Vec& x) const;
  double log_weight(const Prepared& p, std::size_t i) const;
  double weighted_sum(std::span<const double> samples, const Vec& x, const std::vector<std::size_t>* subset) const;

  ToricMetric metric_;
  NormingTable table_;
  std::vector<Vec> nodes_;                 // alpha / N
  std::vector<Vec> alphas_;                // alpha as reals
  std::vector<std::vector<double>> coef_;  // N ell_r(alpha / N)
};

}  // namespace toricbern
