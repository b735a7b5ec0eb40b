#include "toricbern/asymptotics.hpp"

#include "toricbern/errors.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace toricbern {

std::string format_real(double v) { return fmt::format("{:.17g}", v); }

double L1_apply(const ToricMetric& metric, const Expr& f, const Vec& x) {
  const int m = metric.dim();
  if (f.dim() != m) throw DimensionMismatch("L1_apply: test function has the wrong dimension");
  const Mat h = metric.inverse_hessian(x);
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    const Expr fj = f.derivative(j);
    for (int k = 0; k < m; ++k) total += h(j, k) * fj.derivative(k)(x);
  }
  return 0.5 * total;
}

double L2_classical_apply(const ToricMetric& metric, const Expr& f, const Vec& x) {
  if (metric.dim() != 1 || !metric.is_canonical() || !metric.polytope().is_standard_simplex()) {
    throw UnsupportedMetric("L2_classical_apply needs the canonical metric on [0, 1]");
  }
  if (f.dim() != 1) throw DimensionMismatch("L2_classical_apply: test function has the wrong dimension");
  const double t = x[0];
  const Expr d3 = f.derivative(0).derivative(0).derivative(0);
  const Expr d4 = d3.derivative(0);
  const double q = t - t * t;
  return q * (1.0 - 2.0 * t) / 6.0 * d3(x) + q * q / 8.0 * d4(x);
}

double bergman_a1(const ToricMetric& metric, const Vec& x) { return 0.5 * metric.scalar_curvature(x); }

double riemann_sum(const DelzantPolytope& polytope, const Expr& f, std::int64_t n) {
  if (f.dim() != polytope.dim()) throw DimensionMismatch("riemann_sum: test function has the wrong dimension");
  const auto lattice = lattice_points(polytope, n);
  const double nd = static_cast<double>(n);
  CompensatedSum sum;
  Vec p(polytope.dim());
  for (const auto& a : lattice.points) {
    for (int j = 0; j < polytope.dim(); ++j) p[j] = static_cast<double>(a[static_cast<std::size_t>(j)]) / nd;
    sum += f(p);
  }
  return sum.value();
}

double em_two_term(const DelzantPolytope& polytope, const Expr& f, const QuadratureSpec& spec, std::int64_t n) {
  if (f.dim() != polytope.dim()) throw DimensionMismatch("em_two_term: test function has the wrong dimension");
  const int m = polytope.dim();
  const double nd = static_cast<double>(n);
  const double interior = integrate_polytope(polytope, [&](const Vec& x) { return f(x); }, spec);
  const double boundary = integrate_boundary_leray(polytope, [&](const Vec& x) { return f(x); }, spec);
  return std::pow(nd, m) * interior + 0.5 * std::pow(nd, m - 1) * boundary;
}

DonaldsonTerms donaldson_terms(const ToricMetric& metric, const Expr& f, const QuadratureSpec& spec) {
  const int m = metric.dim();
  if (f.dim() != m) throw DimensionMismatch("donaldson_terms: test function has the wrong dimension");
  std::vector<Expr> second;
  for (int j = 0; j < m; ++j) {
    const Expr fj = f.derivative(j);
    for (int k = 0; k < m; ++k) second.push_back(fj.derivative(k));
  }
  const auto& P = metric.polytope();
  DonaldsonTerms t;
  t.hessian_term = integrate_polytope(
      P,
      [&](const Vec& x) {
        const Mat h = metric.inverse_hessian(x);
        double s = 0.0;
        for (int j = 0; j < m; ++j)
          for (int k = 0; k < m; ++k) s += h(j, k) * second[static_cast<std::size_t>(j * m + k)](x);
        return s;
      },
      spec);
  t.curvature_term = integrate_polytope(P, [&](const Vec& x) { return -metric.scalar_curvature_exact(x) * f(x); }, spec);
  t.boundary_term = integrate_boundary_leray(P, [&](const Vec& x) { return f(x); }, spec);
  return t;
}

double donaldson_residual(const ToricMetric& metric, const Expr& f, const QuadratureSpec& spec) {
  return donaldson_terms(metric, f, spec).residual();
}

double measure_moments(const BernsteinEvaluator& evaluator, const Vec& x, const IntVec& beta) {
  const int m = evaluator.metric().dim();
  if (static_cast<int>(beta.size()) != m) throw DimensionMismatch("measure_moments: beta has the wrong dimension");
  std::int64_t order = 0;
  for (auto b : beta) {
    if (b < 0) throw std::invalid_argument("measure_moments: negative multi-index");
    order += b;
  }
  if (order > 4) throw std::invalid_argument("measure_moments: |beta| must be at most 4");
  const auto mu = evaluator.measure(x);
  const double nd = static_cast<double>(mu.dilation);
  CompensatedSum sum;
  for (std::size_t i = 0; i < mu.support.size(); ++i) {
    double term = mu.probabilities[i];
    if (term == 0.0) continue;
    for (int j = 0; j < m; ++j) {
      const double d = static_cast<double>(mu.support[i][static_cast<std::size_t>(j)]) / nd - x[j];
      for (std::int64_t p = 0; p < beta[static_cast<std::size_t>(j)]; ++p) term *= d;
    }
    sum += term;
  }
  return sum.value();
}

double estimate_order(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 3) throw std::invalid_argument("estimate_order needs at least three samples");
  double sx = 0.0, sy = 0.0;
  for (const auto& [n, r] : samples) {
    if (!(n > 0.0)) throw std::invalid_argument("estimate_order: N must be positive");
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw NonPositiveResidual(fmt::format("estimate_order: residual {:.17g} at N = {} is not positive", r, n));
    }
    sx += std::log(n);
    sy += std::log(r);
  }
  const double k = static_cast<double>(samples.size());
  const double mx = sx / k, my = sy / k;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, r] : samples) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(r) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("estimate_order: all N are equal");
  return sxy / sxx;
}

void ExpansionReport::add(std::int64_t n, double value, double reference) {
  if (!rows.empty() && n <= rows.back().n) throw std::invalid_argument("ExpansionReport: N must be strictly increasing");
  const double residual = std::abs(value - reference);
  if (!std::isfinite(residual)) throw std::invalid_argument("ExpansionReport: residual is not finite");
  rows.push_back({n, value, reference, residual});
}

void ExpansionReport::fit() {
  std::vector<std::pair<double, double>> samples;
  const std::size_t first = rows.size() > 3 ? rows.size() - 3 : 0;
  for (std::size_t i = first; i < rows.size(); ++i) samples.emplace_back(static_cast<double>(rows[i].n), rows[i].residual);
  fitted_order = estimate_order(samples);
  pass = fitted_order <= expected_order + slack;
}

std::string ExpansionReport::to_csv() const {
  std::string out = "N,value,reference,residual\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.n, format_real(r.value), format_real(r.reference), format_real(r.residual));
  }
  return out;
}

std::string ExpansionReport::to_json() const {
  nlohmann::json j = {{"name", name}, {"fitted", fitted_order}, {"expected", expected_order}, {"pass", pass}};
  return j.dump();
}

}  // namespace toricbern
