#include "toricbern/quad.hpp"

#include "toricbern/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace toricbern {

QuadratureSpec QuadratureSpec::defaults_for(int dim) {
  QuadratureSpec spec;
  spec.tolerance = dim <= 1 ? 1e-10 : (dim == 2 ? 1e-8 : 1e-6);
  return spec;
}

void QuadratureSpec::validate() const {
  if (order < 4) throw std::invalid_argument("quadrature order must be >= 4");
  if (!(tolerance > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
  if (max_levels < 1) throw std::invalid_argument("quadrature needs at least one refinement level");
}

// Golub-Welsch on the Jacobi matrix of P^(a,0), then mapped from [-1,1] to [0,1].
void gauss_jacobi(int n, int a, std::vector<double>& nodes, std::vector<double>& weights) {
  if (n < 1) throw std::invalid_argument("gauss_jacobi: need at least one node");
  const double alpha = a;
  const double beta = 0.0;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = 2.0 * k + alpha + beta;
    jac(k, k) = k == 0 ? (beta - alpha) / (alpha + beta + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
    if (k + 1 < n) {
      const double j = k + 1.0;
      const double t = 2.0 * j + alpha + beta;
      const double off = std::sqrt(4.0 * j * (j + alpha) * (j + beta) * (j + alpha + beta) / (t * t * (t + 1.0) * (t - 1.0)));
      jac(k, k + 1) = jac(k + 1, k) = off;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jac);
  const double mu0 = std::pow(2.0, alpha + 1.0) / (alpha + 1.0);
  const double to_unit = std::pow(2.0, alpha + 1.0);
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 + eig.eigenvalues()(i));
    weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0 / to_unit;
  }
}

ReferenceRule simplex_rule(int dim, int order) {
  ReferenceRule rule;
  rule.dim = dim;
  if (dim == 0) {
    rule.points.push_back({});
    rule.weights.push_back(1.0);
    return rule;
  }
  std::vector<std::vector<double>> axis_nodes(static_cast<std::size_t>(dim));
  std::vector<std::vector<double>> axis_weights(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) gauss_jacobi(order, dim - 1 - i, axis_nodes[static_cast<std::size_t>(i)], axis_weights[static_cast<std::size_t>(i)]);

  std::vector<int> idx(static_cast<std::size_t>(dim), 0);
  while (true) {
    std::vector<double> y(static_cast<std::size_t>(dim));
    double remaining = 1.0;
    double w = 1.0;
    for (int i = 0; i < dim; ++i) {
      const double u = axis_nodes[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      y[static_cast<std::size_t>(i)] = remaining * u;
      remaining *= 1.0 - u;
      w *= axis_weights[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    rule.points.push_back(std::move(y));
    rule.weights.push_back(w);
    int i = dim - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == order - 1) idx[static_cast<std::size_t>(i--)] = 0;
    if (i < 0) break;
    ++idx[static_cast<std::size_t>(i)];
  }
  return rule;
}

namespace {

std::vector<Simplex> split(const Simplex& s) {
  const auto& v = s.vertices;
  auto mid = [&](int a, int b) -> Vec { return 0.5 * (v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]); };
  switch (s.order()) {
    case 0: return {s};
    case 1: return {Simplex{{v[0], mid(0, 1)}}, Simplex{{mid(0, 1), v[1]}}};
    case 2: {
      Vec m01 = mid(0, 1), m02 = mid(0, 2), m12 = mid(1, 2);
      return {Simplex{{v[0], m01, m02}}, Simplex{{m01, v[1], m12}}, Simplex{{m02, m12, v[2]}}, Simplex{{m01, m12, m02}}};
    }
    case 3: {
      // Bey's regular refinement: four corner tetrahedra plus the octahedron cut along m02-m13.
      Vec m01 = mid(0, 1), m02 = mid(0, 2), m03 = mid(0, 3), m12 = mid(1, 2), m13 = mid(1, 3), m23 = mid(2, 3);
      return {Simplex{{v[0], m01, m02, m03}}, Simplex{{m01, v[1], m12, m13}}, Simplex{{m02, m12, v[2], m23}},
              Simplex{{m03, m13, m23, v[3]}}, Simplex{{m01, m02, m03, m13}}, Simplex{{m01, m02, m12, m13}},
              Simplex{{m02, m03, m13, m23}}, Simplex{{m02, m12, m13, m23}}};
    }
    default: throw std::logic_error("refine: simplex order above 3");
  }
}

QuadratureResult no_convergence(const char* what, QuadratureResult& r) {
  const auto n = r.level_values.size();
  double prev = n >= 2 ? r.level_values[n - 2] : r.value;
  throw NoConvergence(fmt::format("{}: no convergence after {} levels (last two estimates {:.17g}, {:.17g})", what,
                                  n - 1, prev, r.value),
                      prev, r.value);
}

}  // namespace

std::vector<Simplex> refine(const std::vector<Simplex>& cells, int levels) {
  std::vector<Simplex> current = cells;
  for (int l = 0; l < levels; ++l) {
    std::vector<Simplex> next;
    next.reserve(current.size() * (std::size_t{1} << (current.empty() ? 0 : current.front().order())));
    for (const auto& c : current)
      for (auto& child : split(c)) next.push_back(std::move(child));
    current = std::move(next);
  }
  return current;
}

NodeSet build_nodes(const std::vector<Simplex>& cells, int order, int level) {
  NodeSet out;
  if (cells.empty()) {
    out.cell_offsets.push_back(0);
    return out;
  }
  const int k = cells.front().order();
  const ReferenceRule rule = simplex_rule(k, order);
  const auto fine = refine(cells, level);
  const double ref_volume = [&] {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return 1.0 / f;
  }();
  out.points.reserve(fine.size() * rule.weights.size());
  out.weights.reserve(fine.size() * rule.weights.size());
  out.cell_offsets.reserve(fine.size() + 1);
  out.cell_offsets.push_back(0);
  for (const auto& cell : fine) {
    const double scale = cell.measure() / ref_volume;
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      out.points.push_back(cell.map(rule.points[q]));
      out.weights.push_back(rule.weights[q] * scale);
    }
    out.cell_offsets.push_back(out.points.size());
  }
  return out;
}

QuadratureResult integrate_polytope_detailed(const DelzantPolytope& polytope, const RealFunction& f,
                                             const QuadratureSpec& spec) {
  spec.validate();
  QuadratureResult result;
  for (int level = 0; level <= spec.max_levels; ++level) {
    const NodeSet nodes = build_nodes(polytope.triangulation(), spec.order, level);
    CompensatedSum sum, abs_sum;
    for (std::size_t i = 0; i < nodes.points.size(); ++i) {
      const double v = f(nodes.points[i]) * nodes.weights[i];
      sum += v;
      abs_sum += std::abs(v);
    }
    const double value = sum.value();
    result.level_values.push_back(value);
    result.value = value;
    result.level = level;
    if (abs_sum.value() == 0.0) {
      result.error_estimate = 0.0;
      return result;
    }
    if (level > 0) {
      const double err = std::abs(value - result.level_values[static_cast<std::size_t>(level - 1)]);
      result.error_estimates.push_back(err);
      result.error_estimate = err;
      if (err <= spec.tolerance * abs_sum.value()) return result;
    }
  }
  return no_convergence("integrate_polytope", result);
}

double integrate_polytope(const DelzantPolytope& polytope, const RealFunction& f, const QuadratureSpec& spec) {
  return integrate_polytope_detailed(polytope, f, spec).value;
}

namespace {

double log_integral_on(const NodeSet& nodes, const std::vector<double>& exponents) {
  LogSumExp total;
  std::vector<double> terms;
  for (std::size_t c = 0; c + 1 < nodes.cell_offsets.size(); ++c) {
    terms.clear();
    for (std::size_t i = nodes.cell_offsets[c]; i < nodes.cell_offsets[c + 1]; ++i) {
      terms.push_back(exponents[i] + std::log(nodes.weights[i]));
    }
    total.add(log_sum_exp(terms));
  }
  return total.value();
}

}  // namespace

QuadratureResult integrate_log_detailed(const DelzantPolytope& polytope, const RealFunction& exponent,
                                        const QuadratureSpec& spec) {
  spec.validate();
  QuadratureResult result;
  std::vector<double> values;
  for (int level = 0; level <= spec.max_levels; ++level) {
    const NodeSet nodes = build_nodes(polytope.triangulation(), spec.order, level);
    values.resize(nodes.points.size());
    for (std::size_t i = 0; i < nodes.points.size(); ++i) values[i] = exponent(nodes.points[i]);
    const double value = log_integral_on(nodes, values);
    result.level_values.push_back(value);
    result.value = value;
    result.level = level;
    if (level > 0) {
      const double err = std::abs(value - result.level_values[static_cast<std::size_t>(level - 1)]);
      result.error_estimates.push_back(err);
      result.error_estimate = err;
      if (err <= spec.tolerance) return result;
    }
  }
  return no_convergence("integrate_log", result);
}

double integrate_log(const DelzantPolytope& polytope, const RealFunction& exponent, const QuadratureSpec& spec) {
  return integrate_log_detailed(polytope, exponent, spec).value;
}

std::vector<double> integrate_log_family(const DelzantPolytope& polytope, std::size_t count,
                                         const ExponentFamily& exponents, const QuadratureSpec& spec) {
  spec.validate();
  std::vector<double> previous(count, 0.0), current(count, 0.0), done(count, 0.0);
  std::vector<bool> converged(count, false);
  std::size_t remaining = count;
  std::vector<double> row(count);
  std::vector<std::vector<double>> columns(count);
  for (int level = 0; level <= spec.max_levels && remaining > 0; ++level) {
    const NodeSet nodes = build_nodes(polytope.triangulation(), spec.order, level);
    for (auto& col : columns) col.assign(nodes.points.size(), 0.0);
    for (std::size_t i = 0; i < nodes.points.size(); ++i) {
      exponents(nodes.points[i], row);
      for (std::size_t a = 0; a < count; ++a) columns[a][i] = row[a];
    }
    for (std::size_t a = 0; a < count; ++a) {
      if (converged[a]) continue;
      current[a] = log_integral_on(nodes, columns[a]);
      if (level > 0 && std::abs(current[a] - previous[a]) <= spec.tolerance) {
        converged[a] = true;
        done[a] = current[a];
        --remaining;
      }
      previous[a] = current[a];
    }
  }
  if (remaining > 0) {
    for (std::size_t a = 0; a < count; ++a) {
      if (!converged[a]) {
        throw NoConvergence(fmt::format("integrate_log_family: entry {} did not converge in {} levels", a, spec.max_levels),
                            previous[a], current[a]);
      }
    }
  }
  return done;
}

double integrate_facet_leray(const DelzantPolytope& polytope, int r, const RealFunction& f, const QuadratureSpec& spec) {
  spec.validate();
  const FacetChart chart = facet_chart(polytope, r);
  if (polytope.dim() == 1) return f(chart.cells.front().vertices.front()) * chart.leray_density;
  double previous = 0.0;
  double value = 0.0;
  for (int level = 0; level <= spec.max_levels; ++level) {
    const NodeSet nodes = build_nodes(chart.cells, spec.order, level);
    CompensatedSum sum, abs_sum;
    for (std::size_t i = 0; i < nodes.points.size(); ++i) {
      const double v = f(nodes.points[i]) * nodes.weights[i];
      sum += v;
      abs_sum += std::abs(v);
    }
    value = sum.value() * chart.leray_density;
    if (abs_sum.value() == 0.0) return 0.0;
    if (level > 0 && std::abs(value - previous) <= spec.tolerance * abs_sum.value() * chart.leray_density) return value;
    previous = value;
  }
  throw NoConvergence(fmt::format("integrate_facet_leray: facet {} did not converge", r), previous, value);
}

double integrate_boundary_leray(const DelzantPolytope& polytope, const RealFunction& f, const QuadratureSpec& spec) {
  CompensatedSum total;
  for (int r = 0; r < polytope.facet_count(); ++r) total += integrate_facet_leray(polytope, r, f, spec);
  return total.value();
}

}  // namespace toricbern
