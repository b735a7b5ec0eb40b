#include "toricbern/metric.hpp"

#include "toricbern/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace toricbern {

namespace {

// Closed-domain slack for points such as alpha/N that sit on a facet.
constexpr double kBoundarySlack = 1e-12;

std::string point_string(const Vec& x) {
  std::string s = "(";
  for (int j = 0; j < x.size(); ++j) s += fmt::format("{}{:.6g}", j ? ", " : "", x[j]);
  return s + ")";
}

}  // namespace

ToricMetric::ToricMetric(DelzantPolytope polytope)
    : ToricMetric(polytope, Expr::constant(0.0, polytope.dim())) {}

ToricMetric::ToricMetric(DelzantPolytope polytope, Expr perturbation)
    : polytope_(std::move(polytope)), g_(std::move(perturbation)) {
  const int m = polytope_.dim();
  if (g_.dim() != m) {
    throw DimensionMismatch(fmt::format("perturbation has dimension {}, polytope {}", g_.dim(), m));
  }
  canonical_ = g_.is_zero();

  const std::size_t m1 = static_cast<std::size_t>(m);
  d1_.reserve(m1);
  for (int i = 0; i < m; ++i) d1_.push_back(g_.derivative(i));
  // Mixed partials are built along sorted index paths and shared by symmetry.
  d2_.assign(m1 * m1, Expr::constant(0.0, m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) d2_[flat({i, j})] = d2_[flat({j, i})] = d1_[static_cast<std::size_t>(i)].derivative(j);
  d3_.assign(m1 * m1 * m1, Expr::constant(0.0, m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      for (int k = j; k < m; ++k) {
        Expr e = d2_[flat({i, j})].derivative(k);
        for (auto [a, b, c] : {std::array{i, j, k}, std::array{i, k, j}, std::array{j, i, k}, std::array{j, k, i},
                               std::array{k, i, j}, std::array{k, j, i}})
          d3_[flat({a, b, c})] = e;
      }
  d4_.assign(m1 * m1 * m1 * m1, Expr::constant(0.0, m));
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      for (int k = j; k < m; ++k)
        for (int l = k; l < m; ++l) {
          Expr e = d3_[flat({i, j, k})].derivative(l);
          std::array<int, 4> idx{i, j, k, l};
          std::sort(idx.begin(), idx.end());
          do {
            d4_[flat({idx[0], idx[1], idx[2], idx[3]})] = e;
          } while (std::next_permutation(idx.begin(), idx.end()));
        }

  // Finite on a grid over the closed polytope, vertices included.
  if (!canonical_) {
    auto check = [&](const Vec& x) {
      double v = g_(x);
      if (!std::isfinite(v)) throw DomainError("perturbation is not finite at " + point_string(x));
    };
    for (const auto& v : polytope_.vertices_real()) check(v);
    const Vec lo = polytope_.lower_corner();
    const Vec hi = polytope_.upper_corner();
    constexpr int res = 8;
    std::vector<int> idx(m1, 0);
    while (true) {
      Vec x(m);
      for (int j = 0; j < m; ++j) x[j] = lo[j] + (hi[j] - lo[j]) * idx[static_cast<std::size_t>(j)] / res;
      if (polytope_.contains(x, kBoundarySlack)) check(x);
      int j = m - 1;
      while (j >= 0 && idx[static_cast<std::size_t>(j)] == res) idx[static_cast<std::size_t>(j--)] = 0;
      if (j < 0) break;
      ++idx[static_cast<std::size_t>(j)];
    }
  }
}

ToricMetric ToricMetric::from_string(DelzantPolytope polytope, std::string_view perturbation) {
  bool blank = std::all_of(perturbation.begin(), perturbation.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (blank) return ToricMetric(std::move(polytope));
  const int m = polytope.dim();
  return ToricMetric(std::move(polytope), Expr::parse(perturbation, m));
}

std::size_t ToricMetric::flat(std::initializer_list<int> idx) const {
  std::size_t out = 0;
  for (int i : idx) out = out * static_cast<std::size_t>(dim()) + static_cast<std::size_t>(i);
  return out;
}

double ToricMetric::g(const Vec& x) const { return canonical_ ? 0.0 : g_(x); }

Vec ToricMetric::grad_g(const Vec& x) const {
  Vec out = Vec::Zero(dim());
  if (canonical_) return out;
  for (int i = 0; i < dim(); ++i) out[i] = d1_[static_cast<std::size_t>(i)](x);
  return out;
}

Mat ToricMetric::hess_g(const Vec& x) const {
  Mat out = Mat::Zero(dim(), dim());
  if (canonical_) return out;
  for (int i = 0; i < dim(); ++i)
    for (int j = i; j < dim(); ++j) out(i, j) = out(j, i) = d2_[flat({i, j})](x);
  return out;
}

Mat ToricMetric::third_g(const Vec& x, int i) const {
  Mat out = Mat::Zero(dim(), dim());
  if (canonical_) return out;
  for (int a = 0; a < dim(); ++a)
    for (int b = a; b < dim(); ++b) out(a, b) = out(b, a) = d3_[flat({a, b, i})](x);
  return out;
}

Mat ToricMetric::fourth_g(const Vec& x, int i, int j) const {
  Mat out = Mat::Zero(dim(), dim());
  if (canonical_) return out;
  for (int a = 0; a < dim(); ++a)
    for (int b = a; b < dim(); ++b) out(a, b) = out(b, a) = d4_[flat({a, b, i, j})](x);
  return out;
}

void ToricMetric::require_interior(const Vec& x, const char* who) const {
  const double lo = polytope_.min_ell(x);
  if (lo < -kBoundarySlack) throw OutsidePolytope(fmt::format("{}: {} is outside the polytope", who, point_string(x)));
  if (lo <= 0.0) throw BoundaryPoint(fmt::format("{}: {} lies on the boundary", who, point_string(x)));
}

double ToricMetric::u(const Vec& x) const {
  const double lo = polytope_.min_ell(x);
  if (lo < -kBoundarySlack) throw OutsidePolytope("u: " + point_string(x) + " is outside the polytope");
  double total = 0.0;
  for (int r = 0; r < polytope_.facet_count(); ++r) total += xlogx(std::max(polytope_.ell(r, x), 0.0));
  return total + g(x);
}

Vec ToricMetric::grad_u(const Vec& x) const {
  require_interior(x, "grad_u");
  Vec out = grad_g(x);
  for (int r = 0; r < polytope_.facet_count(); ++r) out += (1.0 + std::log(polytope_.ell(r, x))) * polytope_.normal(r);
  return out;
}

Mat ToricMetric::hessian_u(const Vec& x) const {
  require_interior(x, "hessian_u");
  Mat out = hess_g(x);
  for (int r = 0; r < polytope_.facet_count(); ++r) {
    const Vec& v = polytope_.normal(r);
    out += (v * v.transpose()) / polytope_.ell(r, x);
  }
  return out;
}

Mat ToricMetric::inverse_hessian(const Vec& x) const {
  Mat g = hessian_u(x);
  Eigen::LLT<Mat> llt(g);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("Hessian of the symplectic potential is not positive definite at " + point_string(x));
  }
  Mat h = llt.solve(Mat::Identity(dim(), dim()));
  return 0.5 * (h + h.transpose());
}

Vec ToricMetric::moment_inverse(const Vec& rho) const {
  if (rho.size() != dim()) throw DimensionMismatch("moment_inverse: rho has wrong length");
  constexpr int kMaxIterations = 200;
  constexpr double kTolerance = 1e-12;
  Vec x = polytope_.centroid();
  Vec residual = grad_u(x) - rho;
  for (int it = 0; it < kMaxIterations; ++it) {
    if (residual.lpNorm<Eigen::Infinity>() <= kTolerance) return x;
    Eigen::LLT<Mat> llt(hessian_u(x));
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("moment_inverse: Hessian lost positivity at " + point_string(x));
    const Vec step = -llt.solve(residual);
    const double current = residual.norm();
    double t = 1.0;
    bool accepted = false;
    while (t > 1e-20) {
      Vec trial = x + t * step;
      if (polytope_.min_ell(trial) > 0.0) {
        Vec r = grad_u(trial) - rho;
        if (r.norm() < current) {
          x = trial;
          residual = r;
          accepted = true;
          break;
        }
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Near a vertex the residual cannot drop below the rounding of x itself.
      const double eps = std::numeric_limits<double>::epsilon();
      const double floor = 8.0 * eps * (hessian_u(x).cwiseAbs().rowwise().sum().maxCoeff() * std::max(1.0, x.lpNorm<Eigen::Infinity>()) +
                                        std::max(1.0, rho.lpNorm<Eigen::Infinity>()));
      if (residual.lpNorm<Eigen::Infinity>() <= floor) return x;
      break;
    }
  }
  if (residual.lpNorm<Eigen::Infinity>() <= kTolerance) return x;
  throw ConvergenceFailure(fmt::format("moment_inverse: no convergence for rho = {} (residual {:.3g})", point_string(rho),
                                       residual.lpNorm<Eigen::Infinity>()));
}

double ToricMetric::kahler_potential(const Vec& rho) const {
  Vec x = moment_inverse(rho);
  return x.dot(rho) - u(x);
}

double ToricMetric::scalar_curvature(const Vec& x) const {
  require_interior(x, "scalar_curvature");
  const int m = dim();
  const double h = std::min(1e-4, 0.25 * polytope_.boundary_distance(x));
  auto entry = [&](const Vec& p, int j, int k) { return inverse_hessian(p)(j, k); };
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    Vec e = Vec::Zero(m);
    e[j] = h;
    total += (entry(x + e, j, j) - 2.0 * entry(x, j, j) + entry(x - e, j, j)) / (h * h);
    for (int k = j + 1; k < m; ++k) {
      Vec f = Vec::Zero(m);
      f[k] = h;
      double mixed = (entry(x + e + f, j, k) - entry(x + e - f, j, k) - entry(x - e + f, j, k) + entry(x - e - f, j, k)) /
                     (4.0 * h * h);
      total += 2.0 * mixed;
    }
  }
  return -total;
}

double ToricMetric::scalar_curvature_exact(const Vec& x) const {
  require_interior(x, "scalar_curvature_exact");
  const int m = dim();
  const int d = polytope_.facet_count();
  const Mat hinv = inverse_hessian(x);

  std::vector<double> inv_ell(static_cast<std::size_t>(d));
  for (int r = 0; r < d; ++r) inv_ell[static_cast<std::size_t>(r)] = 1.0 / polytope_.ell(r, x);

  // dG/dx_j = -sum_r v_r v_r^T v_rj / ell_r^2 + d_j hess g
  std::vector<Mat> dg(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Mat a = third_g(x, j);
    for (int r = 0; r < d; ++r) {
      const Vec& v = polytope_.normal(r);
      const double w = inv_ell[static_cast<std::size_t>(r)];
      a -= (v * v.transpose()) * (v[j] * w * w);
    }
    dg[static_cast<std::size_t>(j)] = a;
  }

  // d_j d_k H = H G_k H G_j H + H G_j H G_k H - H G_jk H
  double total = 0.0;
  for (int j = 0; j < m; ++j) {
    for (int k = 0; k < m; ++k) {
      Mat gjk = fourth_g(x, j, k);
      for (int r = 0; r < d; ++r) {
        const Vec& v = polytope_.normal(r);
        const double w = inv_ell[static_cast<std::size_t>(r)];
        gjk += (v * v.transpose()) * (2.0 * v[j] * v[k] * w * w * w);
      }
      const Mat& gj = dg[static_cast<std::size_t>(j)];
      const Mat& gk = dg[static_cast<std::size_t>(k)];
      Mat second = hinv * gk * hinv * gj * hinv + hinv * gj * hinv * gk * hinv - hinv * gjk * hinv;
      total += second(j, k);
    }
  }
  return -total;
}

ConvexityReport ToricMetric::check_convexity(int resolution) const {
  if (resolution < 4) throw std::invalid_argument("check_convexity: resolution must be >= 4");
  const int m = dim();
  const Vec lo = polytope_.lower_corner();
  const Vec hi = polytope_.upper_corner();
  ConvexityReport report;
  report.min_eigenvalue = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(m), 1);
  while (true) {
    Vec x(m);
    for (int j = 0; j < m; ++j) x[j] = lo[j] + (hi[j] - lo[j]) * idx[static_cast<std::size_t>(j)] / resolution;
    if (polytope_.min_ell(x) > 1e-9) {
      Eigen::SelfAdjointEigenSolver<Mat> eig(hessian_u(x), Eigen::EigenvaluesOnly);
      const double lowest = eig.eigenvalues().minCoeff();
      ++report.samples;
      if (lowest < report.min_eigenvalue) {
        report.min_eigenvalue = lowest;
        report.argmin = x;
      }
    }
    int j = m - 1;
    while (j >= 0 && idx[static_cast<std::size_t>(j)] == resolution - 1) idx[static_cast<std::size_t>(j--)] = 1;
    if (j < 0) break;
    ++idx[static_cast<std::size_t>(j)];
  }
  report.pass = report.samples > 0 && report.min_eigenvalue > 0.0;
  return report;
}

}  // namespace toricbern
