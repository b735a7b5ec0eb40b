#include "toricbern/polytope.hpp"

#include "toricbern/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace toricbern {

namespace {

std::string format_vec(const RatVec& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += v[i].to_string();
  }
  return s + ")";
}

std::string format_vec(const IntVec& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(v[i]);
  }
  return s + ")";
}

template <typename T>
T determinant(const std::vector<std::vector<T>>& a) {
  const std::size_t n = a.size();
  if (n == 1) return a[0][0];
  if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

std::int64_t int_determinant(const std::vector<const IntVec*>& rows) {
  std::vector<std::vector<std::int64_t>> a;
  for (const auto* r : rows) a.push_back(*r);
  return determinant(a);
}

// Nonzero vector orthogonal to m-1 integer rows in R^m (zero if they are dependent).
IntVec orthogonal_complement(const std::vector<const IntVec*>& rows, int dim) {
  if (dim == 1) return {1};
  if (dim == 2) return {-(*rows[0])[1], (*rows[0])[0]};
  const IntVec& a = *rows[0];
  const IntVec& b = *rows[1];
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

// Visits every k-subset of {0..n-1} in lexicographic order.
template <typename F>
void for_each_subset(int n, int k, F&& visit) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  std::iota(idx.begin(), idx.end(), 0);
  if (k > n) return;
  while (true) {
    visit(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

// Rank of the differences p_i - p_0, computed exactly.
int affine_rank(const std::vector<const RatVec*>& points) {
  if (points.size() <= 1) return 0;
  std::vector<RatVec> rows;
  for (std::size_t i = 1; i < points.size(); ++i) {
    RatVec d(points[0]->size());
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = (*points[i])[j] - (*points[0])[j];
    rows.push_back(std::move(d));
  }
  const std::size_t cols = rows[0].size();
  std::size_t rank = 0;
  for (std::size_t c = 0; c < cols && rank < rows.size(); ++c) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][c] == Rational(0)) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[rank]);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank || rows[r][c] == Rational(0)) continue;
      Rational factor = rows[r][c] / rows[rank][c];
      for (std::size_t j = c; j < cols; ++j) rows[r][j] = rows[r][j] - factor * rows[rank][j];
    }
    ++rank;
  }
  return static_cast<int>(rank);
}

Rational exact_ell(const Facet& f, const RatVec& x) {
  Rational s = -f.offset;
  for (std::size_t j = 0; j < x.size(); ++j) s = s + x[j] * Rational(f.normal[j]);
  return s;
}

}  // namespace

Vec Simplex::map(std::span<const double> y) const {
  Vec x = vertices[0];
  for (std::size_t i = 1; i < vertices.size(); ++i) x += y[i - 1] * (vertices[i] - vertices[0]);
  return x;
}

double Simplex::measure() const {
  const int k = order();
  if (k == 0) return 1.0;
  const auto m = vertices[0].size();
  Eigen::MatrixXd edges(m, k);
  for (int i = 0; i < k; ++i) edges.col(i) = vertices[static_cast<std::size_t>(i + 1)] - vertices[0];
  double gram = (edges.transpose() * edges).determinant();
  double factorial = 1.0;
  for (int i = 2; i <= k; ++i) factorial *= i;
  return std::sqrt(std::max(gram, 0.0)) / factorial;
}

DelzantPolytope DelzantPolytope::validate(std::vector<Facet> facets, int dim) {
  if (dim < 1 || dim > kMaxDim) {
    throw DimensionMismatch("polytope dimension must be in [1, 3], got " + std::to_string(dim));
  }
  const int d = static_cast<int>(facets.size());
  if (d < dim + 1) {
    throw UnboundedPolytope("need at least " + std::to_string(dim + 1) + " facets, got " + std::to_string(d));
  }
  for (int r = 0; r < d; ++r) {
    const auto& v = facets[static_cast<std::size_t>(r)].normal;
    if (static_cast<int>(v.size()) != dim) {
      throw DimensionMismatch("facet " + std::to_string(r) + " normal has length " + std::to_string(v.size()));
    }
    std::int64_t g = 0;
    for (auto c : v) g = std::gcd(g, c < 0 ? -c : c);
    if (g != 1) throw NonPrimitiveNormal("facet " + std::to_string(r) + " normal " + format_vec(v) + " is not primitive");
  }

  // Recession cone: nontrivial iff some extreme ray (m-1 tight normals) is feasible.
  {
    bool full_rank = false;
    for_each_subset(d, dim, [&](const std::vector<int>& idx) {
      std::vector<const IntVec*> rows;
      for (int i : idx) rows.push_back(&facets[static_cast<std::size_t>(i)].normal);
      if (int_determinant(rows) != 0) full_rank = true;
    });
    if (!full_rank) throw UnboundedPolytope("facet normals do not span R^" + std::to_string(dim));
    for_each_subset(d, dim - 1, [&](const std::vector<int>& idx) {
      std::vector<const IntVec*> rows;
      for (int i : idx) rows.push_back(&facets[static_cast<std::size_t>(i)].normal);
      IntVec dir = orthogonal_complement(rows, dim);
      if (std::all_of(dir.begin(), dir.end(), [](auto c) { return c == 0; })) return;
      for (int sign : {1, -1}) {
        bool recedes = std::all_of(facets.begin(), facets.end(), [&](const Facet& f) {
          std::int64_t s = 0;
          for (int j = 0; j < dim; ++j) s += sign * dir[static_cast<std::size_t>(j)] * f.normal[static_cast<std::size_t>(j)];
          return s >= 0;
        });
        if (recedes) {
          IntVec ray = dir;
          for (auto& c : ray) c *= sign;
          throw UnboundedPolytope("recession direction " + format_vec(ray));
        }
      }
    });
  }

  DelzantPolytope p;
  p.dim_ = dim;
  p.facets_ = std::move(facets);

  // Vertices by Cramer's rule on every m-subset.
  std::set<RatVec> found;
  for_each_subset(d, dim, [&](const std::vector<int>& idx) {
    std::vector<std::vector<Rational>> a;
    for (int i : idx) {
      std::vector<Rational> row;
      for (auto c : p.facets_[static_cast<std::size_t>(i)].normal) row.emplace_back(c);
      a.push_back(std::move(row));
    }
    Rational det = determinant(a);
    if (det == Rational(0)) return;
    RatVec x(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j) {
      auto aj = a;
      for (std::size_t r = 0; r < idx.size(); ++r) aj[r][static_cast<std::size_t>(j)] = p.facets_[static_cast<std::size_t>(idx[r])].offset;
      x[static_cast<std::size_t>(j)] = determinant(aj) / det;
    }
    for (const auto& f : p.facets_) {
      if (exact_ell(f, x) < Rational(0)) return;
    }
    found.insert(std::move(x));
  });
  if (found.empty()) throw EmptyInterior("inequality system is infeasible");
  p.vertices_.assign(found.begin(), found.end());

  // Interior check at the vertex average.
  RatVec center(static_cast<std::size_t>(dim), Rational(0));
  for (const auto& v : p.vertices_) {
    for (int j = 0; j < dim; ++j) center[static_cast<std::size_t>(j)] = center[static_cast<std::size_t>(j)] + v[static_cast<std::size_t>(j)];
  }
  for (auto& c : center) c = c / Rational(static_cast<std::int64_t>(p.vertices_.size()));
  for (int r = 0; r < d; ++r) {
    if (exact_ell(p.facets_[static_cast<std::size_t>(r)], center) == Rational(0)) {
      throw EmptyInterior("all vertices lie on facet " + std::to_string(r));
    }
  }

  p.facet_vertices_.assign(static_cast<std::size_t>(d), {});
  for (std::size_t i = 0; i < p.vertices_.size(); ++i) {
    std::vector<int> incident;
    for (int r = 0; r < d; ++r) {
      if (exact_ell(p.facets_[static_cast<std::size_t>(r)], p.vertices_[i]) == Rational(0)) {
        incident.push_back(r);
        p.facet_vertices_[static_cast<std::size_t>(r)].push_back(static_cast<int>(i));
      }
    }
    if (static_cast<int>(incident.size()) != dim) {
      throw NotDelzant("vertex " + format_vec(p.vertices_[i]) + " lies on " + std::to_string(incident.size()) +
                       " facets, expected " + std::to_string(dim));
    }
    std::vector<const IntVec*> rows;
    for (int r : incident) rows.push_back(&p.facets_[static_cast<std::size_t>(r)].normal);
    std::int64_t det = int_determinant(rows);
    if (det != 1 && det != -1) {
      throw NotDelzant("vertex " + format_vec(p.vertices_[i]) + ": incident normals have determinant " +
                       std::to_string(det));
    }
    p.vertex_facets_.push_back(std::move(incident));
    p.vertex_dets_.push_back(det);
  }
  for (int r = 0; r < d; ++r) {
    std::vector<const RatVec*> pts;
    for (int i : p.facet_vertices_[static_cast<std::size_t>(r)]) pts.push_back(&p.vertices_[static_cast<std::size_t>(i)]);
    if (pts.empty() || affine_rank(pts) != dim - 1) {
      throw NotDelzant("inequality " + std::to_string(r) + " does not support a facet (redundant)");
    }
  }

  for (const auto& v : p.vertices_) {
    Vec x(dim);
    for (int j = 0; j < dim; ++j) x[j] = v[static_cast<std::size_t>(j)].to_double();
    p.vertices_real_.push_back(x);
  }
  p.normal_sum_ = Vec::Zero(dim);
  for (const auto& f : p.facets_) {
    Vec n(dim);
    for (int j = 0; j < dim; ++j) n[j] = static_cast<double>(f.normal[static_cast<std::size_t>(j)]);
    p.normals_real_.push_back(n);
    p.offsets_real_.push_back(f.offset.to_double());
    p.normal_sum_ += n;
  }
  p.centroid_ = Vec::Zero(dim);
  for (int j = 0; j < dim; ++j) p.centroid_[j] = center[static_cast<std::size_t>(j)].to_double();

  std::vector<int> all(p.vertices_.size());
  std::iota(all.begin(), all.end(), 0);
  p.cells_ = p.triangulate_face(all, dim, {});
  for (const auto& c : p.cells_) p.volume_ += c.measure();
  return p;
}

std::vector<Simplex> DelzantPolytope::triangulate_face(const std::vector<int>& face_vertices, int face_dim,
                                                       std::vector<int> tight) const {
  if (face_dim == 0) return {Simplex{{vertices_real_[static_cast<std::size_t>(face_vertices.front())]}}};
  Vec apex = Vec::Zero(dim_);
  for (int i : face_vertices) apex += vertices_real_[static_cast<std::size_t>(i)];
  apex /= static_cast<double>(face_vertices.size());

  std::set<std::vector<int>> seen;
  std::vector<Simplex> out;
  for (int r = 0; r < facet_count(); ++r) {
    if (std::find(tight.begin(), tight.end(), r) != tight.end()) continue;
    std::vector<int> sub;
    const auto& on_r = facet_vertices_[static_cast<std::size_t>(r)];
    std::set_intersection(face_vertices.begin(), face_vertices.end(), on_r.begin(), on_r.end(), std::back_inserter(sub));
    if (static_cast<int>(sub.size()) < face_dim) continue;
    std::vector<const RatVec*> pts;
    for (int i : sub) pts.push_back(&vertices_[static_cast<std::size_t>(i)]);
    if (affine_rank(pts) != face_dim - 1 || !seen.insert(sub).second) continue;
    auto next = tight;
    next.push_back(r);
    for (auto& s : triangulate_face(sub, face_dim - 1, next)) {
      s.vertices.insert(s.vertices.begin(), apex);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Simplex> DelzantPolytope::triangulate_facet(int r) const {
  if (r < 0 || r >= facet_count()) throw DimensionMismatch("facet index " + std::to_string(r) + " out of range");
  return triangulate_face(facet_vertices_[static_cast<std::size_t>(r)], dim_ - 1, {r});
}

double DelzantPolytope::ell(int r, const Vec& x) const {
  if (x.size() != dim_) {
    throw DimensionMismatch("point has length " + std::to_string(x.size()) + ", polytope dimension " + std::to_string(dim_));
  }
  if (r < 0 || r >= facet_count()) throw DimensionMismatch("facet index " + std::to_string(r) + " out of range");
  return normals_real_[static_cast<std::size_t>(r)].dot(x) - offsets_real_[static_cast<std::size_t>(r)];
}

Rational DelzantPolytope::scaled_ell(int r, std::span<const std::int64_t> alpha, std::int64_t n) const {
  const auto& f = facets_.at(static_cast<std::size_t>(r));
  std::int64_t dot = 0;
  for (std::size_t j = 0; j < alpha.size(); ++j) dot += alpha[j] * f.normal[j];
  return Rational(dot) - Rational(n) * f.offset;
}

double DelzantPolytope::min_ell(const Vec& x) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int r = 0; r < facet_count(); ++r) lo = std::min(lo, ell(r, x));
  return lo;
}

double DelzantPolytope::boundary_distance(const Vec& x) const {
  double lo = std::numeric_limits<double>::infinity();
  for (int r = 0; r < facet_count(); ++r) lo = std::min(lo, ell(r, x) / normals_real_[static_cast<std::size_t>(r)].norm());
  return lo;
}

double DelzantPolytope::diameter() const {
  double best = 0.0;
  for (const auto& a : vertices_real_)
    for (const auto& b : vertices_real_) best = std::max(best, (a - b).norm());
  return best;
}

Vec DelzantPolytope::lower_corner() const {
  Vec lo = vertices_real_.front();
  for (const auto& v : vertices_real_) lo = lo.cwiseMin(v);
  return lo;
}

Vec DelzantPolytope::upper_corner() const {
  Vec hi = vertices_real_.front();
  for (const auto& v : vertices_real_) hi = hi.cwiseMax(v);
  return hi;
}

bool DelzantPolytope::is_standard_simplex() const {
  if (facet_count() != dim_ + 1) return false;
  std::vector<bool> axis(static_cast<std::size_t>(dim_), false);
  bool diagonal = false;
  for (const auto& f : facets_) {
    int ones = 0, minus = 0, zeros = 0, where = -1;
    for (int j = 0; j < dim_; ++j) {
      auto c = f.normal[static_cast<std::size_t>(j)];
      if (c == 1) {
        ++ones;
        where = j;
      } else if (c == -1) {
        ++minus;
      } else if (c == 0) {
        ++zeros;
      }
    }
    if (ones == 1 && zeros == dim_ - 1 && f.offset == Rational(0)) {
      axis[static_cast<std::size_t>(where)] = true;
    } else if (minus == dim_ && f.offset == Rational(-1)) {
      diagonal = true;
    } else {
      return false;
    }
  }
  return diagonal && std::all_of(axis.begin(), axis.end(), [](bool b) { return b; });
}

std::string DelzantPolytope::describe() const {
  std::ostringstream os;
  os << "dimension " << dim_ << ", " << facet_count() << " facets, " << vertices_.size() << " vertices\n";
  for (int r = 0; r < facet_count(); ++r) {
    os << "  facet " << r << ": normal " << format_vec(facets_[static_cast<std::size_t>(r)].normal) << ", lambda "
       << facets_[static_cast<std::size_t>(r)].offset.to_string() << "\n";
  }
  for (std::size_t i = 0; i < vertices_.size(); ++i) {
    os << "  vertex " << format_vec(vertices_[i]) << ": facets {";
    for (std::size_t k = 0; k < vertex_facets_[i].size(); ++k) os << (k ? "," : "") << vertex_facets_[i][k];
    os << "}, det " << vertex_dets_[i] << "\n";
  }
  return os.str();
}

LatticeSet lattice_points(const DelzantPolytope& polytope, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("lattice_points: dilation must be >= 1");
  const int m = polytope.dim();
  IntVec lo(static_cast<std::size_t>(m)), hi(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    Rational mn = polytope.vertices().front()[static_cast<std::size_t>(j)];
    Rational mx = mn;
    for (const auto& v : polytope.vertices()) {
      mn = std::min(mn, v[static_cast<std::size_t>(j)]);
      mx = std::max(mx, v[static_cast<std::size_t>(j)]);
    }
    lo[static_cast<std::size_t>(j)] = ceil_div(mn * Rational(n));
    hi[static_cast<std::size_t>(j)] = floor_div(mx * Rational(n));
  }

  LatticeSet out;
  out.dilation = n;
  IntVec alpha = lo;
  while (true) {
    bool inside = true;
    for (const auto& f : polytope.facets()) {
      __int128 dot = 0;
      for (int j = 0; j < m; ++j) dot += static_cast<__int128>(alpha[static_cast<std::size_t>(j)]) * f.normal[static_cast<std::size_t>(j)];
      // q <alpha, v> >= n p  with offset p/q, q > 0
      if (dot * f.offset.den() < static_cast<__int128>(n) * f.offset.num()) {
        inside = false;
        break;
      }
    }
    if (inside) out.points.push_back(alpha);
    int j = m - 1;
    while (j >= 0 && alpha[static_cast<std::size_t>(j)] == hi[static_cast<std::size_t>(j)]) {
      alpha[static_cast<std::size_t>(j)] = lo[static_cast<std::size_t>(j)];
      --j;
    }
    if (j < 0) break;
    ++alpha[static_cast<std::size_t>(j)];
  }
  return out;
}

double FacetChart::euclidean_measure() const {
  double total = 0.0;
  for (const auto& c : cells) total += c.measure();
  return total;
}

FacetChart facet_chart(const DelzantPolytope& polytope, int r) {
  if (r < 0 || r >= polytope.facet_count()) throw DegenerateFacet("facet index " + std::to_string(r) + " out of range");
  FacetChart chart;
  chart.facet = r;
  chart.cells = polytope.triangulate_facet(r);
  if (chart.cells.empty()) throw DegenerateFacet("facet " + std::to_string(r) + " has no cells");
  for (const auto& c : chart.cells) {
    if (c.order() != polytope.dim() - 1 || (polytope.dim() > 1 && c.measure() <= 0.0)) {
      throw DegenerateFacet("facet " + std::to_string(r) + " is not (m-1)-dimensional");
    }
  }
  chart.leray_density = 1.0 / polytope.normal(r).norm();
  return chart;
}

namespace shapes {

DelzantPolytope interval() { return DelzantPolytope::validate({{{1}, 0}, {{-1}, -1}}, 1); }

DelzantPolytope standard_simplex(int dim) {
  std::vector<Facet> facets;
  for (int j = 0; j < dim; ++j) {
    IntVec e(static_cast<std::size_t>(dim), 0);
    e[static_cast<std::size_t>(j)] = 1;
    facets.push_back({e, 0});
  }
  facets.push_back({IntVec(static_cast<std::size_t>(dim), -1), -1});
  return DelzantPolytope::validate(std::move(facets), dim);
}

DelzantPolytope unit_cube(int dim) {
  std::vector<Facet> facets;
  for (int j = 0; j < dim; ++j) {
    IntVec e(static_cast<std::size_t>(dim), 0);
    e[static_cast<std::size_t>(j)] = 1;
    facets.push_back({e, 0});
    e[static_cast<std::size_t>(j)] = -1;
    facets.push_back({e, -1});
  }
  return DelzantPolytope::validate(std::move(facets), dim);
}

}  // namespace shapes

}  // namespace toricbern
