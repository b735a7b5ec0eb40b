#pragma once

#include "toricbern/numeric.hpp"
#include "toricbern/rational.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace toricbern {

using IntVec = std::vector<std::int64_t>;
using RatVec = std::vector<Rational>;

/// Half-space <x, normal> >= offset with a primitive inward integer normal.
struct Facet {
  IntVec normal;
  Rational offset;
};

/// A k-simplex embedded in R^m, given by its k+1 vertices.
struct Simplex {
  std::vector<Vec> vertices;

  int order() const { return static_cast<int>(vertices.size()) - 1; }
  /// Affine image of reference-simplex coordinates y (y_i >= 0, sum y_i <= 1).
  Vec map(std::span<const double> y) const;
  /// k-dimensional volume (Gram determinant based, so it works for embedded simplices).
  double measure() const;
};

/// Validated, immutable Delzant polytope {x : <x, v_r> >= lambda_r} in dimension <= 3.
///
/// Vertices are found by solving every m-subset of facet equalities exactly
/// (C(d, m) rational solves, fine for d <= 12) and keeping the feasible ones.
class DelzantPolytope {
public:
  /// Throws UnboundedPolytope, NotDelzant, NonPrimitiveNormal, EmptyInterior,
  /// DimensionMismatch.
  static DelzantPolytope validate(std::vector<Facet> facets, int dim);

  int dim() const noexcept { return dim_; }
  int facet_count() const noexcept { return static_cast<int>(facets_.size()); }
  const std::vector<Facet>& facets() const noexcept { return facets_; }
  const Facet& facet(int r) const { return facets_.at(static_cast<std::size_t>(r)); }

  /// Exact vertices, lexicographically sorted.
  const std::vector<RatVec>& vertices() const noexcept { return vertices_; }
  const std::vector<Vec>& vertices_real() const noexcept { return vertices_real_; }
  /// Facet indices incident to vertex i, and the determinant of their normals.
  const std::vector<int>& vertex_facets(int i) const { return vertex_facets_.at(static_cast<std::size_t>(i)); }
  std::int64_t vertex_determinant(int i) const { return vertex_dets_.at(static_cast<std::size_t>(i)); }
  /// Vertex indices lying on facet r.
  const std::vector<int>& facet_vertices(int r) const { return facet_vertices_.at(static_cast<std::size_t>(r)); }

  const Vec& normal(int r) const { return normals_real_.at(static_cast<std::size_t>(r)); }
  double offset(int r) const { return offsets_real_.at(static_cast<std::size_t>(r)); }
  /// Sum of all facet normals.
  const Vec& normal_sum() const noexcept { return normal_sum_; }

  /// ell_r(x) = <x, v_r> - lambda_r.
  double ell(int r, const Vec& x) const;
  /// N * ell_r(alpha / N) = <alpha, v_r> - N lambda_r, exactly.
  Rational scaled_ell(int r, std::span<const std::int64_t> alpha, std::int64_t n) const;
  /// Smallest ell_r(x) over all facets.
  double min_ell(const Vec& x) const;
  /// Euclidean distance from an interior x to the boundary.
  double boundary_distance(const Vec& x) const;
  bool contains(const Vec& x, double tol = 0.0) const { return min_ell(x) >= -tol; }

  /// Average of the vertices; always interior.
  const Vec& centroid() const noexcept { return centroid_; }
  double volume() const noexcept { return volume_; }
  double diameter() const;
  /// Axis-aligned bounding box of the vertices.
  Vec lower_corner() const;
  Vec upper_corner() const;

  /// Fan triangulation: every boundary face is coned to the centroid, recursively.
  const std::vector<Simplex>& triangulation() const noexcept { return cells_; }
  /// (m-1)-simplices covering facet r (same recursive coning, one dimension down).
  std::vector<Simplex> triangulate_facet(int r) const;

  /// True when the facets are exactly those of {x >= 0, sum x <= 1} (any order).
  bool is_standard_simplex() const;

  std::string describe() const;

private:
  DelzantPolytope() = default;
  std::vector<Simplex> triangulate_face(const std::vector<int>& face_vertices, int face_dim,
                                        std::vector<int> tight) const;

  int dim_ = 0;
  std::vector<Facet> facets_;
  std::vector<RatVec> vertices_;
  std::vector<Vec> vertices_real_;
  std::vector<std::vector<int>> vertex_facets_;
  std::vector<std::int64_t> vertex_dets_;
  std::vector<std::vector<int>> facet_vertices_;
  std::vector<Vec> normals_real_;
  std::vector<double> offsets_real_;
  Vec normal_sum_;
  Vec centroid_;
  std::vector<Simplex> cells_;
  double volume_ = 0.0;
};

/// Lattice points of the N-th dilate, in lexicographic order.
struct LatticeSet {
  std::int64_t dilation = 0;
  std::vector<IntVec> points;

  std::size_t size() const noexcept { return points.size(); }
};

/// Exact enumeration of NP ∩ Z^m over the integer bounding box of N * vertices.
LatticeSet lattice_points(const DelzantPolytope& polytope, std::int64_t n);

/// Affine cover of a facet by (m-1)-simplices plus the constant Leray density
/// 1/|v_r|, so that d(ell_r) ∧ dsigma = dx.
struct FacetChart {
  int facet = 0;
  std::vector<Simplex> cells;
  double leray_density = 1.0;

  double euclidean_measure() const;
  double leray_measure() const { return euclidean_measure() * leray_density; }
};

/// Throws DegenerateFacet when facet r is not (m-1)-dimensional.
FacetChart facet_chart(const DelzantPolytope& polytope, int r);

/// Named polytopes used throughout the tests and the CLI.
namespace shapes {
DelzantPolytope interval();
DelzantPolytope standard_simplex(int dim);
DelzantPolytope unit_cube(int dim);
}  // namespace shapes

}  // namespace toricbern
