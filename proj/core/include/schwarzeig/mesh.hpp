// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef SCHWARZEIG_MESH_HPP
#define SCHWARZEIG_MESH_HPP

#include <array>
#include <optional>
#include <string_view>
#include <vector>

#include "schwarzeig/types.hpp"

namespace schwarzeig
{

//
// Structured triangulations of the two model domains:
//
//   Square = (0,pi)^2
//   LShape = (-pi,pi)^2 \ [0,pi) x (-pi,0]
//
// Both are tiled by square lattice cells of side g = pi / 2^level. Every cell is split along
// its lower-left to upper-right diagonal. Lattice coordinates are integers measured in units
// of g from the lower-left corner of the bounding box.
//
enum class DomainShape
{
  Square,
  LShape
};

std::string_view to_string(DomainShape shape);

// Accepts "square" and "lshape" (case-sensitive). Throws InvalidArgument otherwise.
DomainShape parse_domain_shape(std::string_view name);

// Number of interior lattice nodes of a mesh, without building it.
Index interior_dof_count(DomainShape shape, int level);

struct LatticePoint
{
  int x;
  int y;
  friend bool operator==(const LatticePoint &, const LatticePoint &) = default;
};

class Mesh
{
public:
  DomainShape shape() const { return shape_; }
  int level() const { return level_; }

  // Lattice spacing g.
  double spacing() const { return spacing_; }

  // Mesh size h = sqrt(2) g, the length of the cell diagonal.
  double size() const;

  // Cells along one side of the bounding box (2^level for the square, 2^(level+1) for the
  // L-shape).
  int cells_per_side() const { return cells_per_side_; }

  bool contains_cell(int cx, int cy) const;

  // All lattice vertices including the boundary, ordered lexicographically by (y, x).
  const std::vector<LatticePoint> &vertices() const { return vertices_; }

  // Interior vertices, one per degree of freedom, in the same (y, x) order. dof_vertex()[d]
  // is an index into vertices().
  const std::vector<Index> &dof_vertex() const { return dof_vertex_; }
  Index dof_count() const { return static_cast<Index>(dof_vertex_.size()); }

  // Degree of freedom at a vertex, or -1 for boundary vertices.
  Index vertex_dof(Index vertex) const { return vertex_dof_[vertex]; }

  // Vertex index at lattice point (x, y), or -1 if the point is not a mesh vertex.
  Index vertex_at(int x, int y) const;

  // Degree of freedom at lattice point (x, y), or -1 if it is not an interior vertex.
  Index dof_at(int x, int y) const;

  LatticePoint dof_point(Index dof) const { return vertices_[dof_vertex_[dof]]; }

  // Vertex triples. The first vertex is the right-angle corner; the order is
  // counterclockwise.
  const std::vector<std::array<Index, 3>> &triangles() const { return triangles_; }

  // Physical coordinates of a lattice point.
  std::array<double, 2> coordinates(LatticePoint p) const;

  // Area of the domain, pi^2 or 3 pi^2.
  double domain_area() const;

private:
  friend Mesh build_mesh(DomainShape shape, int level);

  DomainShape shape_ = DomainShape::Square;
  int level_ = 0;
  double spacing_ = 0.0;
  int cells_per_side_ = 0;
  std::vector<LatticePoint> vertices_;
  std::vector<Index> vertex_dof_;
  std::vector<Index> dof_vertex_;
  std::vector<Index> vertex_grid_;
  std::vector<std::array<Index, 3>> triangles_;
};

Mesh build_mesh(DomainShape shape, int level);

// Nodal P1 interpolation from the interior dofs of a coarse mesh to the interior dofs of a
// nested finer mesh of the same shape: an (fine dofs) x (coarse dofs) matrix.
SparseMatrix build_prolongation(const Mesh &coarse, const Mesh &fine);

//
// Nested meshes T_H (coarse space), T_Htilde (initial approximation) and T_h (fine space),
// with prolongations onto the fine mesh.
//
struct MeshHierarchy
{
  Mesh coarse;
  Mesh initial;
  Mesh fine;
  SparseMatrix coarse_to_fine;
  SparseMatrix initial_to_fine;

  double coarse_size() const { return coarse.size(); }
  double initial_size() const { return initial.size(); }
  double fine_size() const { return fine.size(); }
};

// Requires coarse_level + 1 <= fine_level. The initial level defaults to coarse_level + 1 and
// may be any level in [coarse_level, fine_level].
MeshHierarchy build_hierarchy(DomainShape shape, int coarse_level, int fine_level,
                              std::optional<int> initial_level = std::nullopt);

//
// Overlapping subdomains: one per coarse cell, dilated by a whole number of fine cell layers
// and clipped to the domain. Each subdomain lists the fine dofs strictly inside it.
//
struct Decomposition
{
  std::vector<std::vector<Index>> subdomains;
  int overlap_layers = 0;
  double overlap_ratio = 0.0;
  int color_count = 0;

  Index size() const { return static_cast<Index>(subdomains.size()); }
};

// overlap_ratio is delta/H with 0 < delta/H <= 1/2. Throws InvalidArgument if the overlap is
// narrower than one fine layer.
Decomposition build_decomposition(const MeshHierarchy &hierarchy, double overlap_ratio);

// Greedy coloring of the subdomain intersection graph (two subdomains are adjacent when they
// share a dof), visiting subdomains in index order. Returns one color per subdomain.
std::vector<int> color_subdomains(const std::vector<std::vector<Index>> &subdomains,
                                  Index dof_count);

}  // namespace schwarzeig

#endif  // SCHWARZEIG_MESH_HPP
