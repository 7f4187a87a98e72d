// Copyright The schwarzeig Authors.
// SPDX-License-Identifier: Apache-2.0

#include "schwarzeig/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "schwarzeig/errors.hpp"

namespace schwarzeig
{

namespace
{

constexpr int kMaxLevel = 14;

int side_cells(DomainShape shape, int level)
{
  return shape == DomainShape::Square ? (1 << level) : (1 << (level + 1));
}

bool cell_in_domain(DomainShape shape, int level, int cx, int cy)
{
  const int n = side_cells(shape, level);
  if (cx < 0 || cy < 0 || cx >= n || cy >= n)
  {
    return false;
  }
  if (shape == DomainShape::LShape)
  {
    // The removed quadrant [0,pi) x (-pi,0] is the lower-right block of cells.
    const int half = 1 << level;
    return !(cx >= half && cy < half);
  }
  return true;
}

void check_level(int level)
{
  if (level <= 0 || level > kMaxLevel)
  {
    throw InvalidArgument("mesh level must lie in [1, " + std::to_string(kMaxLevel) +
                          "], got " + std::to_string(level));
  }
}

}  // namespace

std::string_view to_string(DomainShape shape)
{
  return shape == DomainShape::Square ? "square" : "lshape";
}

DomainShape parse_domain_shape(std::string_view name)
{
  if (name == "square")
  {
    return DomainShape::Square;
  }
  if (name == "lshape")
  {
    return DomainShape::LShape;
  }
  throw InvalidArgument("unknown domain '" + std::string(name) +
                        "' (expected square or lshape)");
}

Index interior_dof_count(DomainShape shape, int level)
{
  check_level(level);
  const Index n = Index{1} << level;
  if (shape == DomainShape::Square)
  {
    return (n - 1) * (n - 1);
  }
  return (2 * n - 1) * (2 * n - 1) - n * n;
}

double Mesh::size() const
{
  return std::numbers::sqrt2 * spacing_;
}

bool Mesh::contains_cell(int cx, int cy) const
{
  return cell_in_domain(shape_, level_, cx, cy);
}

Index Mesh::vertex_at(int x, int y) const
{
  if (x < 0 || y < 0 || x > cells_per_side_ || y > cells_per_side_)
  {
    return -1;
  }
  return vertex_grid_[static_cast<std::size_t>(y) * (cells_per_side_ + 1) + x];
}

Index Mesh::dof_at(int x, int y) const
{
  const Index v = vertex_at(x, y);
  return v < 0 ? -1 : vertex_dof_[v];
}

std::array<double, 2> Mesh::coordinates(LatticePoint p) const
{
  const double origin = shape_ == DomainShape::Square ? 0.0 : -std::numbers::pi;
  return {origin + spacing_ * p.x, origin + spacing_ * p.y};
}

double Mesh::domain_area() const
{
  constexpr double pi2 = std::numbers::pi * std::numbers::pi;
  return shape_ == DomainShape::Square ? pi2 : 3.0 * pi2;
}

Mesh build_mesh(DomainShape shape, int level)
{
  check_level(level);

  Mesh mesh;
  mesh.shape_ = shape;
  mesh.level_ = level;
  mesh.spacing_ = std::numbers::pi / static_cast<double>(1 << level);
  mesh.cells_per_side_ = side_cells(shape, level);

  const int n = mesh.cells_per_side_;
  auto has_cell = [&](int cx, int cy) { return cell_in_domain(shape, level, cx, cy); };

  // A lattice point is a vertex if any adjacent cell is in the domain, and interior if all
  // four adjacent cells are.
  mesh.vertex_grid_.assign(static_cast<std::size_t>(n + 1) * (n + 1), -1);
  for (int y = 0; y <= n; ++y)
  {
    for (int x = 0; x <= n; ++x)
    {
      const int adjacent = int{has_cell(x - 1, y - 1)} + int{has_cell(x, y - 1)} +
                           int{has_cell(x - 1, y)} + int{has_cell(x, y)};
      if (adjacent == 0)
      {
        continue;
      }
      const auto v = static_cast<Index>(mesh.vertices_.size());
      mesh.vertex_grid_[static_cast<std::size_t>(y) * (n + 1) + x] = v;
      mesh.vertices_.push_back({x, y});
      if (adjacent == 4)
      {
        mesh.vertex_dof_.push_back(static_cast<Index>(mesh.dof_vertex_.size()));
        mesh.dof_vertex_.push_back(v);
      }
      else
      {
        mesh.vertex_dof_.push_back(-1);
      }
    }
  }

  for (int cy = 0; cy < n; ++cy)
  {
    for (int cx = 0; cx < n; ++cx)
    {
      if (!has_cell(cx, cy))
      {
        continue;
      }
      const Index v00 = mesh.vertex_at(cx, cy);
      const Index v10 = mesh.vertex_at(cx + 1, cy);
      const Index v01 = mesh.vertex_at(cx, cy + 1);
      const Index v11 = mesh.vertex_at(cx + 1, cy + 1);
      mesh.triangles_.push_back({v10, v11, v00});
      mesh.triangles_.push_back({v01, v00, v11});
    }
  }
  return mesh;
}

SparseMatrix build_prolongation(const Mesh &coarse, const Mesh &fine)
{
  if (coarse.shape() != fine.shape() || coarse.level() > fine.level())
  {
    throw InvalidArgument("prolongation needs nested meshes of the same shape");
  }
  const int ratio = 1 << (fine.level() - coarse.level());

  std::vector<Eigen::Triplet<double, int>> entries;
  entries.reserve(static_cast<std::size_t>(fine.dof_count()) * 3);
  for (Index d = 0; d < fine.dof_count(); ++d)
  {
    const LatticePoint p = fine.dof_point(d);
    const int cx = p.x / ratio;
    const int cy = p.y / ratio;
    const double s = static_cast<double>(p.x - cx * ratio) / ratio;
    const double t = static_cast<double>(p.y - cy * ratio) / ratio;

    // Barycentric weights in the coarse cell's lower-right (s >= t) or upper-left triangle.
    std::array<std::pair<LatticePoint, double>, 3> weights;
    if (s >= t)
    {
      weights = {{{{cx, cy}, 1.0 - s}, {{cx + 1, cy}, s - t}, {{cx + 1, cy + 1}, t}}};
    }
    else
    {
      weights = {{{{cx, cy}, 1.0 - t}, {{cx, cy + 1}, t - s}, {{cx + 1, cy + 1}, s}}};
    }
    for (const auto &[q, w] : weights)
    {
      if (w == 0.0)
      {
        continue;
      }
      const Index c = coarse.dof_at(q.x, q.y);
      if (c >= 0)
      {
        entries.emplace_back(static_cast<int>(d), static_cast<int>(c), w);
      }
    }
  }
  SparseMatrix p(fine.dof_count(), coarse.dof_count());
  p.setFromTriplets(entries.begin(), entries.end());
  return p;
}

MeshHierarchy build_hierarchy(DomainShape shape, int coarse_level, int fine_level,
                              std::optional<int> initial_level)
{
  if (coarse_level < 1 || coarse_level + 1 > fine_level)
  {
    throw InvalidArgument("hierarchy needs 1 <= coarse_level < fine_level, got coarse " +
                          std::to_string(coarse_level) + ", fine " +
                          std::to_string(fine_level));
  }
  const int init = initial_level.value_or(coarse_level + 1);
  if (init < coarse_level || init > fine_level)
  {
    throw InvalidArgument("initial level " + std::to_string(init) + " outside [" +
                          std::to_string(coarse_level) + ", " + std::to_string(fine_level) +
                          "]");
  }

  MeshHierarchy h{build_mesh(shape, coarse_level), build_mesh(shape, init),
                  build_mesh(shape, fine_level), {}, {}};
  h.coarse_to_fine = build_prolongation(h.coarse, h.fine);
  h.initial_to_fine = build_prolongation(h.initial, h.fine);
  return h;
}

std::vector<int> color_subdomains(const std::vector<std::vector<Index>> &subdomains,
                                  Index dof_count)
{
  std::vector<std::vector<Index>> owners(static_cast<std::size_t>(dof_count));
  for (std::size_t s = 0; s < subdomains.size(); ++s)
  {
    for (Index d : subdomains[s])
    {
      owners[d].push_back(static_cast<Index>(s));
    }
  }

  std::vector<int> color(subdomains.size(), -1);
  std::vector<char> taken;
  int used = 0;
  for (std::size_t s = 0; s < subdomains.size(); ++s)
  {
    taken.assign(static_cast<std::size_t>(used) + 1, 0);
    for (Index d : subdomains[s])
    {
      for (Index other : owners[d])
      {
        if (color[other] >= 0)
        {
          taken[color[other]] = 1;
        }
      }
    }
    int c = 0;
    while (taken[c])
    {
      ++c;
    }
    color[s] = c;
    used = std::max(used, c + 1);
  }
  return color;
}

Decomposition build_decomposition(const MeshHierarchy &hierarchy, double overlap_ratio)
{
  const Mesh &coarse = hierarchy.coarse;
  const Mesh &fine = hierarchy.fine;
  if (!(overlap_ratio > 0.0 && overlap_ratio <= 0.5))
  {
    throw InvalidArgument("overlap ratio delta/H must lie in (0, 1/2], got " +
                          std::to_string(overlap_ratio));
  }
  if (overlap_ratio * coarse.size() < fine.spacing())
  {
    throw InvalidArgument("overlap delta = " + std::to_string(overlap_ratio) +
                          " H is narrower than one fine layer");
  }

  const int ratio = 1 << (fine.level() - coarse.level());
  const int layers =
    std::max(1, static_cast<int>(std::lround(overlap_ratio * static_cast<double>(ratio))));

  Decomposition decomp;
  decomp.overlap_layers = layers;
  decomp.overlap_ratio = overlap_ratio;

  const int n = coarse.cells_per_side();
  for (int cy = 0; cy < n; ++cy)
  {
    for (int cx = 0; cx < n; ++cx)
    {
      if (!coarse.contains_cell(cx, cy))
      {
        continue;
      }
      // Dilated box in fine cell coordinates: [lo, hi) along each axis.
      const int xlo = cx * ratio - layers, xhi = (cx + 1) * ratio + layers;
      const int ylo = cy * ratio - layers, yhi = (cy + 1) * ratio + layers;
      auto in_piece = [&](int fx, int fy)
      { return fx >= xlo && fx < xhi && fy >= ylo && fy < yhi && fine.contains_cell(fx, fy); };

      std::vector<Index> dofs;
      for (int y = std::max(ylo + 1, 1); y < yhi; ++y)
      {
        for (int x = std::max(xlo + 1, 1); x < xhi; ++x)
        {
          const Index d = fine.dof_at(x, y);
          if (d >= 0 && in_piece(x - 1, y - 1) && in_piece(x, y - 1) && in_piece(x - 1, y) &&
              in_piece(x, y))
          {
            dofs.push_back(d);
          }
        }
      }
      decomp.subdomains.push_back(std::move(dofs));
    }
  }

  const auto colors = color_subdomains(decomp.subdomains, fine.dof_count());
  decomp.color_count = colors.empty() ? 0 : 1 + *std::max_element(colors.begin(), colors.end());
  return decomp;
}

}  // namespace schwarzeig
