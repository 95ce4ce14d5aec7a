#pragma once

// Structured reference meshes.
//
// Each rectangular region is meshed by an nx-by-ny lattice of congruent
// quadrilaterals, every quad split along the (lower-left -> upper-right)
// diagonal into two triangles.  The plate carries a matching 1D mesh of nx
// segments on [0,L].  All interface coordinates are generated from one
// integer lattice, so the interface x-coordinates of the fluid, porous and
// plate meshes are bit-identical.

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fpsi/params.hpp"

namespace fpsi {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class Region { fluid, biot, plate };

enum class BoundaryTag {
  interface,
  fluid_left,
  fluid_right,
  fluid_bottom,
  biot_left,
  biot_right,
  biot_top,
  none
};

// Lattice coordinate with exact endpoints: c(0)=a, c(n)=b, uniform inside.
inline double lattice_coord(double a, double b, int i, int n) {
  if (i == 0) return a;
  if (i == n) return b;
  return a + (b - a) * (static_cast<double>(i) / n);
}

struct TriMesh {
  Region region = Region::fluid;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  int nx = 1, ny = 1;

  std::vector<Vec2> verts;  // (nx+1)*(ny+1), lexicographic in (i,j)
  struct Cell {
    std::array<int, 3> v;  // vertex ids, counterclockwise
    std::array<int, 3> e;  // edge ids: e[k] joins v[k] and v[(k+1)%3]
  };
  std::vector<Cell> cells;                    // 2*nx*ny
  std::vector<std::array<int, 2>> edges;      // sorted vertex pairs
  std::vector<Vec2> edge_midpoints;

  double hx() const { return (x1 - x0) / nx; }
  double hy() const { return (y1 - y0) / ny; }
  int vert_id(int i, int j) const { return i + j * (nx + 1); }
  int n_verts() const { return static_cast<int>(verts.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }

  // Quadratic-element node set: vertices first, then edge midpoints.
  int n_p2_nodes() const { return n_verts() + n_edges(); }
  Vec2 p2_node(int k) const {
    return k < n_verts() ? verts[k] : edge_midpoints[k - n_verts()];
  }

  // Cell containing (x,y) for point evaluation (clamped to the domain).
  int locate_cell(double x, double y) const {
    int i = static_cast<int>(std::floor((x - x0) / hx()));
    int j = static_cast<int>(std::floor((y - y0) / hy()));
    i = std::max(0, std::min(nx - 1, i));
    j = std::max(0, std::min(ny - 1, j));
    double u = (x - (x0 + i * hx())) / hx();
    double v = (y - (y0 + j * hy())) / hy();
    int base = 2 * (j * nx + i);
    return v <= u ? base : base + 1;  // below/above the cell diagonal
  }

  // Barycentric coordinates of p in cell c (affine, exact for the mesh).
  Eigen::Vector3d barycentric(int c, const Vec2& p) const {
    const auto& cell = cells[c];
    const Vec2& a = verts[cell.v[0]];
    const Vec2& b = verts[cell.v[1]];
    const Vec2& d = verts[cell.v[2]];
    Mat2 T;
    T.col(0) = b - a;
    T.col(1) = d - a;
    Vec2 lam = T.inverse() * (p - a);
    return {1.0 - lam[0] - lam[1], lam[0], lam[1]};
  }

  BoundaryTag vertex_tag(int vid) const {
    const Vec2& p = verts[vid];
    bool left = p.x() == x0, right = p.x() == x1;
    bool bottom = p.y() == y0, top = p.y() == y1;
    if (region == Region::fluid) {
      if (top) return BoundaryTag::interface;
      if (bottom) return BoundaryTag::fluid_bottom;
      if (left) return BoundaryTag::fluid_left;
      if (right) return BoundaryTag::fluid_right;
    } else {
      if (bottom) return BoundaryTag::interface;
      if (top) return BoundaryTag::biot_top;
      if (left) return BoundaryTag::biot_left;
      if (right) return BoundaryTag::biot_right;
    }
    return BoundaryTag::none;
  }
};

struct PlateMesh {
  double L = 1;
  int nx = 1;
  std::vector<double> nodes;  // nx+1 positions, bit-identical to interface x
  double h() const { return L / nx; }
  int n_nodes() const { return static_cast<int>(nodes.size()); }
};

inline TriMesh build_tri_mesh(Region region, double x0, double x1, double y0,
                              double y1, int nx, int ny) {
  if (!(x1 > x0) || !(y1 > y0) || nx < 1 || ny < 1)
    throw ConfigError("mesh: dimensions must be positive, nx,ny >= 1");
  TriMesh m;
  m.region = region;
  m.x0 = x0; m.x1 = x1; m.y0 = y0; m.y1 = y1;
  m.nx = nx; m.ny = ny;
  m.verts.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      m.verts.emplace_back(lattice_coord(x0, x1, i, nx),
                           lattice_coord(y0, y1, j, ny));

  std::map<std::array<int, 2>, int> edge_ids;
  auto edge_of = [&](int a, int b) {
    std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    auto it = edge_ids.find(key);
    if (it != edge_ids.end()) return it->second;
    int id = static_cast<int>(m.edges.size());
    edge_ids.emplace(key, id);
    m.edges.push_back(key);
    return id;
  };
  auto add_cell = [&](int a, int b, int c) {
    TriMesh::Cell cell;
    cell.v = {a, b, c};
    cell.e = {edge_of(a, b), edge_of(b, c), edge_of(c, a)};
    m.cells.push_back(cell);
  };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v00 = m.vert_id(i, j), v10 = m.vert_id(i + 1, j);
      int v01 = m.vert_id(i, j + 1), v11 = m.vert_id(i + 1, j + 1);
      add_cell(v00, v10, v11);  // below the diagonal
      add_cell(v00, v11, v01);  // above the diagonal
    }
  m.edge_midpoints.reserve(m.edges.size());
  for (const auto& e : m.edges)
    m.edge_midpoints.push_back(0.5 * (m.verts[e[0]] + m.verts[e[1]]));
  return m;
}

struct ReferenceMeshes {
  TriMesh fluid;  // (0,L) x (-R,0)
  TriMesh biot;   // (0,L) x (0,R)
  PlateMesh plate;
};

inline ReferenceMeshes build_reference_meshes(double L, double R, int nx,
                                              int ny) {
  if (!(L > 0) || !(R > 0) || nx < 1 || ny < 1)
    throw ConfigError("mesh: require L > 0, R > 0, nx >= 1, ny >= 1");
  ReferenceMeshes meshes;
  meshes.fluid = build_tri_mesh(Region::fluid, 0.0, L, -R, 0.0, nx, ny);
  meshes.biot = build_tri_mesh(Region::biot, 0.0, L, 0.0, R, nx, ny);
  meshes.plate.L = L;
  meshes.plate.nx = nx;
  meshes.plate.nodes.resize(nx + 1);
  for (int i = 0; i <= nx; ++i)
    meshes.plate.nodes[i] = lattice_coord(0.0, L, i, nx);
  return meshes;
}

// Matched interface node triples, ordered by x.
struct InterfaceMap {
  // Per plate node i: (fluid top vertex, biot bottom vertex).
  std::vector<std::pair<int, int>> vertex_pairs;
  // Per interface segment i: (fluid midpoint P2 node, biot midpoint P2 node).
  std::vector<std::pair<int, int>> midpoint_pairs;
};

inline InterfaceMap build_interface_map(const TriMesh& fluid,
                                        const TriMesh& biot,
                                        const PlateMesh& plate) {
  if (fluid.nx != biot.nx || fluid.nx != plate.nx)
    throw ConfigError("mesh: interface node sets do not match (nx differs)");
  InterfaceMap map;
  for (int i = 0; i <= plate.nx; ++i) {
    int fv = fluid.vert_id(i, fluid.ny);  // y = 0 row of the fluid mesh
    int bv = biot.vert_id(i, 0);          // y = 0 row of the porous mesh
    if (fluid.verts[fv].x() != biot.verts[bv].x() ||
        fluid.verts[fv].x() != plate.nodes[i])
      throw ConfigError("mesh: interface x-coordinates do not match");
    map.vertex_pairs.emplace_back(fv, bv);
  }
  // Midpoint P2 nodes of the horizontal interface edges.
  auto find_edge = [](const TriMesh& m, int a, int b) {
    std::array<int, 2> key{std::min(a, b), std::max(a, b)};
    for (int e = 0; e < m.n_edges(); ++e)
      if (m.edges[e] == key) return e;
    throw ConfigError("mesh: missing interface edge");
  };
  for (int i = 0; i < plate.nx; ++i) {
    int fe = find_edge(fluid, fluid.vert_id(i, fluid.ny),
                       fluid.vert_id(i + 1, fluid.ny));
    int be = find_edge(biot, biot.vert_id(i, 0), biot.vert_id(i + 1, 0));
    map.midpoint_pairs.emplace_back(fluid.n_verts() + fe, biot.n_verts() + be);
  }
  return map;
}

}  // namespace fpsi
