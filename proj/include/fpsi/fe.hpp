#pragma once

// Element shape functions: linear and quadratic Lagrange triangles
// (barycentric form), quadratic traces on mesh edges, and cubic Hermite
// segments for the plate.

#include <array>

#include <Eigen/Dense>

#include "fpsi/mesh.hpp"

namespace fpsi {

// ---------------------------------------------------------------------------
// Triangles.  Local node order: vertices v0,v1,v2 then edge midpoints
// m01,m12,m20, matching TriMesh::Cell::{v,e}.
// ---------------------------------------------------------------------------

inline std::array<double, 3> p1_values(const Eigen::Vector3d& lam) {
  return {lam[0], lam[1], lam[2]};
}

inline std::array<double, 6> p2_values(const Eigen::Vector3d& lam) {
  return {lam[0] * (2 * lam[0] - 1), lam[1] * (2 * lam[1] - 1),
          lam[2] * (2 * lam[2] - 1), 4 * lam[0] * lam[1],
          4 * lam[1] * lam[2],       4 * lam[2] * lam[0]};
}

// Gradients of the barycentric coordinates of cell c (constant per cell).
inline std::array<Vec2, 3> barycentric_gradients(const TriMesh& mesh, int c) {
  const auto& cell = mesh.cells[c];
  const Vec2& a = mesh.verts[cell.v[0]];
  const Vec2& b = mesh.verts[cell.v[1]];
  const Vec2& d = mesh.verts[cell.v[2]];
  Mat2 T;
  T.col(0) = b - a;
  T.col(1) = d - a;
  Mat2 Tinv = T.inverse();
  Vec2 g1 = Tinv.row(0);
  Vec2 g2 = Tinv.row(1);
  return {Vec2(-g1 - g2), g1, g2};
}

inline std::array<Vec2, 3> p1_gradients(const std::array<Vec2, 3>& glam) {
  return glam;
}

inline std::array<Vec2, 6> p2_gradients(const Eigen::Vector3d& lam,
                                        const std::array<Vec2, 3>& glam) {
  return {(4 * lam[0] - 1) * glam[0],
          (4 * lam[1] - 1) * glam[1],
          (4 * lam[2] - 1) * glam[2],
          4 * (lam[0] * glam[1] + lam[1] * glam[0]),
          4 * (lam[1] * glam[2] + lam[2] * glam[1]),
          4 * (lam[2] * glam[0] + lam[0] * glam[2])};
}

// Signed area doubled (positive for counterclockwise cells).
inline double cell_det(const TriMesh& mesh, int c) {
  const auto& cell = mesh.cells[c];
  Vec2 e1 = mesh.verts[cell.v[1]] - mesh.verts[cell.v[0]];
  Vec2 e2 = mesh.verts[cell.v[2]] - mesh.verts[cell.v[0]];
  return e1.x() * e2.y() - e1.y() * e2.x();
}

// Global P2 node ids of cell c in local order.
inline std::array<int, 6> p2_cell_nodes(const TriMesh& mesh, int c) {
  const auto& cell = mesh.cells[c];
  return {cell.v[0], cell.v[1], cell.v[2], mesh.n_verts() + cell.e[0],
          mesh.n_verts() + cell.e[1], mesh.n_verts() + cell.e[2]};
}

// ---------------------------------------------------------------------------
// Quadratic trace along a straight edge, parameter s in [0,1] from node a to
// node b with midpoint m: the restriction of any P2 field to the edge depends
// only on the three edge nodes.
// ---------------------------------------------------------------------------

inline std::array<double, 3> edge_p2_values(double s) {
  return {(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)};
}

inline std::array<double, 3> edge_p2_derivs(double s, double edge_length) {
  return {(4 * s - 3) / edge_length, (4 * s - 1) / edge_length,
          (4 - 8 * s) / edge_length};
}

inline std::array<double, 2> edge_p1_values(double s) { return {1 - s, s}; }

// ---------------------------------------------------------------------------
// Cubic Hermite segment on [0,h].  Local DOF order: value(0), slope(0),
// value(h), slope(h).
// ---------------------------------------------------------------------------

struct HermiteShape {
  std::array<double, 4> v;    // values
  std::array<double, 4> d1;   // first derivatives
  std::array<double, 4> d2;   // second derivatives
};

inline HermiteShape hermite_shape(double s, double h) {
  // s in [0,1]; derivatives with respect to the physical coordinate.
  HermiteShape out;
  out.v = {1 - 3 * s * s + 2 * s * s * s, h * (s - 2 * s * s + s * s * s),
           3 * s * s - 2 * s * s * s, h * (-s * s + s * s * s)};
  out.d1 = {(-6 * s + 6 * s * s) / h, 1 - 4 * s + 3 * s * s,
            (6 * s - 6 * s * s) / h, -2 * s + 3 * s * s};
  out.d2 = {(-6 + 12 * s) / (h * h), (-4 + 6 * s) / h, (6 - 12 * s) / (h * h),
            (-2 + 6 * s) / h};
  return out;
}

}  // namespace fpsi
