#pragma once

// Discrete fields and degree-of-freedom bookkeeping.
//
//   - plate: clamped cubic Hermite segments on [0,L] (H^2-conforming),
//   - fluid velocity: vector quadratic Lagrange / multiplier: linear Lagrange
//     (an inf-sup stable pair) on the reference fluid mesh,
//   - porous displacement: vector quadratic Lagrange on the reference porous
//     mesh, with eta = 0 on left/right/top and eta_x = 0 on the interface,
//   - pore pressure: linear Lagrange, zero on left/right/top.

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fpsi/fe.hpp"
#include "fpsi/mesh.hpp"

namespace fpsi {

// ---------------------------------------------------------------------------
// Scalar fields.
// ---------------------------------------------------------------------------

struct P1Field {
  const TriMesh* mesh = nullptr;
  Eigen::VectorXd coef;  // one per vertex

  double eval(const Vec2& p) const {
    int c = mesh->locate_cell(p.x(), p.y());
    auto lam = mesh->barycentric(c, p);
    auto val = p1_values(lam);
    const auto& cell = mesh->cells[c];
    double s = 0;
    for (int k = 0; k < 3; ++k) s += coef[cell.v[k]] * val[k];
    return s;
  }
  Vec2 grad(const Vec2& p) const {
    int c = mesh->locate_cell(p.x(), p.y());
    auto g = barycentric_gradients(*mesh, c);
    const auto& cell = mesh->cells[c];
    Vec2 s = Vec2::Zero();
    for (int k = 0; k < 3; ++k) s += coef[cell.v[k]] * g[k];
    return s;
  }
};

struct P2Field {
  const TriMesh* mesh = nullptr;
  Eigen::VectorXd coef;  // one per P2 node

  double eval(const Vec2& p) const {
    int c = mesh->locate_cell(p.x(), p.y());
    auto lam = mesh->barycentric(c, p);
    auto val = p2_values(lam);
    auto nodes = p2_cell_nodes(*mesh, c);
    double s = 0;
    for (int k = 0; k < 6; ++k) s += coef[nodes[k]] * val[k];
    return s;
  }
};

// Vector field with interleaved components: DOF 2*node+c for component c.
struct P2VecField {
  const TriMesh* mesh = nullptr;
  Eigen::VectorXd coef;

  Vec2 eval(const Vec2& p) const {
    int c = mesh->locate_cell(p.x(), p.y());
    auto lam = mesh->barycentric(c, p);
    auto val = p2_values(lam);
    auto nodes = p2_cell_nodes(*mesh, c);
    Vec2 s = Vec2::Zero();
    for (int k = 0; k < 6; ++k) {
      s.x() += coef[2 * nodes[k]] * val[k];
      s.y() += coef[2 * nodes[k] + 1] * val[k];
    }
    return s;
  }
  // grad(i,j) = d u_i / d x_j
  Mat2 grad(const Vec2& p) const {
    int c = mesh->locate_cell(p.x(), p.y());
    auto lam = mesh->barycentric(c, p);
    auto g = p2_gradients(lam, barycentric_gradients(*mesh, c));
    auto nodes = p2_cell_nodes(*mesh, c);
    Mat2 s = Mat2::Zero();
    for (int k = 0; k < 6; ++k) {
      s.row(0) += coef[2 * nodes[k]] * g[k].transpose();
      s.row(1) += coef[2 * nodes[k] + 1] * g[k].transpose();
    }
    return s;
  }
};

// Clamped plate field; DOF 2*node ("value") and 2*node+1 ("slope").
struct PlateField {
  const PlateMesh* mesh = nullptr;
  Eigen::VectorXd coef;

  int locate(double x) const {
    int i = static_cast<int>(std::floor(x / mesh->h()));
    return std::max(0, std::min(mesh->nx - 1, i));
  }
  double eval_with(double x, int deriv) const {
    int i = locate(x);
    double h = mesh->h();
    double s = (x - mesh->nodes[i]) / h;
    auto shape = hermite_shape(s, h);
    const std::array<double, 4>& b =
        deriv == 0 ? shape.v : (deriv == 1 ? shape.d1 : shape.d2);
    int d0 = 2 * i;
    return coef[d0] * b[0] + coef[d0 + 1] * b[1] + coef[d0 + 2] * b[2] +
           coef[d0 + 3] * b[3];
  }
  double value(double x) const { return eval_with(x, 0); }
  double dx(double x) const { return eval_with(x, 1); }
  double dxx(double x) const { return eval_with(x, 2); }
};

// ---------------------------------------------------------------------------
// Interpolation.
// ---------------------------------------------------------------------------

inline P1Field interpolate_p1(const TriMesh& mesh,
                              const std::function<double(Vec2)>& f) {
  P1Field out;
  out.mesh = &mesh;
  out.coef.resize(mesh.n_verts());
  for (int k = 0; k < mesh.n_verts(); ++k) out.coef[k] = f(mesh.verts[k]);
  return out;
}

inline P2Field interpolate_p2(const TriMesh& mesh,
                              const std::function<double(Vec2)>& f) {
  P2Field out;
  out.mesh = &mesh;
  out.coef.resize(mesh.n_p2_nodes());
  for (int k = 0; k < mesh.n_p2_nodes(); ++k) out.coef[k] = f(mesh.p2_node(k));
  return out;
}

inline P2VecField interpolate_p2_vec(const TriMesh& mesh,
                                     const std::function<Vec2(Vec2)>& f) {
  P2VecField out;
  out.mesh = &mesh;
  out.coef.resize(2 * mesh.n_p2_nodes());
  for (int k = 0; k < mesh.n_p2_nodes(); ++k) {
    Vec2 v = f(mesh.p2_node(k));
    out.coef[2 * k] = v.x();
    out.coef[2 * k + 1] = v.y();
  }
  return out;
}

// Hermite interpolation needs the value and the slope.
inline PlateField interpolate_plate(const PlateMesh& mesh,
                                    const std::function<double(double)>& f,
                                    const std::function<double(double)>& fx) {
  PlateField out;
  out.mesh = &mesh;
  out.coef.resize(2 * mesh.n_nodes());
  for (int i = 0; i < mesh.n_nodes(); ++i) {
    out.coef[2 * i] = f(mesh.nodes[i]);
    out.coef[2 * i + 1] = fx(mesh.nodes[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Essential DOF sets.
// ---------------------------------------------------------------------------

// Plate: value and slope clamped at x = 0 and x = L.
inline std::vector<int> plate_clamped_dofs(const PlateMesh& mesh) {
  int last = mesh.n_nodes() - 1;
  return {0, 1, 2 * last, 2 * last + 1};
}

// Fluid velocity: u = 0 on x = 0, x = L and y = -R (interface is free).
inline std::vector<int> fluid_velocity_dirichlet(const TriMesh& fluid) {
  std::vector<int> dofs;
  for (int k = 0; k < fluid.n_p2_nodes(); ++k) {
    Vec2 p = fluid.p2_node(k);
    if (p.x() == fluid.x0 || p.x() == fluid.x1 || p.y() == fluid.y0) {
      dofs.push_back(2 * k);
      dofs.push_back(2 * k + 1);
    }
  }
  return dofs;
}

// Porous displacement (and displacement velocity): both components zero on
// left/right/top; x-component zero on the interface.
inline std::vector<int> biot_displacement_dirichlet(const TriMesh& biot) {
  std::vector<int> dofs;
  for (int k = 0; k < biot.n_p2_nodes(); ++k) {
    Vec2 p = biot.p2_node(k);
    if (p.x() == biot.x0 || p.x() == biot.x1 || p.y() == biot.y1) {
      dofs.push_back(2 * k);
      dofs.push_back(2 * k + 1);
    } else if (p.y() == biot.y0) {
      dofs.push_back(2 * k);  // eta_x = 0 on the interface
    }
  }
  return dofs;
}

// Pore pressure: zero on left/right/top.
inline std::vector<int> pressure_dirichlet(const TriMesh& biot) {
  std::vector<int> dofs;
  for (int k = 0; k < biot.n_verts(); ++k) {
    const Vec2& p = biot.verts[k];
    if (p.x() == biot.x0 || p.x() == biot.x1 || p.y() == biot.y1)
      dofs.push_back(k);
  }
  return dofs;
}

// ---------------------------------------------------------------------------
// Monolithic layout of the fluid-porous step unknowns
// (u, multiplier, displacement velocity, pore pressure).
// ---------------------------------------------------------------------------

struct SystemLayout {
  int off_u = 0, off_pi = 0, off_d = 0, off_p = 0, total = 0;
  std::vector<char> constrained;  // 1 if the global DOF is essential

  static SystemLayout build(const TriMesh& fluid, const TriMesh& biot) {
    SystemLayout lay;
    lay.off_u = 0;
    lay.off_pi = lay.off_u + 2 * fluid.n_p2_nodes();
    lay.off_d = lay.off_pi + fluid.n_verts();
    lay.off_p = lay.off_d + 2 * biot.n_p2_nodes();
    lay.total = lay.off_p + biot.n_verts();
    lay.constrained.assign(lay.total, 0);
    for (int d : fluid_velocity_dirichlet(fluid))
      lay.constrained[lay.off_u + d] = 1;
    for (int d : biot_displacement_dirichlet(biot))
      lay.constrained[lay.off_d + d] = 1;
    for (int d : pressure_dirichlet(biot)) lay.constrained[lay.off_p + d] = 1;
    return lay;
  }
};

// Interface-node DOF identification used for initial-data transfer and nodal
// assertions: plate value DOF <-> porous interface vertical DOF (and the
// collocated fluid node, for reference).
struct InterfaceDofPairs {
  struct Entry {
    int plate_value_dof;   // in the plate field
    int biot_y_dof;        // in the porous vector field
    int fluid_node;        // collocated fluid P2 node
  };
  std::vector<Entry> at_vertices;
};

inline InterfaceDofPairs build_interface_dof_pairs(const InterfaceMap& im) {
  InterfaceDofPairs pairs;
  for (size_t i = 0; i < im.vertex_pairs.size(); ++i) {
    InterfaceDofPairs::Entry e;
    e.plate_value_dof = 2 * static_cast<int>(i);
    e.biot_y_dof = 2 * im.vertex_pairs[i].second + 1;
    e.fluid_node = im.vertex_pairs[i].first;
    pairs.at_vertices.push_back(e);
  }
  return pairs;
}

}  // namespace fpsi
