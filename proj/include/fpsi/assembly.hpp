#pragma once

// Discrete operators of the splitting scheme.
//
// One time step is split into
//   (1) a plate half step: a clamped Hermite bending solve driven by the
//       previous plate velocity,
//   (2) a monolithic implicit solve for (fluid velocity, multiplier,
//       displacement velocity, pore pressure) on the reference meshes, with
//       the plate profile and the regularized displacement frozen at their
//       known values from the start of the step.
//
// One invariant governs everything in this header: the assembled systems and
// every energy, dissipation and residual functional use the *same* quadrature
// rules (a QuadSet).  The per-step energy identities hold exactly at the
// quadrature level, so reusing the rules reproduces them to roundoff instead
// of to quadrature error.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "fpsi/fe.hpp"
#include "fpsi/mesh.hpp"
#include "fpsi/params.hpp"
#include "fpsi/quadrature.hpp"
#include "fpsi/regularizer.hpp"
#include "fpsi/spaces.hpp"
#include "fpsi/transforms.hpp"

namespace fpsi {

// ---------------------------------------------------------------------------
// Shared quadrature.
// ---------------------------------------------------------------------------

struct QuadSet {
  std::vector<TriQuadPoint> vol;  // triangle rule, used on both 2D meshes
  std::vector<QuadPoint1D> seg;   // interface / plate rule

  static QuadSet make(int degree) {
    return {triangle_rule(degree), segment_rule(degree)};
  }
};

// ---------------------------------------------------------------------------
// Interface traces.  Per interface segment i the trace of a quadratic field
// depends on three nodes, ordered (left vertex, right vertex, midpoint) to
// match edge_p2_values.
// ---------------------------------------------------------------------------

inline std::array<int, 3> interface_fluid_nodes(const InterfaceMap& im,
                                                int i) {
  return {im.vertex_pairs[i].first, im.vertex_pairs[i + 1].first,
          im.midpoint_pairs[i].first};
}

inline std::array<int, 3> interface_biot_nodes(const InterfaceMap& im, int i) {
  return {im.vertex_pairs[i].second, im.vertex_pairs[i + 1].second,
          im.midpoint_pairs[i].second};
}

inline Vec2 interface_vec_trace(const P2VecField& f,
                                const std::array<int, 3>& nodes, double s) {
  auto v = edge_p2_values(s);
  Vec2 out = Vec2::Zero();
  for (int k = 0; k < 3; ++k) {
    out.x() += f.coef[2 * nodes[k]] * v[k];
    out.y() += f.coef[2 * nodes[k] + 1] * v[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Plate operator: mass and bending matrices of the clamped Hermite space,
// quadrature-assembled with the shared segment rule, plus the half-step
// solve.  The discrete plate kinetic/bending energies below use the same
// rule, which makes the half-step energy identity exact to roundoff.
// ---------------------------------------------------------------------------

struct PlateOperator {
  const PlateMesh* mesh = nullptr;
  std::vector<QuadPoint1D> rule;
  Eigen::MatrixXd M, K;        // mass, bending
  std::vector<int> clamped;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // of rho_p M + dt^2 K
  double rho_p = 0, dt = 0;

  static PlateOperator build(const PlateMesh& mesh,
                             const std::vector<QuadPoint1D>& rule) {
    PlateOperator op;
    op.mesh = &mesh;
    op.rule = rule;
    int n = 2 * mesh.n_nodes();
    op.M = Eigen::MatrixXd::Zero(n, n);
    op.K = Eigen::MatrixXd::Zero(n, n);
    double h = mesh.h();
    for (int e = 0; e < mesh.nx; ++e) {
      for (const auto& q : rule) {
        auto sh = hermite_shape(q.x, h);
        double w = q.w * h;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b) {
            op.M(2 * e + a, 2 * e + b) += w * sh.v[a] * sh.v[b];
            op.K(2 * e + a, 2 * e + b) += w * sh.d2[a] * sh.d2[b];
          }
      }
    }
    op.clamped = plate_clamped_dofs(mesh);
    return op;
  }

  void factorize(double rho_p_, double dt_) {
    rho_p = rho_p_;
    dt = dt_;
    Eigen::MatrixXd A = rho_p * M + dt * dt * K;
    for (int d : clamped) {
      A.row(d).setZero();
      A.col(d).setZero();
      A(d, d) = 1.0;
    }
    lu.compute(A);
  }

  // Load vector of f against the value shape functions, same rule.
  Eigen::VectorXd load(const std::function<double(double)>& f) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(2 * mesh->n_nodes());
    double h = mesh->h();
    for (int e = 0; e < mesh->nx; ++e)
      for (const auto& q : rule) {
        double x = mesh->nodes[e] + q.x * h;
        auto sh = hermite_shape(q.x, h);
        double w = q.w * h * f(x);
        for (int a = 0; a < 4; ++a) out[2 * e + a] += w * sh.v[a];
      }
    return out;
  }

  // Line integral of a pointwise quantity with the plate rule.
  double integrate(const std::function<double(double)>& f) const {
    double out = 0;
    double h = mesh->h();
    for (int e = 0; e < mesh->nx; ++e)
      for (const auto& q : rule) out += q.w * h * f(mesh->nodes[e] + q.x * h);
    return out;
  }

  // Implicit bending half step:
  //   rho_p (zeta_half - zeta_n, phi) + dt (w_half'', phi'') = dt (f, phi),
  //   zeta_half = (w_half - w_prev) / dt.
  PlateField half_step(const PlateField& omega_prev,
                       const std::function<double(double)>& zeta_n,
                       const std::function<double(double)>* f_load) const {
    Eigen::VectorXd rhs = rho_p * (M * omega_prev.coef) +
                          rho_p * dt * load(zeta_n);
    if (f_load) rhs += dt * dt * load(*f_load);
    for (int d : clamped) rhs[d] = 0.0;
    PlateField out;
    out.mesh = mesh;
    out.coef = lu.solve(rhs);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Frozen geometric data of one step: the regularized deformation at the
// volume quadrature points of the porous mesh, and the regularized interface
// normal at the interface quadrature points.  Built once per step and shared
// by the assembler, the ledgers and the degeneracy monitors.
// ---------------------------------------------------------------------------

struct BiotGeometry {
  int nq = 0;  // quadrature points per cell
  std::vector<Mat2> F;
  std::vector<Mat2> Finv;      // valid only where ok[i] != 0
  std::vector<double> J;
  std::vector<Vec2> disp;      // regularized displacement value
  std::vector<char> ok;        // det > 0
  double min_det = std::numeric_limits<double>::infinity();
  double max_F_norm = 0;
  double max_Finv_norm = 0;

  int idx(int cell, int q) const { return cell * nq + q; }
};

// The mollified evaluations dominate the per-step cost, so the cell loop can
// be split over worker threads.  Every slot is written by exactly one thread
// and the extrema are reduced afterwards in index order, so the result is
// bitwise independent of the thread count.
inline BiotGeometry build_biot_geometry(const TriMesh& biot,
                                        const QuadSet& quad,
                                        const RegularizedField& eta_delta,
                                        int threads = 1) {
  BiotGeometry g;
  g.nq = static_cast<int>(quad.vol.size());
  int n = biot.n_cells() * g.nq;
  g.F.resize(n);
  g.Finv.assign(n, Mat2::Zero());
  g.J.resize(n);
  g.disp.resize(n);
  g.ok.assign(n, 0);
  auto work = [&](int c0, int c1) {
    for (int c = c0; c < c1; ++c) {
      const auto& cell = biot.cells[c];
      for (int q = 0; q < g.nq; ++q) {
        const auto& lam = quad.vol[q].lambda;
        Vec2 p = lam[0] * biot.verts[cell.v[0]] +
                 lam[1] * biot.verts[cell.v[1]] +
                 lam[2] * biot.verts[cell.v[2]];
        int i = g.idx(c, q);
        Mat2 F = Mat2::Identity() + eta_delta.grad(p);
        g.F[i] = F;
        g.J[i] = F.determinant();
        g.disp[i] = eta_delta.eval(p);
        if (g.J[i] > 0) {
          g.ok[i] = 1;
          g.Finv[i] = F.inverse();
        }
      }
    }
  };
  int nc = biot.n_cells();
  threads = std::max(1, std::min(threads, nc));
  if (threads == 1) {
    work(0, nc);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back(work, nc * t / threads, nc * (t + 1) / threads);
    for (auto& th : pool) th.join();
  }
  for (int i = 0; i < n; ++i) {
    g.min_det = std::min(g.min_det, g.J[i]);
    g.max_F_norm = std::max(g.max_F_norm, g.F[i].norm());
    if (g.ok[i]) g.max_Finv_norm = std::max(g.max_Finv_norm, g.Finv[i].norm());
  }
  return g;
}

// Regularized interface normals (-d/dx of the vertical trace, 1) at the
// interface quadrature points, ordered (element, rule point).
inline std::vector<Vec2> build_interface_delta_normals(
    const PlateMesh& plate, const QuadSet& quad,
    const RegularizedField& eta_delta) {
  std::vector<Vec2> out;
  out.reserve(plate.nx * quad.seg.size());
  double h = plate.h();
  for (int e = 0; e < plate.nx; ++e)
    for (const auto& q : quad.seg)
      out.push_back(eta_delta.interface_normal(plate.nodes[e] + q.x * h));
  return out;
}

// Minimum of R - |omega| over the interface quadrature points.
inline double min_gap(const PlateMesh& plate, const QuadSet& quad,
                      const PlateField& omega, double R) {
  double gap = std::numeric_limits<double>::infinity();
  double h = plate.h();
  for (int e = 0; e < plate.nx; ++e)
    for (const auto& q : quad.seg) {
      double x = plate.nodes[e] + q.x * h;
      gap = std::min(gap, R - std::abs(omega.value(x)));
    }
  return gap;
}

// ---------------------------------------------------------------------------
// Step context and frozen per-step data.
// ---------------------------------------------------------------------------

struct ForcingSet {
  std::function<Vec2(const Vec2&)> fluid;      // physical fluid frame
  std::function<Vec2(const Vec2&)> biot;       // reference porous frame
  std::function<double(const Vec2&)> pressure; // physical (regularized) frame
  std::function<double(double)> plate;         // interface abscissa
};

struct StepContext {
  const ReferenceMeshes* meshes = nullptr;
  const InterfaceMap* imap = nullptr;
  PhysicalParams phys;
  QuadSet quad;
  SystemLayout layout;

  static StepContext make(const ReferenceMeshes& m, const InterfaceMap& im,
                          const PhysicalParams& phys, int quad_degree = 6) {
    StepContext ctx;
    ctx.meshes = &m;
    ctx.imap = &im;
    ctx.phys = phys;
    ctx.quad = QuadSet::make(quad_degree);
    ctx.layout = SystemLayout::build(m.fluid, m.biot);
    return ctx;
  }
};

struct StepData {
  const P2VecField* u_n = nullptr;
  const P2VecField* eta_n = nullptr;
  const P2VecField* etadot_n = nullptr;
  const P1Field* p_n = nullptr;
  const PlateField* omega_n = nullptr;     // profile at the start of the step
  const PlateField* zeta_half = nullptr;   // intermediate plate velocity
  const BiotGeometry* geom = nullptr;      // regularized deformation data
  const std::vector<Vec2>* delta_normals = nullptr;
  double dt = 0;
  ForcingSet forcing;  // members may be empty
};

struct CoupledSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
};

inline Eigen::VectorXd solve_sparse(const CoupledSystem& sys) {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(sys.A);
  if (lu.info() != Eigen::Success)
    throw NumericError("coupled step: sparse factorization failed");
  Eigen::VectorXd x = lu.solve(sys.b);
  if (lu.info() != Eigen::Success)
    throw NumericError("coupled step: sparse solve failed");
  return x;
}

// ---------------------------------------------------------------------------
// Monolithic assembly of the implicit step.  Unknown ordering follows
// SystemLayout: fluid velocity, multiplier, displacement velocity d (the new
// displacement is eta_n + dt d), pore pressure.  Essential rows are replaced
// by the identity with zero data (all essential values are homogeneous).
// ---------------------------------------------------------------------------

inline CoupledSystem assemble_coupled(const StepContext& ctx,
                                      const StepData& sd) {
  const TriMesh& fluid = ctx.meshes->fluid;
  const TriMesh& biot = ctx.meshes->biot;
  const PlateMesh& plate = ctx.meshes->plate;
  const PhysicalParams& ph = ctx.phys;
  const SystemLayout& lay = ctx.layout;
  const double dt = sd.dt, R = ph.R;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(200 * (fluid.n_cells() + biot.n_cells()));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(lay.total);
  auto add = [&](int r, int c, double v) {
    if (!lay.constrained[r]) trip.emplace_back(r, c, v);
  };
  auto addb = [&](int r, double v) {
    if (!lay.constrained[r]) b[r] += v;
  };

  // --- fluid volume -------------------------------------------------------
  for (int c = 0; c < fluid.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(fluid, c);
    auto glam = barycentric_gradients(fluid, c);
    double det = cell_det(fluid, c);
    const auto& cell = fluid.cells[c];
    for (const auto& q : ctx.quad.vol) {
      const auto& lam = q.lambda;
      Vec2 p = lam[0] * fluid.verts[cell.v[0]] +
               lam[1] * fluid.verts[cell.v[1]] +
               lam[2] * fluid.verts[cell.v[2]];
      double w = q.w * det;
      auto phi = p2_values(lam);
      auto gphi = p2_gradients(lam, glam);
      double om = sd.omega_n->value(p.x()), omx = sd.omega_n->dx(p.x());
      double Jf = fluid_jacobian(om, R);
      double zeta = sd.zeta_half->value(p.x());

      std::array<Vec2, 6> G;  // transformed scalar gradients
      for (int k = 0; k < 6; ++k)
        G[k] = fluid_transformed_grad(om, omx, R, p.y(), gphi[k]);

      Vec2 un = Vec2::Zero();
      for (int k = 0; k < 6; ++k) {
        un.x() += sd.u_n->coef[2 * nodes[k]] * phi[k];
        un.y() += sd.u_n->coef[2 * nodes[k] + 1] * phi[k];
      }
      Vec2 transport = un - fluid_domain_velocity(zeta, R, p.y());

      // symmetric transformed gradients of the 12 local basis fields
      std::array<Mat2, 12> D;
      for (int k = 0; k < 6; ++k)
        for (int cc = 0; cc < 2; ++cc) {
          Mat2 m = Mat2::Zero();
          m.row(cc) = G[k].transpose();
          D[2 * k + cc] = sym_part(m);
        }

      for (int l = 0; l < 6; ++l)
        for (int e = 0; e < 2; ++e) {
          int row = lay.off_u + 2 * nodes[l] + e;
          if (lay.constrained[row]) continue;
          for (int k = 0; k < 6; ++k)
            for (int cc = 0; cc < 2; ++cc) {
              int col = lay.off_u + 2 * nodes[k] + cc;
              double v = 2.0 * ph.nu * Jf *
                         (D[2 * k + cc].cwiseProduct(D[2 * l + e])).sum();
              if (cc == e) {
                v += (Jf / dt) * phi[k] * phi[l];          // discrete inertia
                v += 0.5 * Jf *
                     (transport.dot(G[k]) * phi[l] -
                      transport.dot(G[l]) * phi[k]);        // skew transport
                v += 0.5 / R * zeta * phi[k] * phi[l];      // geometric reaction
              }
              trip.emplace_back(row, col, w * v);
            }
          // incompressibility multiplier
          for (int m = 0; m < 3; ++m)
            trip.emplace_back(row, lay.off_pi + cell.v[m],
                              -w * Jf * lam[m] * G[l][e]);
          b[row] += w * (Jf / dt) * un[e] * phi[l];
          if (sd.forcing.fluid) {
            Vec2 xp = ale_map({[&](double x) { return sd.omega_n->value(x); },
                               [&](double x) { return sd.omega_n->dx(x); }},
                              R, p);
            b[row] += w * Jf * sd.forcing.fluid(xp)[e] * phi[l];
          }
        }
      // divergence rows (multiplier test functions)
      for (int m = 0; m < 3; ++m) {
        int row = lay.off_pi + cell.v[m];
        for (int k = 0; k < 6; ++k)
          for (int cc = 0; cc < 2; ++cc)
            add(row, lay.off_u + 2 * nodes[k] + cc,
                -w * Jf * lam[m] * G[k][cc]);
      }
    }
  }

  // --- porous volume ------------------------------------------------------
  for (int c = 0; c < biot.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(biot, c);
    auto glam = barycentric_gradients(biot, c);
    double det = cell_det(biot, c);
    const auto& cell = biot.cells[c];
    for (int qi = 0; qi < static_cast<int>(ctx.quad.vol.size()); ++qi) {
      const auto& q = ctx.quad.vol[qi];
      const auto& lam = q.lambda;
      Vec2 p = lam[0] * biot.verts[cell.v[0]] +
               lam[1] * biot.verts[cell.v[1]] +
               lam[2] * biot.verts[cell.v[2]];
      double w = q.w * det;
      auto psi = p2_values(lam);
      auto gpsi = p2_gradients(lam, glam);
      int gi = sd.geom->idx(c, qi);
      if (!sd.geom->ok[gi])
        throw DegeneracyError(
            "porous domain degenerate: det(Id + grad eta_delta) <= 0");
      double Jd = sd.geom->J[gi];
      const Mat2& Finv = sd.geom->Finv[gi];

      std::array<Vec2, 3> gr;   // transformed pressure gradients
      for (int m = 0; m < 3; ++m) gr[m] = Finv.transpose() * glam[m];
      std::array<Vec2, 6> Gd;   // transformed displacement gradients
      for (int k = 0; k < 6; ++k) Gd[k] = Finv.transpose() * gpsi[k];

      std::array<Mat2, 12> D;   // reference-frame symmetric gradients
      for (int k = 0; k < 6; ++k)
        for (int cc = 0; cc < 2; ++cc) {
          Mat2 m = Mat2::Zero();
          m.row(cc) = gpsi[k].transpose();
          D[2 * k + cc] = sym_part(m);
        }

      Mat2 grad_eta_n = Mat2::Zero();
      Vec2 etadot_n = Vec2::Zero();
      double p_n = 0;
      for (int k = 0; k < 6; ++k) {
        grad_eta_n.row(0) += sd.eta_n->coef[2 * nodes[k]] * gpsi[k].transpose();
        grad_eta_n.row(1) +=
            sd.eta_n->coef[2 * nodes[k] + 1] * gpsi[k].transpose();
        etadot_n.x() += sd.etadot_n->coef[2 * nodes[k]] * psi[k];
        etadot_n.y() += sd.etadot_n->coef[2 * nodes[k] + 1] * psi[k];
      }
      for (int m = 0; m < 3; ++m) p_n += sd.p_n->coef[cell.v[m]] * lam[m];
      Mat2 DEn = sym_part(grad_eta_n);
      double divEn = grad_eta_n.trace();

      for (int l = 0; l < 6; ++l)
        for (int e = 0; e < 2; ++e) {
          int row = lay.off_d + 2 * nodes[l] + e;
          if (lay.constrained[row]) continue;
          const Mat2& Dt = D[2 * l + e];
          double divt = gpsi[l][e];
          for (int k = 0; k < 6; ++k)
            for (int cc = 0; cc < 2; ++cc) {
              int col = lay.off_d + 2 * nodes[k] + cc;
              double dd = (D[2 * k + cc].cwiseProduct(Dt)).sum();
              double divs = gpsi[k][cc];
              double v = dt * (2.0 * ph.mu_e * dd + ph.lambda_e * divs * divt) +
                         2.0 * ph.mu_v * dd + ph.lambda_v * divs * divt;
              if (cc == e) v += (ph.rho_b / dt) * psi[k] * psi[l];
              trip.emplace_back(row, col, w * v);
            }
          for (int m = 0; m < 3; ++m)
            trip.emplace_back(row, lay.off_p + cell.v[m],
                              -w * ph.alpha * Jd * lam[m] * Gd[l][e]);
          b[row] += w * ((ph.rho_b / dt) * etadot_n[e] * psi[l] -
                         2.0 * ph.mu_e * (DEn.cwiseProduct(Dt)).sum() -
                         ph.lambda_e * divEn * divt);
          if (sd.forcing.biot) b[row] += w * sd.forcing.biot(p)[e] * psi[l];
        }

      for (int m = 0; m < 3; ++m) {
        int row = lay.off_p + cell.v[m];
        if (lay.constrained[row]) continue;
        for (int n2 = 0; n2 < 3; ++n2)
          trip.emplace_back(row, lay.off_p + cell.v[n2],
                            w * ((ph.c0 / dt) * lam[m] * lam[n2] +
                                 ph.kappa * Jd * gr[m].dot(gr[n2])));
        for (int k = 0; k < 6; ++k)
          for (int cc = 0; cc < 2; ++cc)
            trip.emplace_back(row, lay.off_d + 2 * nodes[k] + cc,
                              -w * ph.alpha * Jd * psi[k] * gr[m][cc]);
        b[row] += w * (ph.c0 / dt) * p_n * lam[m];
        // The pore source is a reference-frame density: its data stays
        // fixed while the regularized geometry varies, mirroring how the
        // problem data is independent of the regularization width.
        if (sd.forcing.pressure)
          b[row] += w * sd.forcing.pressure(p) * lam[m];
      }
    }
  }

  // --- interface ----------------------------------------------------------
  const int nq = static_cast<int>(ctx.quad.seg.size());
  double h = plate.h();
  for (int e = 0; e < plate.nx; ++e) {
    auto fn = interface_fluid_nodes(*ctx.imap, e);
    auto bn = interface_biot_nodes(*ctx.imap, e);
    std::array<int, 2> pv = {ctx.imap->vertex_pairs[e].second,
                             ctx.imap->vertex_pairs[e + 1].second};
    for (int qi = 0; qi < nq; ++qi) {
      const auto& q = ctx.quad.seg[qi];
      double s = q.x, x = plate.nodes[e] + s * h, w = q.w * h;
      auto tr = edge_p2_values(s);
      auto r1 = edge_p1_values(s);
      double omx = sd.omega_n->dx(x);
      Vec2 nh = interface_normal(omx);
      Vec2 th = interface_tangent(omx);
      double Jg = interface_jacobian(omx);
      const Vec2& nd = (*sd.delta_normals)[e * nq + qi];
      Vec2 un = interface_vec_trace(*sd.u_n, fn, s);
      double zeta = sd.zeta_half->value(x);

      auto ucol = [&](int k, int cc) { return lay.off_u + 2 * fn[k] + cc; };
      auto dcol = [&](int k, int cc) { return lay.off_d + 2 * bn[k] + cc; };
      auto pcol = [&](int m) { return lay.off_p + pv[m]; };

      for (int l = 0; l < 3; ++l)
        for (int ee = 0; ee < 2; ++ee) {
          // normal-stress balance: (half u.u_n - p) against (psi - v).n
          double t_d = tr[l] * nh[ee], t_u = -tr[l] * nh[ee];
          for (int k = 0; k < 3; ++k)
            for (int cc = 0; cc < 2; ++cc) {
              double trial = 0.5 * tr[k] * un[cc];
              add(dcol(l, ee), ucol(k, cc), w * trial * t_d);
              add(ucol(l, ee), ucol(k, cc), w * trial * t_u);
            }
          for (int m = 0; m < 2; ++m) {
            add(dcol(l, ee), pcol(m), w * (-r1[m]) * t_d);
            add(ucol(l, ee), pcol(m), w * (-r1[m]) * t_u);
          }
          // kinetic flux: half (u - d).n (u_n . v), fluid rows only
          for (int k = 0; k < 3; ++k)
            for (int cc = 0; cc < 2; ++cc) {
              double v = w * 0.5 * tr[k] * nh[cc] * un[ee] * tr[l];
              add(ucol(l, ee), ucol(k, cc), v);
              add(ucol(l, ee), dcol(k, cc), -v);
            }
          // tangential slip friction
          if (ph.beta > 0) {
            double test_d = tr[l] * th[ee], test_u = -tr[l] * th[ee];
            for (int k = 0; k < 3; ++k)
              for (int cc = 0; cc < 2; ++cc) {
                double tt = tr[k] * th[cc];
                add(dcol(l, ee), dcol(k, cc), w * ph.beta / Jg * tt * test_d);
                add(dcol(l, ee), ucol(k, cc), w * ph.beta / Jg * (-tt) * test_d);
                add(ucol(l, ee), dcol(k, cc), w * ph.beta / Jg * tt * test_u);
                add(ucol(l, ee), ucol(k, cc), w * ph.beta / Jg * (-tt) * test_u);
              }
          }
        }

      // plate inertia carried by the vertical displacement-velocity trace
      for (int l = 0; l < 3; ++l) {
        int row = dcol(l, 1);
        if (!lay.constrained[row]) {
          for (int k = 0; k < 3; ++k)
            trip.emplace_back(row, dcol(k, 1),
                              w * (ph.rho_p / dt) * tr[k] * tr[l]);
          b[row] += w * (ph.rho_p / dt) * zeta * tr[l];
        }
      }

      // pressure equation: regularized normal flux of d, and mass coupling
      for (int m = 0; m < 2; ++m) {
        int row = pcol(m);
        if (lay.constrained[row]) continue;
        for (int k = 0; k < 3; ++k)
          for (int cc = 0; cc < 2; ++cc) {
            trip.emplace_back(row, dcol(k, cc),
                              -w * ph.alpha * tr[k] * nd[cc] * r1[m]);
            trip.emplace_back(row, ucol(k, cc), -w * tr[k] * nh[cc] * r1[m]);
            trip.emplace_back(row, dcol(k, cc), w * tr[k] * nh[cc] * r1[m]);
          }
      }
    }
  }

  for (int i = 0; i < lay.total; ++i)
    if (lay.constrained[i]) trip.emplace_back(i, i, 1.0);

  CoupledSystem sys;
  sys.A.resize(lay.total, lay.total);
  sys.A.setFromTriplets(trip.begin(), trip.end());
  sys.b = std::move(b);
  return sys;
}

// Standalone fluid transport matrix (the skew convective block on the
// velocity unknowns alone), for structural verification.
inline Eigen::SparseMatrix<double> fluid_convection_matrix(
    const StepContext& ctx, const P2VecField& u_n, const PlateField& omega_n,
    const PlateField& zeta_half) {
  const TriMesh& fluid = ctx.meshes->fluid;
  const double R = ctx.phys.R;
  int n = 2 * fluid.n_p2_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  for (int c = 0; c < fluid.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(fluid, c);
    auto glam = barycentric_gradients(fluid, c);
    double det = cell_det(fluid, c);
    const auto& cell = fluid.cells[c];
    for (const auto& q : ctx.quad.vol) {
      const auto& lam = q.lambda;
      Vec2 p = lam[0] * fluid.verts[cell.v[0]] +
               lam[1] * fluid.verts[cell.v[1]] +
               lam[2] * fluid.verts[cell.v[2]];
      double w = q.w * det;
      auto phi = p2_values(lam);
      auto gphi = p2_gradients(lam, glam);
      double om = omega_n.value(p.x()), omx = omega_n.dx(p.x());
      double Jf = fluid_jacobian(om, R);
      double zeta = zeta_half.value(p.x());
      std::array<Vec2, 6> G;
      for (int k = 0; k < 6; ++k)
        G[k] = fluid_transformed_grad(om, omx, R, p.y(), gphi[k]);
      Vec2 un = Vec2::Zero();
      for (int k = 0; k < 6; ++k) {
        un.x() += u_n.coef[2 * nodes[k]] * phi[k];
        un.y() += u_n.coef[2 * nodes[k] + 1] * phi[k];
      }
      Vec2 tr2 = un - fluid_domain_velocity(zeta, R, p.y());
      for (int l = 0; l < 6; ++l)
        for (int k = 0; k < 6; ++k) {
          double v = w * 0.5 * Jf *
                     (tr2.dot(G[k]) * phi[l] - tr2.dot(G[l]) * phi[k]);
          for (int e = 0; e < 2; ++e)
            trip.emplace_back(2 * nodes[l] + e, 2 * nodes[k] + e, v);
        }
    }
  }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

// ---------------------------------------------------------------------------
// Energy, dissipation and jump functionals (shared quadrature).
// ---------------------------------------------------------------------------

struct EnergySnapshot {
  double fluid_kin = 0, biot_kin = 0, storage = 0, elastic = 0;
  double plate_kin = 0, plate_bend = 0;
  double total() const {
    return fluid_kin + biot_kin + storage + elastic + plate_kin + plate_bend;
  }
};

// Energy of a state.  The fluid weight uses the plate profile attached to
// the same time level; the plate velocity is passed as an evaluator so full
// steps (trace of the displacement velocity) and half steps (Hermite field)
// share one code path.
inline EnergySnapshot energy_snapshot(
    const StepContext& ctx, const P2VecField& u, const PlateField& omega,
    const P2VecField& eta, const P2VecField& etadot, const P1Field& p,
    const std::function<double(double)>& zeta_at,
    const PlateField& omega_bend) {
  const TriMesh& fluid = ctx.meshes->fluid;
  const TriMesh& biot = ctx.meshes->biot;
  const PlateMesh& plate = ctx.meshes->plate;
  const PhysicalParams& ph = ctx.phys;
  EnergySnapshot E;

  for (int c = 0; c < fluid.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(fluid, c);
    double det = cell_det(fluid, c);
    const auto& cell = fluid.cells[c];
    for (const auto& q : ctx.quad.vol) {
      const auto& lam = q.lambda;
      Vec2 pt = lam[0] * fluid.verts[cell.v[0]] +
                lam[1] * fluid.verts[cell.v[1]] +
                lam[2] * fluid.verts[cell.v[2]];
      auto phi = p2_values(lam);
      Vec2 uv = Vec2::Zero();
      for (int k = 0; k < 6; ++k) {
        uv.x() += u.coef[2 * nodes[k]] * phi[k];
        uv.y() += u.coef[2 * nodes[k] + 1] * phi[k];
      }
      double Jf = fluid_jacobian(omega.value(pt.x()), ph.R);
      E.fluid_kin += q.w * det * 0.5 * Jf * uv.squaredNorm();
    }
  }

  for (int c = 0; c < biot.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(biot, c);
    auto glam = barycentric_gradients(biot, c);
    double det = cell_det(biot, c);
    for (const auto& q : ctx.quad.vol) {
      const auto& lam = q.lambda;
      auto psi = p2_values(lam);
      auto gpsi = p2_gradients(lam, glam);
      Vec2 dv = Vec2::Zero();
      Mat2 ge = Mat2::Zero();
      double pv = 0;
      for (int k = 0; k < 6; ++k) {
        dv.x() += etadot.coef[2 * nodes[k]] * psi[k];
        dv.y() += etadot.coef[2 * nodes[k] + 1] * psi[k];
        ge.row(0) += eta.coef[2 * nodes[k]] * gpsi[k].transpose();
        ge.row(1) += eta.coef[2 * nodes[k] + 1] * gpsi[k].transpose();
      }
      const auto& cell = biot.cells[c];
      for (int m = 0; m < 3; ++m) pv += p.coef[cell.v[m]] * lam[m];
      double w = q.w * det;
      E.biot_kin += w * 0.5 * ph.rho_b * dv.squaredNorm();
      E.storage += w * 0.5 * ph.c0 * pv * pv;
      E.elastic += w * (ph.mu_e * sym_part(ge).squaredNorm() +
                        0.5 * ph.lambda_e * ge.trace() * ge.trace());
    }
  }

  double h = plate.h();
  for (int e = 0; e < plate.nx; ++e)
    for (const auto& q : ctx.quad.seg) {
      double x = plate.nodes[e] + q.x * h;
      double z = zeta_at(x), wxx = omega_bend.dxx(x);
      E.plate_kin += q.w * h * 0.5 * ph.rho_p * z * z;
      E.plate_bend += q.w * h * 0.5 * wxx * wxx;
    }
  return E;
}

// Plate-velocity evaluators for the two time levels.
inline std::function<double(double)> zeta_from_trace(const P2VecField& etadot) {
  return [&etadot](double x) { return etadot.eval({x, 0.0}).y(); };
}
inline std::function<double(double)> zeta_from_plate(const PlateField& z) {
  return [&z](double x) { return z.value(x); };
}

struct DissipationLedger {
  double fluid_visc = 0, biot_visc = 0, darcy = 0, bjs = 0;
  double total() const { return fluid_visc + biot_visc + darcy + bjs; }
};

// Dissipation released by one implicit step (already multiplied by dt).
inline DissipationLedger dissipation_ledger(const StepContext& ctx,
                                            const StepData& sd,
                                            const P2VecField& u_new,
                                            const P2VecField& etadot_new,
                                            const P1Field& p_new) {
  const TriMesh& fluid = ctx.meshes->fluid;
  const TriMesh& biot = ctx.meshes->biot;
  const PlateMesh& plate = ctx.meshes->plate;
  const PhysicalParams& ph = ctx.phys;
  DissipationLedger D;

  for (int c = 0; c < fluid.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(fluid, c);
    auto glam = barycentric_gradients(fluid, c);
    double det = cell_det(fluid, c);
    const auto& cell = fluid.cells[c];
    for (const auto& q : ctx.quad.vol) {
      const auto& lam = q.lambda;
      Vec2 pt = lam[0] * fluid.verts[cell.v[0]] +
                lam[1] * fluid.verts[cell.v[1]] +
                lam[2] * fluid.verts[cell.v[2]];
      auto gphi = p2_gradients(lam, glam);
      double om = sd.omega_n->value(pt.x()), omx = sd.omega_n->dx(pt.x());
      double Jf = fluid_jacobian(om, ph.R);
      Mat2 gu = Mat2::Zero();
      for (int k = 0; k < 6; ++k) {
        gu.row(0) += u_new.coef[2 * nodes[k]] * gphi[k].transpose();
        gu.row(1) += u_new.coef[2 * nodes[k] + 1] * gphi[k].transpose();
      }
      Mat2 Dm = sym_part(fluid_transformed_grad(om, omx, ph.R, pt.y(), gu));
      D.fluid_visc += q.w * det * 2.0 * ph.nu * sd.dt * Jf * Dm.squaredNorm();
    }
  }

  for (int c = 0; c < biot.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(biot, c);
    auto glam = barycentric_gradients(biot, c);
    double det = cell_det(biot, c);
    const auto& cell = biot.cells[c];
    for (int qi = 0; qi < static_cast<int>(ctx.quad.vol.size()); ++qi) {
      const auto& q = ctx.quad.vol[qi];
      const auto& lam = q.lambda;
      auto gpsi = p2_gradients(lam, glam);
      Mat2 gd = Mat2::Zero();
      Vec2 gp = Vec2::Zero();
      for (int k = 0; k < 6; ++k) {
        gd.row(0) += etadot_new.coef[2 * nodes[k]] * gpsi[k].transpose();
        gd.row(1) += etadot_new.coef[2 * nodes[k] + 1] * gpsi[k].transpose();
      }
      for (int m = 0; m < 3; ++m) gp += p_new.coef[cell.v[m]] * glam[m];
      int gi = sd.geom->idx(c, qi);
      Vec2 gpd = sd.geom->Finv[gi].transpose() * gp;
      double w = q.w * det;
      D.biot_visc += w * sd.dt *
                     (2.0 * ph.mu_v * sym_part(gd).squaredNorm() +
                      ph.lambda_v * gd.trace() * gd.trace());
      D.darcy += w * sd.dt * ph.kappa * sd.geom->J[gi] * gpd.squaredNorm();
    }
  }

  if (ph.beta > 0) {
    double h = plate.h();
    for (int e = 0; e < plate.nx; ++e) {
      auto fn = interface_fluid_nodes(*ctx.imap, e);
      auto bn = interface_biot_nodes(*ctx.imap, e);
      for (const auto& q : ctx.quad.seg) {
        double x = plate.nodes[e] + q.x * h;
        double omx = sd.omega_n->dx(x);
        Vec2 th = interface_tangent(omx);
        double Jg = interface_jacobian(omx);
        Vec2 slip = interface_vec_trace(etadot_new, bn, q.x) -
                    interface_vec_trace(u_new, fn, q.x);
        double st = slip.dot(th);
        D.bjs += q.w * h * ph.beta * sd.dt / Jg * st * st;
      }
    }
  }
  return D;
}

// Squared-difference ("numerical jump") energy absorbed by the implicit
// step; the displacement jump is dt * d.
inline double jump_energy(const StepContext& ctx, const StepData& sd,
                          const P2VecField& u_new,
                          const P2VecField& etadot_new, const P1Field& p_new) {
  const TriMesh& fluid = ctx.meshes->fluid;
  const TriMesh& biot = ctx.meshes->biot;
  const PlateMesh& plate = ctx.meshes->plate;
  const PhysicalParams& ph = ctx.phys;
  double out = 0;

  for (int c = 0; c < fluid.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(fluid, c);
    double det = cell_det(fluid, c);
    const auto& cell = fluid.cells[c];
    for (const auto& q : ctx.quad.vol) {
      const auto& lam = q.lambda;
      Vec2 pt = lam[0] * fluid.verts[cell.v[0]] +
                lam[1] * fluid.verts[cell.v[1]] +
                lam[2] * fluid.verts[cell.v[2]];
      auto phi = p2_values(lam);
      Vec2 du = Vec2::Zero();
      for (int k = 0; k < 6; ++k) {
        du.x() += (u_new.coef[2 * nodes[k]] - sd.u_n->coef[2 * nodes[k]]) *
                  phi[k];
        du.y() +=
            (u_new.coef[2 * nodes[k] + 1] - sd.u_n->coef[2 * nodes[k] + 1]) *
            phi[k];
      }
      double Jf = fluid_jacobian(sd.omega_n->value(pt.x()), ph.R);
      out += q.w * det * 0.5 * Jf * du.squaredNorm();
    }
  }

  for (int c = 0; c < biot.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(biot, c);
    auto glam = barycentric_gradients(biot, c);
    double det = cell_det(biot, c);
    const auto& cell = biot.cells[c];
    for (const auto& q : ctx.quad.vol) {
      const auto& lam = q.lambda;
      auto psi = p2_values(lam);
      auto gpsi = p2_gradients(lam, glam);
      Vec2 dd = Vec2::Zero();
      Mat2 gj = Mat2::Zero();  // gradient of the displacement jump dt*d
      double dp = 0;
      for (int k = 0; k < 6; ++k) {
        double jx = etadot_new.coef[2 * nodes[k]] -
                    sd.etadot_n->coef[2 * nodes[k]];
        double jy = etadot_new.coef[2 * nodes[k] + 1] -
                    sd.etadot_n->coef[2 * nodes[k] + 1];
        dd.x() += jx * psi[k];
        dd.y() += jy * psi[k];
        gj.row(0) +=
            sd.dt * etadot_new.coef[2 * nodes[k]] * gpsi[k].transpose();
        gj.row(1) +=
            sd.dt * etadot_new.coef[2 * nodes[k] + 1] * gpsi[k].transpose();
      }
      for (int m = 0; m < 3; ++m)
        dp += (p_new.coef[cell.v[m]] - sd.p_n->coef[cell.v[m]]) * lam[m];
      double w = q.w * det;
      out += w * (0.5 * ph.rho_b * dd.squaredNorm() + 0.5 * ph.c0 * dp * dp +
                  ph.mu_e * sym_part(gj).squaredNorm() +
                  0.5 * ph.lambda_e * gj.trace() * gj.trace());
    }
  }

  double h = plate.h();
  for (int e = 0; e < plate.nx; ++e) {
    auto bn = interface_biot_nodes(*ctx.imap, e);
    for (const auto& q : ctx.quad.seg) {
      double x = plate.nodes[e] + q.x * h;
      double dz =
          interface_vec_trace(etadot_new, bn, q.x).y() - sd.zeta_half->value(x);
      out += q.w * h * 0.5 * ph.rho_p * dz * dz;
    }
  }
  return out;
}

// Work done by the prescribed forcing over the implicit step (times dt),
// evaluated against the new solution with the same quadrature and weights as
// the assembled right-hand sides.
inline double forcing_work(const StepContext& ctx, const StepData& sd,
                           const P2VecField& u_new,
                           const P2VecField& etadot_new,
                           const P1Field& p_new) {
  const TriMesh& fluid = ctx.meshes->fluid;
  const TriMesh& biot = ctx.meshes->biot;
  const PhysicalParams& ph = ctx.phys;
  double out = 0;
  if (sd.forcing.fluid) {
    Profile1D prof{[&](double x) { return sd.omega_n->value(x); },
                   [&](double x) { return sd.omega_n->dx(x); }};
    for (int c = 0; c < fluid.n_cells(); ++c) {
      auto nodes = p2_cell_nodes(fluid, c);
      double det = cell_det(fluid, c);
      const auto& cell = fluid.cells[c];
      for (const auto& q : ctx.quad.vol) {
        const auto& lam = q.lambda;
        Vec2 pt = lam[0] * fluid.verts[cell.v[0]] +
                  lam[1] * fluid.verts[cell.v[1]] +
                  lam[2] * fluid.verts[cell.v[2]];
        auto phi = p2_values(lam);
        Vec2 uv = Vec2::Zero();
        for (int k = 0; k < 6; ++k) {
          uv.x() += u_new.coef[2 * nodes[k]] * phi[k];
          uv.y() += u_new.coef[2 * nodes[k] + 1] * phi[k];
        }
        double Jf = fluid_jacobian(sd.omega_n->value(pt.x()), ph.R);
        out += q.w * det * sd.dt * Jf *
               sd.forcing.fluid(ale_map(prof, ph.R, pt)).dot(uv);
      }
    }
  }
  if (sd.forcing.biot || sd.forcing.pressure) {
    for (int c = 0; c < biot.n_cells(); ++c) {
      auto nodes = p2_cell_nodes(biot, c);
      double det = cell_det(biot, c);
      const auto& cell = biot.cells[c];
      for (int qi = 0; qi < static_cast<int>(ctx.quad.vol.size()); ++qi) {
        const auto& q = ctx.quad.vol[qi];
        const auto& lam = q.lambda;
        Vec2 pt = lam[0] * biot.verts[cell.v[0]] +
                  lam[1] * biot.verts[cell.v[1]] +
                  lam[2] * biot.verts[cell.v[2]];
        auto psi = p2_values(lam);
        double w = q.w * det;
        if (sd.forcing.biot) {
          Vec2 dv = Vec2::Zero();
          for (int k = 0; k < 6; ++k) {
            dv.x() += etadot_new.coef[2 * nodes[k]] * psi[k];
            dv.y() += etadot_new.coef[2 * nodes[k] + 1] * psi[k];
          }
          out += w * sd.dt * sd.forcing.biot(pt).dot(dv);
        }
        if (sd.forcing.pressure) {
          double pv = 0;
          for (int m = 0; m < 3; ++m) pv += p_new.coef[cell.v[m]] * lam[m];
          out += w * sd.dt * sd.forcing.pressure(pt) * pv;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Small diagnostics.
// ---------------------------------------------------------------------------

// integral |D(eta)|^2 - 1/2 integral |grad eta|^2 over the porous mesh
// (non-negative up to roundoff for fields in the displacement space).
inline double korn_gap(const TriMesh& biot, const QuadSet& quad,
                       const P2VecField& eta) {
  double out = 0;
  for (int c = 0; c < biot.n_cells(); ++c) {
    auto nodes = p2_cell_nodes(biot, c);
    auto glam = barycentric_gradients(biot, c);
    double det = cell_det(biot, c);
    for (const auto& q : quad.vol) {
      auto gpsi = p2_gradients(q.lambda, glam);
      Mat2 g = Mat2::Zero();
      for (int k = 0; k < 6; ++k) {
        g.row(0) += eta.coef[2 * nodes[k]] * gpsi[k].transpose();
        g.row(1) += eta.coef[2 * nodes[k] + 1] * gpsi[k].transpose();
      }
      out += q.w * det *
             (sym_part(g).squaredNorm() - 0.5 * g.squaredNorm());
    }
  }
  return out;
}

// Seepage flux in the reference frame of the regularized deformation.
inline Vec2 darcy_velocity(const P1Field& p, const RegularizedField& eta_delta,
                           double kappa, const Vec2& phat) {
  DeformationData dd = deformation_data(eta_delta.grad(phat));
  return -kappa * biot_transformed_grad(dd, p.grad(phat));
}

}  // namespace fpsi
