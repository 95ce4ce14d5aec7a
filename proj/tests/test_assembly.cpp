#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fpsi/assembly.hpp"

using namespace fpsi;

namespace {

constexpr double kL = 2.0, kR = 1.0;

PhysicalParams test_params() {
  PhysicalParams ph;
  ph.rho_b = 1.1;
  ph.mu_e = 0.7;
  ph.lambda_e = 0.4;
  ph.mu_v = 0.25;
  ph.lambda_v = 0.15;
  ph.alpha = 0.9;
  ph.c0 = 0.6;
  ph.kappa = 0.8;
  ph.rho_p = 1.3;
  ph.nu = 0.5;
  ph.beta = 0.3;
  ph.L = kL;
  ph.R = kR;
  return ph;
}

struct Fixture {
  ReferenceMeshes meshes;
  InterfaceMap imap;
  StepContext ctx;

  explicit Fixture(int n, int quad_degree = 6, PhysicalParams ph = test_params())
      : meshes(build_reference_meshes(kL, kR, n, n)),
        imap(build_interface_map(meshes.fluid, meshes.biot, meshes.plate)),
        ctx(StepContext::make(meshes, imap, ph, quad_degree)) {}
};

PlateField zero_plate(const PlateMesh& m) {
  return interpolate_plate(
      m, [](double) { return 0.0; }, [](double) { return 0.0; });
}

// Zero previous state plus frozen geometry for one assembly call.
struct ZeroState {
  P2VecField u, eta, etadot;
  P1Field p;
  PlateField omega, zeta_half;
  OddExtension ext;
  RegularizedField eta_delta;
  BiotGeometry geom;
  std::vector<Vec2> normals;
  StepData sd;

  ZeroState(const Fixture& f, double dt, double delta = 0.15)
      : u(interpolate_p2_vec(f.meshes.fluid,
                             [](Vec2) { return Vec2::Zero(); })),
        eta(interpolate_p2_vec(f.meshes.biot,
                               [](Vec2) { return Vec2::Zero(); })),
        etadot(interpolate_p2_vec(f.meshes.biot,
                                  [](Vec2) { return Vec2::Zero(); })),
        p(interpolate_p1(f.meshes.biot, [](Vec2) { return 0.0; })),
        omega(zero_plate(f.meshes.plate)),
        zeta_half(zero_plate(f.meshes.plate)),
        ext(odd_extend(f.meshes.biot, eta)),
        eta_delta(mollify(ext, delta, MollifierRule::make())),
        geom(build_biot_geometry(f.meshes.biot, f.ctx.quad, eta_delta)),
        normals(build_interface_delta_normals(f.meshes.plate, f.ctx.quad,
                                              eta_delta)) {
    sd.u_n = &u;
    sd.eta_n = &eta;
    sd.etadot_n = &etadot;
    sd.p_n = &p;
    sd.omega_n = &omega;
    sd.zeta_half = &zeta_half;
    sd.geom = &geom;
    sd.delta_normals = &normals;
    sd.dt = dt;
  }
};

void zero_constrained(const SystemLayout& lay, Eigen::VectorXd& x) {
  for (int i = 0; i < lay.total; ++i)
    if (lay.constrained[i]) x[i] = 0.0;
}

}  // namespace

TEST_CASE("transport block is skew-symmetric") {
  Fixture f(4);
  auto u_n = interpolate_p2_vec(f.meshes.fluid, [](Vec2 p) {
    return Vec2(std::sin(p.x()) * (p.y() + 1.0), std::cos(p.x() * p.y()));
  });
  auto omega = interpolate_plate(
      f.meshes.plate,
      [](double x) { return 0.2 * std::pow(std::sin(M_PI * x / kL), 2); },
      [](double x) {
        return 0.2 * M_PI / kL * std::sin(2.0 * M_PI * x / kL);
      });
  auto zeta = interpolate_plate(
      f.meshes.plate,
      [](double x) { return 0.1 * std::pow(std::sin(M_PI * x / kL), 2); },
      [](double x) {
        return 0.1 * M_PI / kL * std::sin(2.0 * M_PI * x / kL);
      });
  auto A = fluid_convection_matrix(f.ctx, u_n, omega, zeta);
  Eigen::MatrixXd dense = Eigen::MatrixXd(A);
  double asym = (dense + dense.transpose()).norm();
  REQUIRE(asym <= 1e-12 * std::max(1.0, dense.norm()));

  std::mt19937 rng(7);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd v(dense.rows());
    for (int i = 0; i < v.size(); ++i) v[i] = gauss(rng);
    REQUIRE(std::abs(v.dot(dense * v)) <= 1e-12 * dense.norm() *
                                              v.squaredNorm());
  }
}

TEST_CASE("zero data produces the zero step") {
  Fixture f(3);
  ZeroState zs(f, 0.01);
  auto sys = assemble_coupled(f.ctx, zs.sd);
  REQUIRE(sys.b.norm() == 0.0);
  Eigen::VectorXd x = solve_sparse(sys);
  REQUIRE(x.norm() <= 1e-13);
}

TEST_CASE("quadratic form of the step matrix matches the energy functionals") {
  // With zero previous state, zero plate profile and zero regularized
  // displacement, testing the matrix against (u, 0, d, p) must reproduce the
  // dissipative quadratic forms exactly: transport vanishes, the pressure /
  // normal-mass interface terms cancel pairwise, and the three-way coupling
  // of pressure and displacement velocity integrates to zero because every
  // integrand is polynomial within the rule's exactness degree.
  Fixture f(4);
  double dt = 0.02;
  ZeroState zs(f, dt);
  auto sys = assemble_coupled(f.ctx, zs.sd);

  auto u = interpolate_p2_vec(f.meshes.fluid, [](Vec2 p) {
    double sx = std::sin(M_PI * p.x() / kL);
    return Vec2(sx * std::sin(M_PI * (p.y() + kR) / kR) * 0.8,
                sx * (p.y() + kR) * (0.3 - 0.2 * p.y()));
  });
  auto d = interpolate_p2_vec(f.meshes.biot, [](Vec2 p) {
    return Vec2(0.0, std::sin(M_PI * p.x() / kL) *
                         std::cos(0.5 * M_PI * p.y() / kR));
  });
  auto p = interpolate_p1(f.meshes.biot, [](Vec2 q) {
    return std::sin(M_PI * q.x() / kL) * (kR - q.y()) / kR;
  });

  const auto& lay = f.ctx.layout;
  Eigen::VectorXd X = Eigen::VectorXd::Zero(lay.total);
  X.segment(lay.off_u, u.coef.size()) = u.coef;
  X.segment(lay.off_d, d.coef.size()) = d.coef;
  X.segment(lay.off_p, p.coef.size()) = p.coef;
  zero_constrained(lay, X);
  // write back any boundary roundoff so the functionals see the same fields
  u.coef = X.segment(lay.off_u, u.coef.size());
  d.coef = X.segment(lay.off_d, d.coef.size());
  p.coef = X.segment(lay.off_p, p.coef.size());

  double quad_form = X.dot(sys.A * X);

  auto zero_w = zero_plate(f.meshes.plate);
  auto E = energy_snapshot(f.ctx, u, zero_w, d, d, p, zeta_from_trace(d),
                           zero_w);
  auto D = dissipation_ledger(f.ctx, zs.sd, u, d, p);
  double predicted =
      2.0 / dt * (E.fluid_kin + E.biot_kin + E.storage + E.plate_kin) +
      2.0 * dt * E.elastic + D.total() / dt;
  REQUIRE(quad_form == Catch::Approx(predicted).epsilon(1e-11));
}

TEST_CASE("pressure-displacement coupling defect shrinks with quadrature") {
  // With a genuinely curved regularized deformation the three coupling terms
  // between pore pressure and displacement velocity no longer cancel at the
  // quadrature level; the residual of the cancellation identity must decay
  // as the rule degree grows.
  auto eta_fn = [](Vec2 q) {
    double s = std::sin(M_PI * q.x() / kL);
    double b = (1.0 - q.y() / kR);
    double sy = std::sin(M_PI * q.y() / kR);
    return Vec2(0.1 * s * sy, 0.12 * s * s * b * b);
  };
  auto eta_grad = [](Vec2 q) {
    double s = std::sin(M_PI * q.x() / kL);
    double c = std::cos(M_PI * q.x() / kL);
    double b = (1.0 - q.y() / kR);
    double sy = std::sin(M_PI * q.y() / kR);
    double cy = std::cos(M_PI * q.y() / kR);
    Mat2 g = Mat2::Zero();
    g(0, 0) = 0.1 * c * (M_PI / kL) * sy;
    g(0, 1) = 0.1 * s * cy * (M_PI / kR);
    g(1, 0) = 0.12 * 2.0 * s * c * (M_PI / kL) * b * b;
    g(1, 1) = 0.12 * s * s * 2.0 * b * (-1.0 / kR);
    return g;
  };
  auto om_fn = [&](double x) { return eta_fn({x, 0.0}).y(); };
  auto om_dx = [&](double x) { return eta_grad({x, 0.0})(1, 0); };

  std::vector<double> defects;
  for (int degree : {4, 8, 12}) {
    Fixture f(3, degree);
    double dt = 0.05;
    ZeroState zs(f, dt);
    auto ext = odd_extend_analytic(kL, kR, eta_fn, om_fn, eta_grad, om_dx);
    auto eta_delta = mollify(ext, 0.2, MollifierRule::make());
    auto geom = build_biot_geometry(f.meshes.biot, f.ctx.quad, eta_delta);
    auto normals =
        build_interface_delta_normals(f.meshes.plate, f.ctx.quad, eta_delta);
    StepData sd = zs.sd;
    sd.geom = &geom;
    sd.delta_normals = &normals;
    auto sys = assemble_coupled(f.ctx, sd);

    auto d = interpolate_p2_vec(f.meshes.biot, [](Vec2 q) {
      double sx = std::sin(M_PI * q.x() / kL);
      return Vec2(0.3 * sx * std::sin(M_PI * q.y() / kR),
                  sx * std::cos(0.5 * M_PI * q.y() / kR));
    });
    auto p = interpolate_p1(f.meshes.biot, [](Vec2 q) {
      return std::sin(M_PI * q.x() / kL) * (kR - q.y()) / kR;
    });
    const auto& lay = f.ctx.layout;
    Eigen::VectorXd X = Eigen::VectorXd::Zero(lay.total);
    X.segment(lay.off_d, d.coef.size()) = d.coef;
    X.segment(lay.off_p, p.coef.size()) = p.coef;
    zero_constrained(lay, X);
    d.coef = X.segment(lay.off_d, d.coef.size());
    p.coef = X.segment(lay.off_p, p.coef.size());

    auto zero_w = zero_plate(f.meshes.plate);
    auto E = energy_snapshot(f.ctx, zs.u, zero_w, d, d, p, zeta_from_trace(d),
                             zero_w);
    auto D = dissipation_ledger(f.ctx, sd, zs.u, d, p);
    double predicted = 2.0 / dt * (E.biot_kin + E.storage + E.plate_kin) +
                       2.0 * dt * E.elastic + D.total() / dt;
    defects.push_back(std::abs(X.dot(sys.A * X) - predicted));
  }
  REQUIRE(defects[0] > 0.0);
  REQUIRE(defects[1] < defects[0]);
  REQUIRE(defects[2] < defects[1]);
}

TEST_CASE("plate half step satisfies its discrete energy identity") {
  auto meshes = build_reference_meshes(kL, kR, 16, 1);
  QuadSet quad = QuadSet::make(6);
  auto op = PlateOperator::build(meshes.plate, quad.seg);
  double rho_p = 1.3, dt = 0.01;
  op.factorize(rho_p, dt);

  std::mt19937 rng(11);
  std::normal_distribution<double> gauss;
  PlateField omega_prev;
  omega_prev.mesh = &meshes.plate;
  omega_prev.coef.resize(2 * meshes.plate.n_nodes());
  Eigen::VectorXd zc(omega_prev.coef.size());
  for (int i = 0; i < omega_prev.coef.size(); ++i) {
    omega_prev.coef[i] = gauss(rng);
    zc[i] = gauss(rng);
  }
  for (int d : op.clamped) {
    omega_prev.coef[d] = 0.0;
    zc[d] = 0.0;
  }
  PlateField zeta_n;
  zeta_n.mesh = &meshes.plate;
  zeta_n.coef = zc;

  auto omega_half = op.half_step(
      omega_prev, [&](double x) { return zeta_n.value(x); }, nullptr);
  PlateField zeta_half;
  zeta_half.mesh = &meshes.plate;
  zeta_half.coef = (omega_half.coef - omega_prev.coef) / dt;

  auto sq = [&](const std::function<double(double)>& g) {
    return op.integrate([&](double x) { double v = g(x); return v * v; });
  };
  double lhs =
      0.5 * rho_p * sq([&](double x) { return zeta_half.value(x); }) +
      0.5 * sq([&](double x) { return omega_half.dxx(x); }) +
      0.5 * rho_p *
          sq([&](double x) { return zeta_half.value(x) - zeta_n.value(x); }) +
      0.5 * sq([&](double x) { return omega_half.dxx(x) - omega_prev.dxx(x); });
  double rhs = 0.5 * rho_p * sq([&](double x) { return zeta_n.value(x); }) +
               0.5 * sq([&](double x) { return omega_prev.dxx(x); });
  REQUIRE(lhs == Catch::Approx(rhs).epsilon(1e-11));
  REQUIRE(lhs <= rhs + 1e-11 * rhs);
}

TEST_CASE("coupled step is solvable without viscoelasticity or slip friction") {
  PhysicalParams ph = test_params();
  ph.mu_v = 0.0;
  ph.lambda_v = 0.0;
  ph.beta = 0.0;
  Fixture f(4, 6, ph);
  double dt = 0.02;

  auto omega = interpolate_plate(
      f.meshes.plate,
      [](double x) { return 0.05 * std::pow(std::sin(M_PI * x / kL), 2); },
      [](double x) {
        return 0.05 * M_PI / kL * std::sin(2.0 * M_PI * x / kL);
      });
  auto zeta = interpolate_plate(
      f.meshes.plate,
      [](double x) { return 0.02 * std::pow(std::sin(M_PI * x / kL), 2); },
      [](double x) {
        return 0.02 * M_PI / kL * std::sin(2.0 * M_PI * x / kL);
      });
  auto eta = interpolate_p2_vec(f.meshes.biot, [](Vec2 q) {
    double s = std::sin(M_PI * q.x() / kL);
    double b = (1.0 - q.y() / kR);
    return Vec2(0.0, 0.05 * s * s * b * b);
  });
  auto etadot = interpolate_p2_vec(f.meshes.biot, [](Vec2 q) {
    double s = std::sin(M_PI * q.x() / kL);
    double b = (1.0 - q.y() / kR);
    return Vec2(0.0, 0.02 * s * s * b * b);
  });
  auto u = interpolate_p2_vec(f.meshes.fluid, [](Vec2 q) {
    double sx = std::sin(M_PI * q.x() / kL);
    return Vec2(0.0, 0.02 * sx * sx * (q.y() + kR) / kR);
  });
  auto p = interpolate_p1(f.meshes.biot, [](Vec2 q) {
    return 0.1 * std::sin(M_PI * q.x() / kL) * (kR - q.y()) / kR;
  });
  for (int dof : fluid_velocity_dirichlet(f.meshes.fluid)) u.coef[dof] = 0.0;
  for (int dof : biot_displacement_dirichlet(f.meshes.biot)) {
    eta.coef[dof] = 0.0;
    etadot.coef[dof] = 0.0;
  }
  for (int dof : pressure_dirichlet(f.meshes.biot)) p.coef[dof] = 0.0;

  auto ext = odd_extend(f.meshes.biot, eta);
  auto eta_delta = mollify(ext, 0.15, MollifierRule::make());
  auto geom = build_biot_geometry(f.meshes.biot, f.ctx.quad, eta_delta);
  auto normals =
      build_interface_delta_normals(f.meshes.plate, f.ctx.quad, eta_delta);

  StepData sd;
  sd.u_n = &u;
  sd.eta_n = &eta;
  sd.etadot_n = &etadot;
  sd.p_n = &p;
  sd.omega_n = &omega;
  sd.zeta_half = &zeta;
  sd.geom = &geom;
  sd.delta_normals = &normals;
  sd.dt = dt;

  auto sys = assemble_coupled(f.ctx, sd);
  Eigen::VectorXd x = solve_sparse(sys);
  REQUIRE((sys.A * x - sys.b).norm() <= 1e-10 * std::max(1.0, sys.b.norm()));
  REQUIRE(x.norm() > 0.0);
}

TEST_CASE("degenerate frozen geometry is refused") {
  Fixture f(3);
  ZeroState zs(f, 0.01);
  // A deformation compressing the strip by more than its thickness.
  auto eta_fn = [](Vec2 q) {
    double s = std::sin(M_PI * q.x() / kL);
    return Vec2(0.0, -1.4 * kR * s * s * (q.y() / kR) * (1.0 - q.y() / kR) * 4.0);
  };
  auto ext = odd_extend_analytic(kL, kR, eta_fn,
                                 [](double) { return 0.0; });
  auto eta_delta = mollify(ext, 0.05, MollifierRule::make());
  auto geom = build_biot_geometry(f.meshes.biot, f.ctx.quad, eta_delta);
  REQUIRE(geom.min_det < 0.0);
  StepData sd = zs.sd;
  sd.geom = &geom;
  REQUIRE_THROWS_AS(assemble_coupled(f.ctx, sd), DegeneracyError);
}

TEST_CASE("interface gap and deformation monitors") {
  Fixture f(4);
  auto omega = interpolate_plate(
      f.meshes.plate,
      [](double x) { return 0.3 * std::pow(std::sin(M_PI * x / kL), 2); },
      [](double x) {
        return 0.3 * M_PI / kL * std::sin(2.0 * M_PI * x / kL);
      });
  double gap = min_gap(f.meshes.plate, f.ctx.quad, omega, kR);
  REQUIRE(gap < kR - 0.29);
  REQUIRE(gap > kR - 0.31);

  ZeroState zs(f, 0.01);
  REQUIRE(zs.geom.min_det == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(zs.geom.max_F_norm ==
          Catch::Approx(std::sqrt(2.0)).margin(1e-12));
}

TEST_CASE("seepage flux of a linear pressure on the undeformed strip") {
  Fixture f(3);
  ZeroState zs(f, 0.01);
  auto p = interpolate_p1(f.meshes.biot, [](Vec2 q) { return q.x(); });
  Vec2 flux = darcy_velocity(p, zs.eta_delta, 0.8, {0.7, 0.4});
  REQUIRE(flux.x() == Catch::Approx(-0.8).margin(1e-10));
  REQUIRE(flux.y() == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("uniaxial squeeze has nonnegative shear-energy excess") {
  Fixture f(4);
  std::mt19937 rng(23);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 5; ++rep) {
    P2VecField eta;
    eta.mesh = &f.meshes.biot;
    eta.coef = Eigen::VectorXd::Zero(2 * f.meshes.biot.n_p2_nodes());
    for (int i = 0; i < eta.coef.size(); ++i) eta.coef[i] = gauss(rng);
    for (int dof : biot_displacement_dirichlet(f.meshes.biot))
      eta.coef[dof] = 0.0;
    REQUIRE(korn_gap(f.meshes.biot, f.ctx.quad, eta) >= -1e-12);
  }
}
