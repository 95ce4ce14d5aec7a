#pragma once

// Manufactured reference solution for the coupled fluid / poroelastic /
// plate problem, used to verify the solver against closed forms.
//
// The "separable" case keeps the fluid at rest and drives the structure
// with a standing plate wave
//
//     w(t,x) = a cos(sigma t) sin^2(pi x / L),
//
// extended into the porous layer as eta(x,y) = (0, w(x) g(y)) with the
// quadratic profile g(y) = (1 - y/R)^2.  The pore pressure is chosen in
// the deformed (physical) frame as
//
//     p(t,x,y) = m(t,x) (y - w) (R - y)^2,
//
// where the mobility factor m = w_t / (kappa (1 + w_x^2)(R - w)^2) is the
// unique choice that makes p vanish on the interface and the top wall
// while reproducing the interface flux balance kappa dp/dn = etadot . n.
// Because the pressure vanishes on the interface, the plate load carries
// no pore-pressure term, and because the fluid is at rest the slip
// coefficient must be zero (a nonzero tangential slip etadot . tau would
// otherwise transmit an unbalanced tangential stress).
//
// A second member of the same separable family freezes the plate at the
// standing-wave crest (w(x) = a sin^2(pi x / L), no time factor) and adds
// an interior horizontal seepage mode
//
//     eta_x(t,x,y) = b sin(sigma t) sin^2(pi x / L) sin(pi y / R),
//
// which vanishes on every boundary of the porous layer.  The plate and
// interface then never move, no fluid volume is exchanged, and the exact
// pore pressure is identically zero; the only nonzero pressure data is the
// volumetric source balancing the time derivative of the deformation
// Jacobian.  This variant isolates the pressure response of the solver:
// any computed pressure is a reaction to approximations of the geometry
// rather than a discretization of a nonzero exact field.
//
// All required body forcings (plate load, porous momentum forcing in the
// reference frame, pressure source in the physical frame) are computed in
// closed form.  Finite-difference residual oracles evaluate the strong
// equations using only the primitive field values, so they independently
// validate every derivative formula used in the forcings.

#include <cmath>
#include <functional>
#include <random>

#include "fpsi/params.hpp"
#include "fpsi/scheme.hpp"

namespace fpsi {

struct SeparableCase {
  PhysicalParams phys;
  double a = 0.05;     // plate amplitude
  double sigma = 1.0;  // temporal frequency
  double b = 0.0;      // interior seepage-mode amplitude
  bool plate_static = false;  // freeze the plate wave (seepage variant)
  double L = 1.0, R = 1.0, k = M_PI;

  static SeparableCase make(const PhysicalParams& phys, double a,
                            double sigma) {
    phys.validate();
    if (phys.beta != 0.0)
      throw ConfigError(
          "beta must be 0 for the separable reference solution: the fluid "
          "is at rest while the interface moves tangentially");
    if (!(a >= 0.0) || !(a < 0.5 * phys.R))
      throw ConfigError(
          "amplitude must satisfy 0 <= a < R/2 to keep the porous "
          "deformation orientation preserving (a = 0 is the rest case)");
    SeparableCase c;
    c.phys = phys;
    c.a = a;
    c.sigma = sigma;
    c.L = phys.L;
    c.R = phys.R;
    c.k = M_PI / phys.L;
    return c;
  }

  // Static plate crest plus an oscillating interior horizontal mode of
  // amplitude b.  The exact pressure is identically zero, so the pressure
  // computed by the solver is purely its response to geometry treatment.
  static SeparableCase make_seepage(const PhysicalParams& phys, double a,
                                    double sigma, double b) {
    SeparableCase c = make(phys, a, sigma);
    c.plate_static = true;
    c.b = b;
    // The mode ranges over B in [-b, b]; sample det(I + grad eta) at both
    // extremes on a fine lattice to check orientation preservation.
    if (!(b >= 0.0))
      throw ConfigError("seepage amplitude b must be nonnegative");
    double det_lo = std::numeric_limits<double>::infinity();
    const int n = 96;
    for (int sb = -1; sb <= 1; sb += 2)
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          Vec2 q(phys.L * i / n, phys.R * j / n);
          Mat2 F = Mat2::Identity() + c.eta_hat_grad(0.0, q);
          F(0, 0) += sb * b * c.phi_x(q.x()) * c.psi(q.y());
          F(0, 1) += sb * b * c.phi(q.x()) * c.psi_1(q.y());
          det_lo = std::min(det_lo, F.determinant());
        }
    if (det_lo < 0.05)
      throw ConfigError(
          "seepage amplitude b too large: the combined deformation must "
          "keep det(I + grad eta) >= 0.05 over the oscillation range");
    return c;
  }

  // --- plate deflection and derivatives ----------------------------------
  // Time factor of the plate wave; the seepage variant freezes the wave at
  // its crest.
  double ct(double t) const {
    return plate_static ? 1.0 : std::cos(sigma * t);
  }
  double w(double t, double x) const {
    double s = std::sin(k * x);
    return a * ct(t) * s * s;
  }
  double w_x(double t, double x) const {
    return a * ct(t) * k * std::sin(2 * k * x);
  }
  double w_xx(double t, double x) const {
    return 2 * a * ct(t) * k * k * std::cos(2 * k * x);
  }
  double w_xxx(double t, double x) const {
    return -4 * a * ct(t) * k * k * k * std::sin(2 * k * x);
  }
  double w_xxxx(double t, double x) const {
    double k2 = k * k;
    return -8 * a * ct(t) * k2 * k2 * std::cos(2 * k * x);
  }
  double w_t(double t, double x) const {
    if (plate_static) return 0.0;
    double s = std::sin(k * x);
    return -a * sigma * std::sin(sigma * t) * s * s;
  }
  double w_tt(double t, double x) const {
    if (plate_static) return 0.0;
    double s = std::sin(k * x);
    return -a * sigma * sigma * std::cos(sigma * t) * s * s;
  }
  double w_tx(double t, double x) const {
    if (plate_static) return 0.0;
    return -a * sigma * std::sin(sigma * t) * k * std::sin(2 * k * x);
  }
  double w_txx(double t, double x) const {
    if (plate_static) return 0.0;
    return -2 * a * sigma * std::sin(sigma * t) * k * k * std::cos(2 * k * x);
  }

  // --- interior seepage mode H = B(t) phi(x) psi(y) ----------------------
  // phi shares the plate-wave shape (zero value and slope at the sides).
  // psi is the quadratic bubble 4 (y/R)(1 - y/R): it vanishes on interface
  // and top, and its odd reflection across the interface is C^1 with a
  // curvature jump there, so the auxiliary smoothing of the porous
  // displacement carries a genuine, slowly decaying smoothing error near the
  // interface.  Written with |y| so that the formula itself realizes the odd
  // reflection and stays valid for slightly negative arguments.
  double Bm(double t) const { return b * std::sin(sigma * t); }
  double Bm_t(double t) const { return b * sigma * std::cos(sigma * t); }
  double Bm_tt(double t) const { return -b * sigma * sigma * std::sin(sigma * t); }
  double phi(double x) const {
    double s = std::sin(k * x);
    return s * s;
  }
  double phi_x(double x) const { return k * std::sin(2 * k * x); }
  double phi_xx(double x) const { return 2 * k * k * std::cos(2 * k * x); }
  double psi(double y) const { return 4.0 * y * (R - std::abs(y)) / (R * R); }
  double psi_1(double y) const {
    return 4.0 * (R - 2.0 * std::abs(y)) / (R * R);
  }
  double psi_2(double y) const {
    return -8.0 * (y >= 0.0 ? 1.0 : -1.0) / (R * R);
  }

  // --- vertical profile ---------------------------------------------------
  double g(double y) const {
    double b = 1.0 - y / R;
    return b * b;
  }
  double g1(double y) const { return -2.0 * (1.0 - y / R) / R; }
  double g2() const { return 2.0 / (R * R); }

  // --- pressure mobility factor m = w_t h --------------------------------
  double h(double t, double x) const {
    double P = 1.0 + w_x(t, x) * w_x(t, x);
    double Q = R - w(t, x);
    return 1.0 / (phys.kappa * P * Q * Q);
  }
  double h_x(double t, double x) const {
    double wx = w_x(t, x), wxx = w_xx(t, x);
    double P = 1.0 + wx * wx, Q = R - w(t, x);
    return h(t, x) * (-2.0 * wx * wxx / P + 2.0 * wx / Q);
  }
  double h_t(double t, double x) const {
    double wx = w_x(t, x), wtx = w_tx(t, x);
    double P = 1.0 + wx * wx, Q = R - w(t, x);
    return h(t, x) * (-2.0 * wx * wtx / P + 2.0 * w_t(t, x) / Q);
  }
  double h_xx(double t, double x) const {
    double wx = w_x(t, x), wxx = w_xx(t, x), wxxx = w_xxx(t, x);
    double P = 1.0 + wx * wx, Q = R - w(t, x);
    double G = -2.0 * wx * wxx / P + 2.0 * wx / Q;
    double G_x = -2.0 * (wxx * wxx + wx * wxxx) / P +
                 4.0 * wx * wx * wxx * wxx / (P * P) + 2.0 * wxx / Q +
                 2.0 * wx * wx / (Q * Q);
    return h_x(t, x) * G + h(t, x) * G_x;
  }

  double m(double t, double x) const { return w_t(t, x) * h(t, x); }
  double m_x(double t, double x) const {
    return w_tx(t, x) * h(t, x) + w_t(t, x) * h_x(t, x);
  }
  double m_t(double t, double x) const {
    return w_tt(t, x) * h(t, x) + w_t(t, x) * h_t(t, x);
  }
  double m_xx(double t, double x) const {
    return w_txx(t, x) * h(t, x) + 2.0 * w_tx(t, x) * h_x(t, x) +
           w_t(t, x) * h_xx(t, x);
  }

  // --- pore pressure in the physical frame -------------------------------
  double p(double t, double x, double y) const {
    double A = y - w(t, x), B = R - y;
    return m(t, x) * A * B * B;
  }
  double p_x(double t, double x, double y) const {
    double A = y - w(t, x), B = R - y;
    return m_x(t, x) * A * B * B - m(t, x) * w_x(t, x) * B * B;
  }
  double p_y(double t, double x, double y) const {
    double A = y - w(t, x), B = R - y;
    return m(t, x) * (B * B - 2.0 * A * B);
  }
  double p_t(double t, double x, double y) const {
    double A = y - w(t, x), B = R - y;
    return m_t(t, x) * A * B * B - m(t, x) * w_t(t, x) * B * B;
  }
  double p_xx(double t, double x, double y) const {
    double A = y - w(t, x), B = R - y;
    return m_xx(t, x) * A * B * B - 2.0 * m_x(t, x) * w_x(t, x) * B * B -
           m(t, x) * w_xx(t, x) * B * B;
  }
  double p_yy(double t, double x, double y) const {
    double A = y - w(t, x), B = R - y;
    return m(t, x) * (-4.0 * B + 2.0 * A);
  }

  // --- reference-frame fields --------------------------------------------
  // Deformation map of the porous layer:
  //   (xh, yh) -> (xh + H(t, xh, yh), yh + w(t, xh) g(yh)).
  double map_y(double t, double xh, double yh) const {
    return yh + w(t, xh) * g(yh);
  }
  Vec2 map_point(double t, const Vec2& q) const {
    return Vec2(q.x() + Bm(t) * phi(q.x()) * psi(q.y()),
                map_y(t, q.x(), q.y()));
  }
  Vec2 eta_hat(double t, const Vec2& q) const {
    return Vec2(Bm(t) * phi(q.x()) * psi(q.y()), w(t, q.x()) * g(q.y()));
  }
  Vec2 etadot_hat(double t, const Vec2& q) const {
    return Vec2(Bm_t(t) * phi(q.x()) * psi(q.y()),
                w_t(t, q.x()) * g(q.y()));
  }
  Mat2 eta_hat_grad(double t, const Vec2& q) const {
    Mat2 G;
    G(0, 0) = Bm(t) * phi_x(q.x()) * psi(q.y());
    G(0, 1) = Bm(t) * phi(q.x()) * psi_1(q.y());
    G(1, 0) = w_x(t, q.x()) * g(q.y());
    G(1, 1) = w(t, q.x()) * g1(q.y());
    return G;
  }
  Mat2 etadot_hat_grad(double t, const Vec2& q) const {
    Mat2 G;
    G(0, 0) = Bm_t(t) * phi_x(q.x()) * psi(q.y());
    G(0, 1) = Bm_t(t) * phi(q.x()) * psi_1(q.y());
    G(1, 0) = w_tx(t, q.x()) * g(q.y());
    G(1, 1) = w_t(t, q.x()) * g1(q.y());
    return G;
  }
  double p_hat(double t, const Vec2& q) const {
    Vec2 xp = map_point(t, q);
    return p(t, xp.x(), xp.y());
  }
  // Gradient of the pulled-back pressure with respect to reference
  // coordinates: grad_hat p_hat = F^T (grad p) o Phi.
  Vec2 p_hat_grad(double t, const Vec2& q) const {
    Vec2 xp = map_point(t, q);
    double px = p_x(t, xp.x(), xp.y()), py = p_y(t, xp.x(), xp.y());
    Mat2 F = Mat2::Identity() + eta_hat_grad(t, q);
    return Vec2(F(0, 0) * px + F(1, 0) * py, F(0, 1) * px + F(1, 1) * py);
  }

  // Invert yh + w g(yh) = y for yh by Newton iteration (valid whenever the
  // horizontal mode is absent or only the vertical coordinate is needed).
  double yhat_of(double t, double x, double y) const {
    double wv = w(t, x);
    double yh = std::min(std::max(y, 0.0), R);
    for (int it = 0; it < 50; ++it) {
      double f = yh + wv * g(yh) - y;
      double df = 1.0 + wv * g1(yh);
      double step = f / df;
      yh -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(yh))) break;
    }
    return yh;
  }

  // Full inverse of the deformation map by two-dimensional Newton
  // iteration with the analytic Jacobian I + grad eta_hat.
  Vec2 ref_of(double t, const Vec2& xp) const {
    Vec2 q(std::min(std::max(xp.x(), 0.0), L),
           std::min(std::max(xp.y(), 0.0), R));
    for (int it = 0; it < 50; ++it) {
      Vec2 f = map_point(t, q) - xp;
      Mat2 F = Mat2::Identity() + eta_hat_grad(t, q);
      Vec2 step = F.inverse() * f;
      q -= step;
      if (step.norm() < 1e-15 * (1.0 + q.norm())) break;
    }
    return q;
  }

  // --- body forcings ------------------------------------------------------
  // Plate: rho_p w_tt + w_xxxx = f_plate + e_y . sigma(eta) e_y; the pore
  // pressure vanishes on the interface and the fluid is at rest, so no
  // other load appears.
  // The porous layer loads the plate with the vertical component of its
  // reference-frame traction sigma(eta) e_y; the horizontal interface
  // trace of the displacement is constrained to zero, so the shear
  // component is carried by the kinematic constraint, not the plate.  At
  // the interface eps_xx = d(eta_x)/dx = 0 for both members, leaving
  // sigma_yy = (2 mu + lambda) w g'(0) with g'(0) = -2/R.
  double f_plate(double t, double x) const {
    const PhysicalParams& ph = phys;
    double syy = -(4.0 * ph.mu_e + 2.0 * ph.lambda_e) * w(t, x) / R -
                 (4.0 * ph.mu_v + 2.0 * ph.lambda_v) * w_t(t, x) / R;
    return ph.rho_p * w_tt(t, x) + w_xxxx(t, x) - syy;
  }

  // Porous momentum in the reference frame:
  //   rho_b eta_tt - div sigma_e(eta) - div sigma_v(etadot)
  //     + alpha J F^{-T} grad p_hat = f_biot.
  Vec2 f_biot(double t, const Vec2& q) const {
    const PhysicalParams& ph = phys;
    double x = q.x(), yh = q.y();
    double gy = g(yh), gp = g1(yh), gpp = g2();
    double wv = w(t, x), wx = w_x(t, x), wt = w_t(t, x);
    // J F^{-T} grad_hat p_hat = J (grad p) o Phi since grad_hat p_hat =
    // F^T (grad p) o Phi.
    Vec2 xp = map_point(t, q);
    double J = (Mat2::Identity() + eta_hat_grad(t, q)).determinant();
    double JgradX = J * p_x(t, xp.x(), xp.y());
    double JgradY = J * p_y(t, xp.x(), xp.y());
    double fx = -(ph.lambda_e + ph.mu_e) * wx * gp -
                (ph.lambda_v + ph.mu_v) * w_tx(t, x) * gp + ph.alpha * JgradX;
    double fy = ph.rho_b * w_tt(t, x) * gy - ph.mu_e * w_xx(t, x) * gy -
                (2.0 * ph.mu_e + ph.lambda_e) * wv * gpp -
                ph.mu_v * w_txx(t, x) * gy -
                (2.0 * ph.mu_v + ph.lambda_v) * wt * gpp + ph.alpha * JgradY;
    // Seepage-mode contributions (horizontal displacement H = B phi psi):
    //   [div sigma]_x picks up (2 mu + lambda) H_xx + mu H_yy and
    //   [div sigma]_y the mixed term (lambda + mu) H_xy.
    double B = Bm(t), Bd = Bm_t(t);
    double px_ = phi_x(x), pxx_ = phi_xx(x), pv_ = phi(x);
    double ps_ = psi(yh), ps1_ = psi_1(yh), ps2_ = psi_2(yh);
    fx += ph.rho_b * Bm_tt(t) * pv_ * ps_ -
          (2.0 * ph.mu_e + ph.lambda_e) * B * pxx_ * ps_ -
          ph.mu_e * B * pv_ * ps2_ -
          (2.0 * ph.mu_v + ph.lambda_v) * Bd * pxx_ * ps_ -
          ph.mu_v * Bd * pv_ * ps2_;
    fy += -(ph.lambda_e + ph.mu_e) * B * px_ * ps1_ -
          (ph.lambda_v + ph.mu_v) * Bd * px_ * ps1_;
    return Vec2(fx, fy);
  }

  // Time derivative of the deformation Jacobian J = det(I + grad eta_hat),
  // the volumetric storage rate of the pore space.
  double dtJ(double t, const Vec2& q) const {
    Mat2 F = Mat2::Identity() + eta_hat_grad(t, q);
    Mat2 Fd = etadot_hat_grad(t, q);
    // d/dt det F = F22 Fd11 + F11 Fd22 - F21 Fd12 - F12 Fd21.
    return F(1, 1) * Fd(0, 0) + F(0, 0) * Fd(1, 1) - F(1, 0) * Fd(0, 1) -
           F(0, 1) * Fd(1, 0);
  }

  // Pressure source in the physical frame (strong form of the pore mass
  // balance); J divides the reference-frame storage terms.
  double s_pressure(double t, const Vec2& xp) const {
    const PhysicalParams& ph = phys;
    Vec2 q = ref_of(t, xp);
    double J = (Mat2::Identity() + eta_hat_grad(t, q)).determinant();
    double x = xp.x(), y = xp.y();
    Vec2 xi = etadot_hat(t, q);
    return (ph.c0 / J) *
               (p_t(t, x, y) + xi.x() * p_x(t, x, y) + xi.y() * p_y(t, x, y)) +
           ph.alpha * dtJ(t, q) / J -
           ph.kappa * (p_xx(t, x, y) + p_yy(t, x, y));
  }

  // The same source as a reference-frame density, s_hat = J s o Phi, so
  // the data handed to the solver does not depend on the regularization.
  double s_hat(double t, const Vec2& q) const {
    const PhysicalParams& ph = phys;
    Vec2 xp = map_point(t, q);
    double x = xp.x(), y = xp.y();
    double J = (Mat2::Identity() + eta_hat_grad(t, q)).determinant();
    Vec2 xi = etadot_hat(t, q);
    return ph.c0 *
               (p_t(t, x, y) + xi.x() * p_x(t, x, y) + xi.y() * p_y(t, x, y)) +
           ph.alpha * dtJ(t, q) -
           ph.kappa * J * (p_xx(t, x, y) + p_yy(t, x, y));
  }

  TimeForcing forcing() const {
    TimeForcing f;
    f.biot = [*this](double t, const Vec2& q) { return f_biot(t, q); };
    f.pressure = [*this](double t, const Vec2& q) { return s_hat(t, q); };
    f.plate = [*this](double t, double x) { return f_plate(t, x); };
    return f;
  }

  // Initial data at t = 0: the plate starts at the wave crest with zero
  // velocity, hence zero pressure and a resting fluid.
  void apply_initial(Simulator& sim) const {
    sim.set_initial([](Vec2) { return Vec2::Zero(); },
                    [*this](Vec2 q) { return eta_hat(0.0, q); },
                    [*this](Vec2 q) { return etadot_hat(0.0, q); },
                    [*this](Vec2 q) { return p_hat(0.0, q); },
                    [*this](double x) { return w(0.0, x); },
                    [*this](double x) { return w_x(0.0, x); });
  }
};

// ---------------------------------------------------------------------------
// Finite-difference residual oracles.  These evaluate the strong equations
// at sample points using centered differences of the primitive fields
// (w, eta_hat, p, p_hat) only, so agreement with the closed-form forcings
// is an independent check of the derivation.

namespace fd {

// Fourth-order accurate first and second derivatives.
template <class F>
double d1(F f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) /
         (12 * h);
}
template <class F>
double d2(F f, double x, double h) {
  return (-f(x - 2 * h) + 16 * f(x - h) - 30 * f(x) + 16 * f(x + h) -
          f(x + 2 * h)) /
         (12 * h * h);
}
// Sixth-order accurate fourth derivative (nine-point stencil).
template <class F>
double d4(F f, double x, double h) {
  double h4 = h * h * h * h;
  return (7.0 / 240 * (f(x - 4 * h) + f(x + 4 * h)) -
          2.0 / 5 * (f(x - 3 * h) + f(x + 3 * h)) +
          169.0 / 60 * (f(x - 2 * h) + f(x + 2 * h)) -
          122.0 / 15 * (f(x - h) + f(x + h)) + 91.0 / 8 * f(x)) /
         h4;
}

}  // namespace fd

struct ResidualReport {
  double plate = 0;    // max |rho_p w_tt + w_xxxx - sigma_yy - f_plate|
  double biot = 0;     // max porous momentum residual (both components)
  double pressure = 0; // max pressure equation residual (reference frame)
  double max_all() const { return std::max({plate, biot, pressure}); }
};

// Strong-form residuals at `npts` points per equation, sampled over one
// temporal period and the interior of each domain.
inline ResidualReport mms_residual_report(const SeparableCase& c, int npts,
                                          unsigned seed) {
  const PhysicalParams& ph = c.phys;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> ut(0.05, 1.0), u01(0.05, 0.95);
  ResidualReport rep;
  // Step sizes balance truncation against roundoff; the nested stencils
  // for mixed derivatives amplify roundoff by 1/h per level, which sets
  // the lower bound.
  const double hx = 1.5e-2 * c.L;   // fourth-derivative stencil
  const double h1 = 2e-3 * c.L;   // first/second derivative stencils
  const double ht = 3e-3 / c.sigma;

  for (int i = 0; i < npts; ++i) {
    double t = ut(rng) / c.sigma;
    double x = u01(rng) * c.L;
    double yh = u01(rng) * c.R;

    // Plate equation.  The load is the vertical component of the
    // reference-frame traction sigma(eta) e_y (the shear component is
    // absorbed by the clamped horizontal trace), built from
    // finite-difference strains of the displacement at yh = 0 (the
    // closed profile extends smoothly below the interface).
    {
      double wtt = fd::d2([&](double s) { return c.w(s, x); }, t, ht);
      auto wf = [&](double s) { return c.w(t, s); };
      // One Richardson step on the sixth-order stencil; the plate term
      // carries the highest wavenumber of the catalog and needs the
      // extra accuracy.
      double wxxxx = (64.0 * fd::d4(wf, x, hx) - fd::d4(wf, x, 2 * hx)) / 63.0;
      auto ex = [&](double tt, double xx, double yy) {
        return c.eta_hat(tt, Vec2(xx, yy)).x();
      };
      auto ey = [&](double tt, double xx, double yy) {
        return c.eta_hat(tt, Vec2(xx, yy)).y();
      };
      auto strains = [&](double tt) {
        double exx = fd::d1([&](double s) { return ex(tt, s, 0.0); }, x, h1);
        double eyy = fd::d1([&](double s) { return ey(tt, x, s); }, 0.0, h1);
        double exy2 =
            fd::d1([&](double s) { return ex(tt, x, s); }, 0.0, h1) +
            fd::d1([&](double s) { return ey(tt, s, 0.0); }, x, h1);
        return Eigen::Vector3d(exx, eyy, exy2);
      };
      Eigen::Vector3d se = strains(t);
      Eigen::Vector3d sv(fd::d1([&](double s) { return strains(s).x(); }, t, ht),
              fd::d1([&](double s) { return strains(s).y(); }, t, ht),
              fd::d1([&](double s) { return strains(s).z(); }, t, ht));
      auto syy_of = [&](const Eigen::Vector3d& e, double mu, double lambda) {
        return (2.0 * mu + lambda) * e.y() + lambda * e.x();
      };
      double syy = syy_of(se, ph.mu_e, ph.lambda_e) +
                   syy_of(sv, ph.mu_v, ph.lambda_v);
      double res = ph.rho_p * wtt + wxxxx - syy - c.f_plate(t, x);
      rep.plate = std::max(rep.plate, std::abs(res));
    }

    // Porous momentum in the reference frame, both components:
    //   rho_b eta_tt - div sigma_e(eta) - div sigma_v(etadot)
    //     + alpha J F^{-T} grad p_hat = f_biot.
    {
      Vec2 q(x, yh);
      auto comp = [&](int cc, double tt, double xx, double yy) {
        return c.eta_hat(tt, Vec2(xx, yy))[cc];
      };
      // Second spatial derivatives of component cc at time tt.
      auto d2x = [&](int cc, double tt) {
        return fd::d2([&](double s) { return comp(cc, tt, s, yh); }, x, h1);
      };
      auto d2y = [&](int cc, double tt) {
        return fd::d2([&](double s) { return comp(cc, tt, x, s); }, yh, h1);
      };
      auto dxy = [&](int cc, double tt) {
        return fd::d1(
            [&](double s) {
              return fd::d1([&](double r) { return comp(cc, tt, r, s); }, x,
                            h1);
            },
            yh, h1);
      };
      // div sigma(eta(tt)) for Lame coefficients (mu, lambda).
      auto div_sigma = [&](double tt, double mu, double lambda) {
        double sx = (2.0 * mu + lambda) * d2x(0, tt) + mu * d2y(0, tt) +
                    (mu + lambda) * dxy(1, tt);
        double sy = mu * d2x(1, tt) + (2.0 * mu + lambda) * d2y(1, tt) +
                    (mu + lambda) * dxy(0, tt);
        return Vec2(sx, sy);
      };
      Vec2 el = div_sigma(t, ph.mu_e, ph.lambda_e);
      Vec2 vi(fd::d1([&](double s) { return div_sigma(s, ph.mu_v,
                                                      ph.lambda_v).x(); },
                     t, ht),
              fd::d1([&](double s) { return div_sigma(s, ph.mu_v,
                                                      ph.lambda_v).y(); },
                     t, ht));
      double u_tt = fd::d2([&](double s) { return comp(0, s, x, yh); }, t, ht);
      double v_tt = fd::d2([&](double s) { return comp(1, s, x, yh); }, t, ht);
      // alpha J F^{-T} grad p_hat by differencing the pulled-back pressure
      // and the deformation gradient.
      double ph_x =
          fd::d1([&](double s) { return c.p_hat(t, Vec2(s, yh)); }, x, h1);
      double ph_y =
          fd::d1([&](double s) { return c.p_hat(t, Vec2(x, s)); }, yh, h1);
      double F11 = 1.0 + fd::d1([&](double s) { return comp(0, t, s, yh); }, x, h1);
      double F12 = fd::d1([&](double s) { return comp(0, t, x, s); }, yh, h1);
      double F21 = fd::d1([&](double s) { return comp(1, t, s, yh); }, x, h1);
      double F22 = 1.0 + fd::d1([&](double s) { return comp(1, t, x, s); }, yh, h1);
      double aX = ph.alpha * (F22 * ph_x - F21 * ph_y);
      double aY = ph.alpha * (-F12 * ph_x + F11 * ph_y);
      Vec2 f = c.f_biot(t, q);
      double rx = ph.rho_b * u_tt - el.x() - vi.x() + aX - f.x();
      double ry = ph.rho_b * v_tt - el.y() - vi.y() + aY - f.y();
      rep.biot = std::max({rep.biot, std::abs(rx), std::abs(ry)});
    }

    // Pressure equation in the reference frame:
    //   c0 dt p_hat + alpha dt det(I + grad eta_hat) - kappa J lap(p) o Phi
    //     = J s_pressure o Phi.
    {
      Vec2 q(x, yh);
      double pt_hat =
          fd::d1([&](double s) { return c.p_hat(s, q); }, t, ht);
      // det(I + grad eta_hat) at time tt by spatial differencing.
      auto det_of = [&](double tt) {
        auto comp = [&](int cc, double xx, double yy) {
          return c.eta_hat(tt, Vec2(xx, yy))[cc];
        };
        double F11 = 1.0 + fd::d1([&](double s) { return comp(0, s, yh); }, x, h1);
        double F12 = fd::d1([&](double s) { return comp(0, x, s); }, yh, h1);
        double F21 = fd::d1([&](double s) { return comp(1, s, yh); }, x, h1);
        double F22 = 1.0 + fd::d1([&](double s) { return comp(1, x, s); }, yh, h1);
        return F11 * F22 - F12 * F21;
      };
      double det_t = fd::d1(det_of, t, ht);
      Vec2 xp = c.map_point(t, q);
      double xq = xp.x(), y = xp.y();
      double lap = fd::d2([&](double s) { return c.p(t, s, y); }, xq, h1) +
                   fd::d2([&](double s) { return c.p(t, xq, s); }, y, h1);
      double J = det_of(t);
      double res = ph.c0 * pt_hat + ph.alpha * det_t - ph.kappa * J * lap -
                   c.s_hat(t, q);
      // The physical-frame form must agree after the Jacobian weight.
      res = std::max(std::abs(res),
                     std::abs(c.s_hat(t, q) - J * c.s_pressure(t, xp)));
      rep.pressure = std::max(rep.pressure, std::abs(res));
    }
  }
  return rep;
}

}  // namespace fpsi
