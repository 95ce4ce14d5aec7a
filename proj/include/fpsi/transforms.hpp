#pragma once

// Geometric maps between the reference and deformed configurations:
//   - the explicit fluid-domain map (x,y) = (xh, yh + (1+yh/R) w(xh)) and its
//     inverse, Jacobians, transformed gradients and domain velocity,
//   - the Lagrangian porous-domain map Id + eta with its deformation data,
//   - scaled interface normals/tangents,
//   - the divergence-preserving velocity transfer between two fluid domains
//     parameterized by different plate profiles.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

#include "fpsi/params.hpp"
#include "fpsi/spaces.hpp"

namespace fpsi {

// A plate-profile abstraction: value and x-derivative, analytic or discrete.
struct Profile1D {
  std::function<double(double)> val;
  std::function<double(double)> dx;
};

inline Profile1D make_profile(const PlateField& f) {
  return {[&f](double x) { return f.value(x); },
          [&f](double x) { return f.dx(x); }};
}

inline Profile1D zero_profile() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; }};
}

// ---------------------------------------------------------------------------
// Fluid-domain map.
// ---------------------------------------------------------------------------

inline Vec2 ale_map(const Profile1D& om, double R, const Vec2& phat) {
  return {phat.x(), phat.y() + (1.0 + phat.y() / R) * om.val(phat.x())};
}

inline Vec2 ale_inverse(const Profile1D& om, double R, const Vec2& p) {
  double w = om.val(p.x());
  if (!(R + w > 0))
    throw DegeneracyError("fluid domain degenerate: R + omega <= 0");
  return {p.x(), -R + R * (R + p.y()) / (R + w)};
}

inline double fluid_jacobian(double omega, double R) { return 1.0 + omega / R; }

inline double interface_jacobian(double omega_x) {
  return std::sqrt(1.0 + omega_x * omega_x);
}

// Scaled (non-unit) interface normal and tangent; |n| equals the interface
// Jacobian.
inline Vec2 interface_normal(double omega_x) { return {-omega_x, 1.0}; }
inline Vec2 interface_tangent(double omega_x) { return {1.0, omega_x}; }

// Transformed gradient of a scalar: input is the reference gradient at
// (xh, yh), output the physical gradient composed with the map.
inline Vec2 fluid_transformed_grad(double omega, double omega_x, double R,
                                   double yhat, const Vec2& grad_hat) {
  if (!(R + omega > 0))
    throw DegeneracyError("fluid domain degenerate: R + omega <= 0");
  double a = (R + yhat) * omega_x / (R + omega);
  return {grad_hat.x() - a * grad_hat.y(), R / (R + omega) * grad_hat.y()};
}

// Same operator applied to a vector field's Jacobian (rows = components).
inline Mat2 fluid_transformed_grad(double omega, double omega_x, double R,
                                   double yhat, const Mat2& jac_hat) {
  if (!(R + omega > 0))
    throw DegeneracyError("fluid domain degenerate: R + omega <= 0");
  double a = (R + yhat) * omega_x / (R + omega);
  Mat2 out;
  out.col(0) = jac_hat.col(0) - a * jac_hat.col(1);
  out.col(1) = R / (R + omega) * jac_hat.col(1);
  return out;
}

inline Mat2 sym_part(const Mat2& G) { return 0.5 * (G + G.transpose()); }

// Reference-domain image of the fluid domain velocity.
inline Vec2 fluid_domain_velocity(double zeta, double R, double yhat) {
  return {0.0, (R + yhat) / R * zeta};
}

// ---------------------------------------------------------------------------
// Porous-domain (Lagrangian) deformation data.
// ---------------------------------------------------------------------------

struct DeformationData {
  Mat2 F;     // Id + grad eta
  Mat2 Finv;  // F^{-1}
  double J;   // det F
};

inline DeformationData deformation_data(const Mat2& grad_eta) {
  DeformationData d;
  d.F = Mat2::Identity() + grad_eta;
  d.J = d.F.determinant();
  if (!(d.J > 0) || !std::isfinite(d.J))
    throw DegeneracyError("porous domain degenerate: det(Id + grad eta) <= 0");
  d.Finv = d.F.inverse();
  return d;
}

// Transformed gradient on the deformed porous domain: grad_hat * F^{-1}.
inline Vec2 biot_transformed_grad(const DeformationData& d,
                                  const Vec2& grad_hat) {
  return d.Finv.transpose() * grad_hat;
}
inline Mat2 biot_transformed_grad(const DeformationData& d,
                                  const Mat2& jac_hat) {
  return jac_hat * d.Finv;
}

// ---------------------------------------------------------------------------
// Velocity transfer between the fluid domains of two plate profiles
// ("src" and "dst"); preserves the divergence-free property and the
// interface trace.
// ---------------------------------------------------------------------------

struct ProfilePair {
  Profile1D src;  // omega
  Profile1D dst;  // omega_delta
  double R = 1.0;

  // gamma(x) = (R + omega(x)) / (R + omega_delta(x)) and its x-derivative.
  double gamma(double x) const {
    double den = R + dst.val(x);
    if (!(den > 0))
      throw DegeneracyError("fluid domain degenerate: R + omega_delta <= 0");
    return (R + src.val(x)) / den;
  }
  double gamma_dx(double x) const {
    double a = R + src.val(x), b = R + dst.val(x);
    return (src.dx(x) * b - a * dst.dx(x)) / (b * b);
  }

  // Map from the dst-domain to the src-domain and back (vertical rescale).
  Vec2 to_src(const Vec2& p) const {
    return {p.x(), gamma(p.x()) * (R + p.y()) - R};
  }
  Vec2 to_dst(const Vec2& q) const {
    return {q.x(), (R + q.y()) / gamma(q.x()) - R};
  }

  // u defined on the src-domain -> transferred field on the dst-domain.
  Vec2 push_forward(const std::function<Vec2(Vec2)>& u, const Vec2& p) const {
    double g = gamma(p.x()), gp = gamma_dx(p.x());
    Vec2 val = u(to_src(p));
    return {g * val.x(), -(R + p.y()) * gp * val.x() + val.y()};
  }
  // u_delta defined on the dst-domain -> transferred field on the src-domain.
  Vec2 pull_back(const std::function<Vec2(Vec2)>& u_delta,
                 const Vec2& q) const {
    double g = gamma(q.x()), gp = gamma_dx(q.x());
    Vec2 val = u_delta(to_dst(q));
    return {val.x() / g, (R + q.y()) * gp / (g * g) * val.x() + val.y()};
  }
};

// The lower-triangular transfer matrix between two profiles at a physical
// point of the dst-domain; det K = gamma.
inline Mat2 transfer_matrix(const ProfilePair& pair, const Vec2& p) {
  double g = pair.gamma(p.x()), gp = pair.gamma_dx(p.x());
  Mat2 K;
  K << g, 0.0, -(pair.R + p.y()) * gp, 1.0;
  return K;
}

}  // namespace fpsi
