#pragma once

// Physical coefficients and reference geometry for the coupled
// Navier-Stokes / Biot / plate system.
//
// The reference configuration is the union of
//   fluid layer   (0,L) x (-R,0),
//   porous layer  (0,L) x (0,R),
// separated by the elastic plate along y = 0.

#include <cmath>
#include <stdexcept>
#include <string>

namespace fpsi {

struct PhysicalParams {
  // Porous medium (Biot).
  double rho_b = 1.0;     // solid matrix density
  double mu_e = 1.0;      // elastic shear modulus
  double lambda_e = 1.0;  // elastic first Lame parameter
  double mu_v = 0.0;      // viscoelastic shear modulus (>= 0)
  double lambda_v = 0.0;  // viscoelastic first Lame parameter (>= 0)
  double alpha = 1.0;     // pressure/stress coupling coefficient
  double c0 = 1.0;        // storage coefficient (>= 0)
  double kappa = 1.0;     // permeability (> 0)

  // Plate.
  double rho_p = 1.0;  // plate density coefficient

  // Fluid.
  double nu = 1.0;    // kinematic viscosity
  double beta = 0.0;  // interface slip coefficient (>= 0)

  // Geometry.
  double L = 1.0;  // channel length
  double R = 1.0;  // half-height of the two layers

  // Throws std::invalid_argument naming the violated sign constraint.
  void validate() const {
    auto positive = [](double v, const char* what) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string(what) + " must satisfy " +
                                    what + " > 0");
    };
    auto nonnegative = [](double v, const char* what) {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string(what) + " must satisfy " +
                                    what + " >= 0 (mu_v, lambda_v >= 0; "
                                    "beta >= 0; c0 >= 0)");
    };
    positive(rho_b, "rho_b");
    positive(mu_e, "mu_e");
    positive(lambda_e, "lambda_e");
    positive(alpha, "alpha");
    positive(rho_p, "rho_p");
    positive(nu, "nu");
    positive(kappa, "kappa");
    nonnegative(mu_v, "mu_v");
    nonnegative(lambda_v, "lambda_v");
    nonnegative(beta, "beta");
    nonnegative(c0, "c0");
    positive(L, "L");
    positive(R, "R");
  }
};

// Error taxonomy shared across the library.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegeneracyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fpsi
