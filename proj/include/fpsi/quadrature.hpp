#pragma once

// Gauss-Legendre rules on [0,1], tensor rules on the reference triangle via
// the collapsed-square (Duffy) map, and their exactness degrees.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace fpsi {

struct QuadPoint1D {
  double x;  // in [0,1]
  double w;
};

// n-point Gauss-Legendre on [0,1]; exact for polynomials of degree 2n-1.
inline std::vector<QuadPoint1D> gauss_legendre_01(int n) {
  std::vector<QuadPoint1D> pts(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev initial guess, on [-1,1].
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    pts[i].x = 0.5 * (1.0 - x);  // map to [0,1]; roots descend in x
    pts[i].w = 1.0 / ((1.0 - x * x) * pp * pp);
  }
  return pts;
}

struct TriQuadPoint {
  Eigen::Vector3d lambda;  // barycentric coordinates
  double w;                // weights sum to 1/2 (reference-triangle area)
};

// Rule on the unit triangle exact for polynomials of total degree <= `degree`.
// Built from the square via (xi, eta) = (a(1-b), ab), Jacobian a; a polynomial
// of total degree d pulls back to bidegree (d+1, d), so n = floor(d/2)+2
// one-dimensional points suffice in each direction.
inline std::vector<TriQuadPoint> triangle_rule(int degree) {
  int n = degree / 2 + 2;
  auto g = gauss_legendre_01(n);
  std::vector<TriQuadPoint> pts;
  pts.reserve(n * n);
  for (const auto& pa : g)
    for (const auto& pb : g) {
      double xi = pa.x * (1.0 - pb.x);
      double eta = pa.x * pb.x;
      TriQuadPoint q;
      q.lambda = {1.0 - xi - eta, xi, eta};
      q.w = pa.w * pb.w * pa.x;
      pts.push_back(q);
    }
  return pts;
}

// 1D rule on [0,1] exact for degree <= `degree`.
inline std::vector<QuadPoint1D> segment_rule(int degree) {
  return gauss_legendre_01(degree / 2 + 1);
}

}  // namespace fpsi
