#pragma once

#include <functional>
#include <vector>

#include "spectral.hpp"

namespace klab {

// Spectral-side functions of the bilinear loss sharpness example. The bump
// plays the role of the compactly supported hat profile.
struct SharpnessFunctions {
  double M1 = 1, M2 = 1, N = 1, N2 = 2;
  std::vector<Vec3> directions;  // J ~ (M2 N2)^2 tube axes

  double phi(const Vec3& eta1, const Vec3& v) const;
  double psi(const Vec3& eta2, const Vec3& v2) const;
  double zeta(const Vec3& eta, const Vec3& v) const;
};

// Throws Regime unless M1, M2 >= 1, N2 > 1 dyadic and N <= 1/max(M1, M2).
SharpnessFunctions sharpness_functions(double M1, double M2, double N, double N2);

struct SharpnessResult {
  double value = 0;
  double error_estimate = 0;  // relative change over the last node doubling
  int nodes = 0;              // Gauss nodes per dimension at the last level
  double target = 0;          // min(M1, M2) N2 B_{M1 M2}
  std::vector<double> history;
};

// The quadruple integral of theta^ phi^ psi^ zeta^, reduced per tube: each
// tube contributes the same amount (phi^ and zeta^ are radial), and inside a
// tube frame the remaining integrals are smooth and compactly supported.
// Node counts double from 8 up to `budget` per dimension until the relative
// change is below rtol; Budget error if it is still above 5% at the end.
SharpnessResult sharpness_integral(double M1, double M2, double N, double N2, int budget = 64, double rtol = 1e-3);

struct BilinearFactors {
  double BM = 1;  // B_{M1, M2}
  double BN = 1;  // B_{N, N2}
};
// N below 1 is clamped to 1 (the dyadic convention of the estimate).
BilinearFactors bilinear_factors(double M1, double M2, double N, double N2);

// Unitary 1D transform of the time cutoff theta.
double theta_hat(double tau);

}  // namespace klab
