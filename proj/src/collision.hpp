#pragma once

#include <utility>
#include <vector>

#include "spectral.hpp"

namespace klab {

struct SphereQuadrature {
  std::vector<Vec3> nodes;
  std::vector<double> weights;

  // Fibonacci lattice with equal weights 4 pi / n.
  static SphereQuadrature fibonacci(int n);
  // The six signed coordinate axes. On a cubic grid the direct oracle then
  // samples only grid points and conserves moments of Q(f, f) to rounding.
  static SphereQuadrature axes();
  std::size_t size() const { return nodes.size(); }
};

enum class Interpolation { Trilinear, Trig };

// Omega: f~(xi - (w.xi) w) g~((w.xi) w), the exact image of the constant
// kernel in the (u*, v*) parametrization. Sigma: f~(xi+) g~(xi-) with
// xi+- = (xi +- |xi| w)/2 and uniform dw.
enum class GainForm { Omega, Sigma };

struct CollisionConfig {
  SphereQuadrature quadrature = SphereQuadrature::fibonacci(64);
  Interpolation interpolation = Interpolation::Trilinear;
  double dealias_margin = 1.0 / 3.0;
  GainForm form = GainForm::Omega;
  int direct_max_nv = 8;
  int pad_factor = 2;  // spectral zero-padding used by Trilinear
  int direct_upsample = 4;  // trig upsampling before Lagrange in the direct oracle

  void validate() const;
};

std::pair<Vec3, Vec3> post_collision(const Vec3& u, const Vec3& v, const Vec3& w);

// rho_g(x) = sum_v g dv.
std::vector<cplx> density(const PhaseField& g);

PhaseField loss_term(const PhaseField& f, const PhaseField& g);
// (2 pi)^{3/2} 4 pi f~(x, xi) g~(x, 0), tagged Spectral_x_xi.
PhaseField loss_term_spectral(const PhaseField& f, const PhaseField& g);

PhaseField gain_term_spectral(const PhaseField& f, const PhaseField& g, const CollisionConfig& cfg,
                              double* imag_residue = nullptr);
PhaseField gain_term_direct(const PhaseField& f, const PhaseField& g, const CollisionConfig& cfg);

enum class GainMethod { Spectral, Direct };
PhaseField collision(const PhaseField& f, const PhaseField& g, const CollisionConfig& cfg,
                     GainMethod method = GainMethod::Spectral);

struct Moments {
  double mass = 0;
  Vec3 momentum{0, 0, 0};
  double energy = 0;
};
Moments moments(const PhaseField& f);
// Moments weighted by |f| (scale for relative residuals).
Moments abs_moments(const PhaseField& f);

}  // namespace klab
