#pragma once

#include <string>
#include <vector>

#include "spectral.hpp"

namespace klab {

// <eta>^s <v>^r weighted L2 (inhomogeneous brackets).
double sobolev_norm(const PhaseField& f, double s, double r);
// |eta|^s |v|^r weighted L2, used for scaling checks.
double homogeneous_norm(const PhaseField& f, double s, double r);

// L_v^{p,r} L_x^q with v outer: ( sum_v (<v>^r ||f(.,v)||_{L^q_x})^p dv )^{1/p}.
struct MixedSpec {
  double pv = 2;
  double rv = 0;
  double qx = 2;
};
constexpr double kInf = 1e308;
MixedSpec parse_mixed(const std::string& spec);
double mixed_norm(const PhaseField& f, const MixedSpec& spec);
double mixed_norm(const PhaseField& f, const std::string& spec);
// Same with |grad_x f| in place of |f|.
double mixed_norm_grad(const PhaseField& f, const MixedSpec& spec);

struct ZParts {
  double l2 = 0, grad_l2 = 0, l1inf = 0, grad_l1inf = 0;
  double total(double M) const { return M * l2 + grad_l2 + l1inf + grad_l1inf / M; }
};
ZParts z_parts(const PhaseField& f);
double z_norm(const PhaseField& f, double M);

// Smooth step: 1 on r <= 1, 0 on r >= sqrt 2.
double lp_bump(double r);
// Time cutoff: 1 on |t| <= 1, 0 on |t| >= 2.
double cutoff_theta(double t);

enum class LpAxis { X, Xi };
// Dyad 1 is the low block; 2, 4, ... are annuli N/2 < |k| < N sqrt 2.
std::vector<double> lp_dyads(const GridSpec& g, LpAxis axis);
PhaseField lp_project(const PhaseField& f, LpAxis axis, double N);

// L^q_t L^p_{x xi}, trapezoid in t. q or p may be kInf.
double spacetime_norm(const Trajectory& traj, double q, double p);
// L^q_t L^p_x L^r_xi (x outer).
double spacetime_mixed_norm(const Trajectory& traj, double q, double p, double r);

// Cutoff X_{s,b}: theta((t - t_mid)/T) f, FFT in t, weights <tau + eta.v>^b <eta>^s <v>^s.
double xsb_norm(const Trajectory& traj, double s, double b, double T);

}  // namespace klab
