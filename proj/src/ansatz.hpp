#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "collision.hpp"
#include "norms.hpp"
#include "spectral.hpp"

namespace klab {

// Fibonacci-lattice unit vectors.
std::vector<Vec3> sphere_grid(int J);
// sqrt(4 pi / J): side of an equal-area cell.
double equal_area_spacing(int J);
// Smallest angle between two distinct directions (exhaustive).
double min_pair_angle(const std::vector<Vec3>& d);

// Bucketed directions for fast "which tubes come within angle a of this line" queries.
class DirectionIndex {
 public:
  explicit DirectionIndex(const std::vector<Vec3>& dirs);
  // Calls f(j) for every j whose direction lies within angle a of +u or -u.
  // May call f for a few extra directions; never misses one.
  void near_axis(const Vec3& u, double a, const std::function<void(std::size_t)>& f) const;

 private:
  int nt_, np_;
  std::vector<std::vector<std::size_t>> cells_;
  std::size_t cell(int it, int ip) const { return std::size_t(it) * np_ + ip; }
};

struct TubeFamily {
  double M = 8, N2 = 8, s = 0.75;
  int J = 0;
  std::vector<Vec3> directions;

  // J = 0 picks round((M N2)^2).
  static TubeFamily make(double M, double N2, double s, int J = 0);
};

struct AnsatzParams {
  TubeFamily tube;
  double N = 0.125;
  double delta = 0.2;
  double mu = 1.0;
  double s0 = 0;
  double t_star = 0;
  // Tube amplitude factor. The default makes rho_b(0, 0) = (M N2)^{1-s} J / (M N2)^2,
  // so beta(t_star, 0) = -delta ln M. kappa = 1 is the bare construction.
  double kappa = 1.0;

  // N2 = M^mu; N = 0 picks 1/M. Throws Regime when a standing constraint fails.
  static AnsatzParams make(double M, double s = 0.75, double delta = 0.2, double mu = 1.0, double N = 0,
                           int J = 0);

  double M() const { return tube.M; }
  double N2() const { return tube.N2; }
  double s() const { return tube.s; }
  double tube_amplitude() const;    // kappa M^{1-s} N2^{-2-s}
  double cavity_amplitude() const;  // M^{3/2-s} N^{-3/2}
  std::shared_ptr<const DirectionIndex> index;
};

double s0_of(double M, double s);
double t_star_of(double M, double N2, double s, double delta);
double default_kappa();

double f_b_eval(const AnsatzParams& p, double t, const Vec3& x, const Vec3& v);
// One tube of f_b (no amplitude) in its own frame.
double tube_profile(const AnsatzParams& p, std::size_t j, double t, const Vec3& x, const Vec3& v);
// int f_b dv, exact per-tube closed form.
double rho_b_eval(const AnsatzParams& p, double t, const Vec3& x);
// int_0^t rho_b(t0, x) dt0 for t in [t_star, 0] (so beta <= 0 there).
double beta_eval(const AnsatzParams& p, double t, const Vec3& x, double rtol = 1e-9);
double f_r_eval(const AnsatzParams& p, double t, const Vec3& x, const Vec3& v);
double f_r_with_beta(const AnsatzParams& p, double beta, const Vec3& x, const Vec3& v);
double f_a_eval(const AnsatzParams& p, double t, const Vec3& x, const Vec3& v);
// int f_r dv
double rho_r_eval(const AnsatzParams& p, double beta, const Vec3& x);

// beta(t, .) for one fixed t, via a per-t table of the tube time integrals.
class BetaSlice {
 public:
  BetaSlice(const AnsatzParams& p, double t);
  double operator()(const Vec3& x) const;
  double t() const { return t_; }

 private:
  const AnsatzParams* p_;
  double t_, rmax_, amax_, dr_, da_;
  int nr_, na_;
  std::vector<double> table_;
};

// Radial and per-tube integrals behind rho_b.
double tube_perp_integral(double r, double tau);  // C2
double tube_par_integral(double a, double tau);   // C1

// Sampling on grids. v-slices are filled in parallel.
PhaseField f_a_to_grid(const AnsatzParams& p, double t, const GridSpec& g);
PhaseField f_b_to_grid(const AnsatzParams& p, double t, const GridSpec& g);
PhaseField f_r_to_grid(const AnsatzParams& p, double t, const GridSpec& g);

// Grid needed to resolve the construction: >= 4 cells across 1/M in x and v.
void check_ansatz_resolution(const AnsatzParams& p, const GridSpec& g);

// v.grad f_r, Q-(f_b, f_r), Q-(f_r, f_r), Q-(f_b, f_b), -Q+(f_a, f_a).
std::vector<std::pair<std::string, PhaseField>> f_err_terms(const AnsatzParams& p, double t, const GridSpec& g,
                                                           const CollisionConfig& cfg);

// Semi-analytic norms of the ansatz. The tube and cavity parts have disjoint
// v-supports, so their squares add.
struct AnsatzNorm {
  double cavity = 0;
  double tubes = 0;
  double total() const;
};
// || . ||_{L_v^{2,q} H_x^q}
AnsatzNorm fa_sobolev_norm(const AnsatzParams& p, double t, double q, int nx = 32);
// Z-norm components of f_a.
ZParts fa_z_parts(const AnsatzParams& p, double t, int nx = 32);
// || Q-(f_b, f_b) ||_{L^2_v L^2_x}
double loss_bb_l2(const AnsatzParams& p, int budget = 0);
// Spherical average of rho_b(t, r u) over directions u. Each tube contributes the
// same average, so this is J times a 1D integral over the angle to the tube axis.
double rho_b_shell_average(const AnsatzParams& p, double t, double r);

}  // namespace klab
