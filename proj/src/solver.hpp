#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ansatz.hpp"
#include "collision.hpp"
#include "norms.hpp"
#include "spectral.hpp"

namespace klab {

struct SolverConfig {
  double dt = 0.01;
  int picard_iters = 30;
  double picard_tol = 1e-12;  // relative change of the stage values
  bool collisions = true;     // false: pure free transport
  CollisionConfig collision;
  // Time nodes T_0 = 0 > T_1 > ... > T_n = t_star for the correction scheme;
  // empty means "build from the ansatz parameters".
  std::vector<double> partition;
  // Every k-th step of evolve() is written as KLB1 + JSON sidecar (0: off).
  int checkpoint_every = 0;
  std::string checkpoint_dir;
};

void validate(const SolverConfig& c);

struct StepStats {
  int iterations = 0;
  std::vector<double> distances;  // |iterate_{k+1} - iterate_k|, relative
  double max_ratio() const;       // largest distances[k+1] / distances[k]
};

// Right-hand side R(t, f) of d_t f + v.grad_x f = R.
using Forcing = std::function<PhaseField(double, const PhaseField&)>;

// One step of the mild formulation
//   f(t + dt) = S(dt) f + int_0^dt S(dt - s) R(t + s, f(t + s)) ds,
// with two-point Gauss in s and Picard iteration on the stage values.
// dt may be negative (backward runs use the same formula on reflected time).
PhaseField duhamel_step_forced(const PhaseField& f, double t, double dt, const Forcing& rhs, const SolverConfig& cfg,
                               StepStats* stats = nullptr);
// R = Q(f, f), or zero when collisions are disabled.
PhaseField duhamel_step(const PhaseField& f, double dt, const SolverConfig& cfg, StepStats* stats = nullptr);

struct EvolveResult {
  Trajectory trajectory;
  std::vector<StepStats> steps;
  double mass_drift = 0;  // max |mass(t) - mass(0)| / |mass(0)|
};

// Uniform steps from t_start to t_end (dt shrunk to divide the interval).
EvolveResult evolve(const PhaseField& f0, double t_end, const SolverConfig& cfg, double t_start = 0);
// Continues from the newest checkpoint in cfg.checkpoint_dir.
EvolveResult evolve_resume(double t_end, const SolverConfig& cfg);

// Partition of [t_star, 0] with spacing delta (M N2)^{s-1}.
std::vector<double> correction_partition(const AnsatzParams& p);

struct CorrectionOptions {
  bool zero_forcing = false;  // drop F_err (sanity runs)
  double substeps = 2;        // Duhamel steps per interval
  double stop_time = 0;       // t >= t_star at which to stop (0: run to t_star)
  // Multiplies every collision term of the f_c equation (and of F_err). The
  // default 1/(4 pi) gives Q-(f, g) = f int g, the normalisation under which
  // f_r = A exp(-beta) chi chi solves d_t f_r = -Q-(f_r, f_b) exactly.
  double kernel_scale = 1 / (4 * 3.14159265358979323846);
};

struct CorrectionResult {
  std::vector<double> times;     // T_0 = 0 > T_1 > ...
  std::vector<double> z_fc;      // |f_c(T_j)|_Z
  std::vector<double> z_fa;      // |f_a(T_j)|_Z, semi-analytic (whole ansatz, not just the grid window)
  std::vector<double> recursion; // C_j with |f_c(T_{j+1})| = 2 |f_c(T_j)| + C_j M^{-delta}
  Trajectory trajectory;         // f_c at the nodes, increasing time (t_star first)
};

// Backward solve of d_t f_c + v.grad f_c = Q(f_c, f_a) + Q(f_a, f_c) + Q(f_c, f_c) - F_err
// from f_c(0) = 0 over the partition. Throws Regime (with the Z history) once
// |f_c|_Z exceeds |f_a|_Z.
CorrectionResult solve_correction(const AnsatzParams& p, const GridSpec& g, const SolverConfig& cfg,
                                  const CorrectionOptions& opt = {});

// t0 in [t_star, 0] with |f_r(t0)|_{L_v^{2,s0} H_x^{s0}} = 1 (bisection, 1e-3 relative).
double twin_time(const AnsatzParams& p);

struct TwinReport {
  double t0 = 0;
  double d_t0 = 0;  // |f_ex(t0) - g_ex(t0)|
  double d_0 = 0;   // |f_ex(0) - g_ex(0)|
};

// Evolves both data from t0 to 0 with the full equation and measures the
// L_v^{2,q} H_x^q distance at both ends.
TwinReport twin_distances(const PhaseField& a, const PhaseField& b, double t0, double q, const SolverConfig& cfg);
TwinReport twin_experiment(const AnsatzParams& p, const GridSpec& g, const SolverConfig& cfg);

struct ZProbeReport {
  double max_gain = 0;  // max |Q+(f1, f2)|_Z / (|f1|_Z |f2|_Z)
  double max_loss = 0;
  std::vector<double> gain_ratios, loss_ratios;
};

// Randomised corpus of Gaussian and tube-like fields; M is the Z-norm scale.
ZProbeReport z_bilinear_probe(int corpus, const GridSpec& g, const CollisionConfig& cfg, double M = 4,
                              unsigned seed = 1);
// Ratio helper; zero when either factor has zero Z norm.
double z_ratio(const PhaseField& q, const PhaseField& f1, const PhaseField& f2, double M);

}  // namespace klab
