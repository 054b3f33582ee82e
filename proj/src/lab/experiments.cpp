#include "lab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "ansatz.hpp"
#include "collision.hpp"
#include "error.hpp"
#include "lab/fit.hpp"
#include "norms.hpp"
#include "sharpness.hpp"
#include "solver.hpp"
#include "spectral.hpp"

namespace klab::lab {

namespace {

constexpr double kPi = 3.14159265358979323846;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

CollisionConfig collision_config(const Config& c) {
  CollisionConfig cc;
  cc.quadrature = SphereQuadrature::fibonacci(c.integer("collision.quadrature_nodes"));
  const std::string& interp = c.raw("collision.interpolation");
  if (interp == "trig")
    cc.interpolation = Interpolation::Trig;
  else if (interp != "trilinear")
    fail(ErrorCode::Config, "key 'collision.interpolation': expected trilinear or trig, got '" + interp + "'");
  cc.dealias_margin = c.num("collision.dealias_margin");
  cc.pad_factor = c.integer("collision.pad");
  cc.validate();
  return cc;
}

AnsatzParams ansatz(const Config& c, double M) {
  return AnsatzParams::make(M, c.num("ansatz.s"), c.num("ansatz.delta"), c.num("ansatz.mu"), c.num("ansatz.N"));
}

bool single(const Config& c) { return c.flag("run.single"); }

std::string str(double v) { return fmt17(v); }

Series mk(const std::string& name, const std::string& xl, const std::string& yl) {
  Series s;
  s.name = name;
  s.x_label = xl;
  s.y_label = yl;
  return s;
}

// Homogeneous mixture of three Gaussians in v.
PhaseField v_mixture(const GridSpec& g, std::mt19937_64& rng, double sig) {
  std::uniform_real_distribution<double> uc(-0.6, 0.6), uw(0.95, 1.05), ua(0.5, 1.5);
  PhaseField f(g);
  for (int k = 0; k < 3; ++k) {
    Vec3 c{uc(rng), uc(rng), uc(rng)};
    double w = sig * uw(rng), a = ua(rng);
    f = axpy(1.0, sample(g, [&](const Vec3&, const Vec3& v) {
               Vec3 d{v[0] - c[0], v[1] - c[1], v[2] - c[2]};
               return a * std::exp(-0.5 * dot(d, d) / (w * w));
             }),
             f);
  }
  return f;
}

// largest |moment of q| relative to the matching |moment| of the loss term
double moment_residual(const PhaseField& q, const PhaseField& loss) {
  Moments m = moments(q), a = abs_moments(loss);
  double r = std::abs(m.mass) / a.mass;
  for (int k = 0; k < 3; ++k) r = std::max(r, std::abs(m.momentum[k]) / a.energy);
  return std::max(r, std::abs(m.energy) / a.energy);
}

// Slope verdicts report the deviation from the expected exponent.
void check_slope(ExperimentReport& r, const std::string& name, const std::string& key, double slope, double want,
                 double tol, bool relative) {
  double dev = relative ? std::abs(slope / want - 1) : std::abs(slope - want);
  r.check(name, key, dev, tol, dev <= tol,
          "slope " + fmt17(slope) + ", expected " + fmt17(want) + (relative ? ", relative deviation" : ""));
}

// ------------------------------------------------------------ conservation

ExperimentReport conservation(const Config& c) {
  ExperimentReport r;
  std::mt19937_64 rng{static_cast<unsigned long long>(c.num("run.seed"))};
  const double L = c.num("conservation.L");
  const int pairs = c.integer("conservation.pairs");

  GridSpec gd = GridSpec::make({1, 1, 1}, {c.integer("conservation.nv"), c.integer("conservation.nv"), c.integer("conservation.nv")}, 0.5, L);
  CollisionConfig axes = collision_config(c);
  axes.quadrature = SphereQuadrature::axes();
  GridSpec gs = GridSpec::make({1, 1, 1},
                               {c.integer("conservation.spectral_nv"), c.integer("conservation.spectral_nv"),
                                c.integer("conservation.spectral_nv")},
                               0.5, L);
  CollisionConfig spec = collision_config(c);
  spec.interpolation = Interpolation::Trig;
  spec.dealias_margin = 0;

  Series sd = mk("direct_residual", "pair", "residual"), ss = mk("spectral_residual", "pair", "residual");
  double wd = 0, ws = 0;
  for (int k = 0; k < pairs; ++k) {
    PhaseField f = v_mixture(gd, rng, 1.0);
    PhaseField loss = loss_term(f, f);
    double rd = moment_residual(axpy(-1.0, loss, gain_term_direct(f, f, axes)), loss);
    PhaseField h = v_mixture(gs, rng, 1.0);
    PhaseField lh = loss_term(h, h);
    double rs = moment_residual(collision(h, h, spec), lh);
    sd.x.push_back(k);
    sd.y.push_back(rd);
    ss.x.push_back(k);
    ss.y.push_back(rs);
    wd = std::max(wd, rd);
    ws = std::max(ws, rs);
  }
  r.series = {sd, ss};
  r.scalars["direct_residual_max"] = wd;
  r.scalars["spectral_residual_max"] = ws;
  r.check("direct_moments", "conservation.direct_tol", wd, c.num("conservation.direct_tol"),
          wd < c.num("conservation.direct_tol"), "six-axis quadrature, " + std::to_string(gd.nv[0]) + "^3 v-grid");
  r.check("spectral_moments", "conservation.spectral_tol", ws, c.num("conservation.spectral_tol"),
          ws < c.num("conservation.spectral_tol"), "Trig interpolation, margin 0, " + std::to_string(gs.nv[0]) + "^3");

  int nm = c.integer("conservation.maxwellian_nv");
  GridSpec gm = GridSpec::make({1, 1, 1}, {nm, nm, nm}, 0.5, L);
  PhaseField m = sample(gm, [](const Vec3&, const Vec3& v) { return std::exp(-0.5 * dot(v, v) / 0.64); });
  CollisionConfig dflt = collision_config(c);
  double ratio = l2_norm(collision(m, m, dflt)) / l2_norm(gain_term_spectral(m, m, dflt));
  r.scalars["maxwellian_ratio"] = ratio;
  r.scalars["primary"] = ratio;
  r.check("maxwellian", "conservation.maxwellian_tol", ratio, c.num("conservation.maxwellian_tol"),
          ratio < c.num("conservation.maxwellian_tol"), "|Q(M,M)| / |Q+(M,M)|");
  return r;
}

// --------------------------------------------------------------- sharpness

double sharp_value(double M1, double M2, double N2, int budget, double rtol = 1e-3) {
  return sharpness_integral(M1, M2, 1.0 / std::max(M1, M2), N2, budget, rtol).value;
}

ExperimentReport sharpness(const Config& c) {
  ExperimentReport r;
  const int budget = c.integer("sharpness.budget");
  const double M1 = c.num("sharpness.M1"), M2 = c.num("sharpness.M2"), N2 = c.num("sharpness.N2");
  const double tol = c.num("sharpness.slope_tol");
  SharpnessResult base = sharpness_integral(M1, M2, 1.0 / std::max(M1, M2), N2, budget);
  r.scalars["I"] = base.value;
  r.scalars["target"] = base.target;
  r.scalars["I_over_target"] = base.value / base.target;
  r.scalars["error_estimate"] = base.error_estimate;
  r.scalars["primary"] = base.value;
  if (single(c)) return r;

  // rtol 0 forces the full node budget at both levels
  double lo = sharpness_integral(M1, M2, 1.0 / std::max(M1, M2), N2, budget / 2, 0).value;
  double hi = sharpness_integral(M1, M2, 1.0 / std::max(M1, M2), N2, budget, 0).value;
  double change = std::abs(hi / lo - 1);
  r.scalars["budget_change"] = change;
  r.check("budget_doubling", "sharpness.budget_tol", change, c.num("sharpness.budget_tol"),
          change <= c.num("sharpness.budget_tol"), "budget " + std::to_string(budget / 2) + " -> " + std::to_string(budget));

  Series sn = mk("I_vs_N2", "N2", "I");
  for (double n2 : c.list("sharpness.N2_values")) {
    sn.x.push_back(n2);
    sn.y.push_back(sharp_value(M1, M2, n2, budget));
  }
  Slope fn = fit_loglog(sn.x, sn.y, "N2");
  double want = c.num("sharpness.slope_N2");
  check_slope(r, "slope_N2", "sharpness.slope_tol", fn.slope, want, tol, false);

  Series sm = mk("I_vs_M2", "M2", "I");
  const double m1 = c.num("sharpness.M1_for_M2");
  for (double m2 : c.list("sharpness.M2_values")) {
    sm.x.push_back(m2);
    sm.y.push_back(sharp_value(m1, m2, N2, budget));
  }
  Slope fm = fit_loglog(sm.x, sm.y, "M2");
  want = c.num("sharpness.slope_M2");
  check_slope(r, "slope_M2", "sharpness.slope_tol", fm.slope, want, tol, false);
  r.series = {sn, sm};
  r.slopes = {fn, fm};
  return r;
}

// ----------------------------------------------------------------- overlap

ExperimentReport overlap(const Config& c) {
  ExperimentReport r;
  const double s = c.num("ansatz.s"), mu = c.num("ansatz.mu");
  const int np = c.integer("overlap.profile_points");
  const double factor = c.num("overlap.profile_factor");
  Series centre = mk("centre_density", "M", "rho_b(0,0)");
  double worst = 1;
  for (double M : c.list("ansatz.M_values")) {
    AnsatzParams p = ansatz(c, M);
    double rho0 = rho_b_eval(p, 0, {0, 0, 0});
    centre.x.push_back(M);
    centre.y.push_back(rho0);
    Series prof = mk("profile_M" + str(M), "r", "shell_over_law");
    double lo = 0.5 / M, hi = p.N2() / 2;
    for (int i = 0; i < np; ++i) {
      double rr = lo * std::pow(hi / lo, double(i) / (np - 1));
      double law = std::pow((1 / M) / (rr + 1 / M), 2);
      double q = rho_b_shell_average(p, 0, rr) / rho0 / law;
      prof.x.push_back(rr);
      prof.y.push_back(q);
      worst = std::max(worst, std::max(q, 1 / q));
    }
    r.series.push_back(prof);
  }
  r.series.insert(r.series.begin(), centre);
  r.scalars["primary"] = centre.y.front();
  r.scalars["profile_worst_factor"] = worst;
  r.check("profile_within_factor", "overlap.profile_factor", worst, factor, worst <= factor,
          "shell average / centre vs (M^-1/(|x|+M^-1))^2 over M^-1/2 <= |x| <= N2/2");
  if (centre.x.size() >= 3) {
    Slope f = fit_loglog(centre.x, centre.y, "centre_exponent");
    double want = (1 - s) * (1 + mu);
    r.slopes.push_back(f);
    check_slope(r, "centre_exponent", "overlap.exponent_tol", f.slope, want, c.num("overlap.exponent_tol"), false);
  }
  return r;
}

// --------------------------------------------------------------- deflation

ExperimentReport deflation(const Config& c) {
  ExperimentReport r;
  Series s0 = mk("norm_t0_lnM", "M", "|f_a(0)| ln M"), gr = mk("growth", "M", "|f_a(t_star)|/|f_a(0)|");
  for (double M : c.list("ansatz.M_values")) {
    AnsatzParams p = ansatz(c, M);
    double n0 = fa_sobolev_norm(p, 0, p.s0).total();
    double n1 = fa_sobolev_norm(p, p.t_star, p.s0).total();
    s0.x.push_back(M);
    s0.y.push_back(n0 * std::log(M));
    gr.x.push_back(M);
    gr.y.push_back(n1 / n0);
  }
  r.series = {s0, gr};
  r.scalars["primary"] = gr.y.front();
  double spread = spread_about_mean(s0.y);
  r.scalars["norm_lnM_spread"] = spread;
  if (s0.y.size() >= 2)
    r.check("norm_lnM_stable", "deflation.stable_tol", spread, c.num("deflation.stable_tol"),
            spread <= c.num("deflation.stable_tol"), "max |v/geomean - 1|");
  if (gr.x.size() >= 3) {
    Slope f = fit_loglog(gr.x, gr.y, "growth_exponent");
    r.slopes.push_back(f);
    double d = c.num("ansatz.delta");
    check_slope(r, "growth_exponent", "deflation.slope_rel_tol", f.slope, d, c.num("deflation.slope_rel_tol"), true);
  }
  return r;
}

// -------------------------------------------------------------- strichartz

Trajectory free_trajectory(const PhaseField& f0, double t_end, int steps) {
  Trajectory tr;
  for (int k = 0; k <= steps; ++k) {
    double t = t_end * k / steps;
    tr.append(t, free_transport(f0, t));
  }
  return tr;
}

ExperimentReport strichartz(const Config& c) {
  ExperimentReport r;
  std::mt19937_64 rng{static_cast<unsigned long long>(c.num("run.seed")) + 7};
  std::uniform_real_distribution<double> U(0, 1);
  const int n = c.integer("strichartz.n"), steps = c.integer("strichartz.steps");
  const double L = c.num("strichartz.L"), T = c.num("strichartz.t_end");
  GridSpec g = GridSpec::make({n, n, 1}, {n, n, 1}, L, L);
  Series a = mk("ratio_inf_2", "sample", "ratio"), b = mk("ratio_2_3", "sample", "ratio");
  for (int k = 0; k < c.integer("strichartz.corpus"); ++k) {
    GaussianData d;
    for (int i = 0; i < 2; ++i) {
      d.centers[i] = (U(rng) - 0.5) * 0.1 * L;
      d.centers[3 + i] = (U(rng) - 0.5) * 0.1 * L;
      d.widths[i] = (0.1 + 0.03 * U(rng)) * L;
      d.widths[3 + i] = (0.1 + 0.03 * U(rng)) * L;
    }
    d.amplitude = 0.5 + U(rng);
    PhaseField f0 = gaussian_oracle(g, d, 0);
    Trajectory tr = free_trajectory(f0, T, steps);
    double l2 = l2_norm(f0);
    a.x.push_back(k);
    a.y.push_back(spacetime_norm(tr, kInf, 2) / l2);
    b.x.push_back(k);
    b.y.push_back(spacetime_norm(tr, 2, 3) / l2);
  }
  auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  };
  double sa = spread(a.y), sb = spread(b.y), lim = c.num("strichartz.spread_max");
  r.scalars["spread_inf_2"] = sa;
  r.scalars["spread_2_3"] = sb;
  r.check("admissible_inf_2", "strichartz.spread_max", sa, lim, sa < lim, "max/min over the corpus");
  r.check("admissible_2_3", "strichartz.spread_max", sb, lim, sb < lim, "max/min over the corpus");
  r.series = {a, b};

  // p != r: L^2_t L^inf_x L^1_xi grows like lambda under (x, xi) -> (lambda x, xi / lambda)
  const int n1 = c.integer("strichartz.necessity_n");
  const double L1 = c.num("strichartz.necessity_L");
  GridSpec g1 = GridSpec::make({n1, 1, 1}, {n1, 1, 1}, L1, L1);
  GaussianData d;
  d.widths = {0.15 * L1, 1, 1, 0.15 * L1, 1, 1};
  PhaseField base = gaussian_oracle(g1, d, 0);
  Series gs = mk("mixed_ratio_vs_lambda", "lambda", "ratio");
  for (double lam : c.list("strichartz.lambdas")) {
    PhaseField f0 = rescale(base, {lam, 1.0, 1.0});
    Trajectory tr = free_trajectory(f0, T, steps);
    gs.x.push_back(lam);
    gs.y.push_back(spacetime_mixed_norm(tr, 2, kInf, 1) / l2_norm(f0));
  }
  bool mono = true;
  for (std::size_t i = 1; i < gs.y.size(); ++i) mono = mono && gs.y[i] > gs.y[i - 1];
  double growth = gs.y.back() / gs.y.front();
  r.scalars["mixed_growth"] = growth;
  r.scalars["primary"] = growth;
  r.series.push_back(gs);
  r.check("p_ne_r_growth", "strichartz.growth_min", growth, c.num("strichartz.growth_min"),
          mono && growth >= c.num("strichartz.growth_min"), mono ? "monotone" : "not monotone");
  return r;
}

// ------------------------------------------------------------- contraction

ExperimentReport contraction(const Config& c) {
  ExperimentReport r;
  const int nv = c.integer("contraction.nv");
  const double amp = c.num("contraction.amplitude");
  GridSpec g = GridSpec::make({1, 1, 1}, {nv, nv, nv}, 0.5, c.num("contraction.L"));
  PhaseField f = sample(g, [&](const Vec3&, const Vec3& v) {
    double a = std::exp(-0.5 * (std::pow(v[0] - 0.5, 2) / 0.25 + v[1] * v[1] / 0.64 + v[2] * v[2] / 0.36));
    double b = 0.5 * std::exp(-0.5 * (std::pow(v[0] + 0.7, 2) + v[1] * v[1] + v[2] * v[2]) / 0.3);
    return amp * (a + b);
  });
  double rho = moments(f).mass;  // the x box has volume 1 here
  double tau = 1 / (4 * kPi * rho);
  SolverConfig sc;
  sc.collision = collision_config(c);
  sc.dt = c.num("contraction.dt_fraction") * tau;
  double rho0 = sobolev_norm(f, 1.1, 1.1);
  r.scalars["data_norm_1.1"] = rho0;
  r.scalars["dt"] = sc.dt;
  r.scalars["dt_times_bracket_sq"] = sc.dt * (1 + rho0 * rho0);
  r.scalars["collision_time"] = tau;
  StepStats st;
  duhamel_step(f, sc.dt, sc, &st);
  Series ds = mk("picard_distances", "iteration", "distance");
  for (std::size_t k = 0; k < st.distances.size(); ++k) {
    ds.x.push_back(k + 1);
    ds.y.push_back(st.distances[k]);
  }
  double ratio = st.max_ratio();
  r.scalars["max_ratio"] = ratio;
  r.scalars["primary"] = ratio;
  r.check("picard_ratio", "contraction.ratio_max", ratio, c.num("contraction.ratio_max"),
          ratio <= c.num("contraction.ratio_max"), std::to_string(st.iterations) + " iterations");
  EvolveResult ev = evolve(f, c.integer("contraction.steps") * sc.dt, sc);
  Series ms = mk("mass", "t", "mass");
  for (std::size_t k = 0; k < ev.trajectory.size(); ++k) {
    ms.x.push_back(ev.trajectory.times[k]);
    ms.y.push_back(moments(ev.trajectory.fields[k]).mass);
  }
  r.scalars["mass_drift"] = ev.mass_drift;
  r.check("mass_drift", "contraction.mass_tol", ev.mass_drift, c.num("contraction.mass_tol"),
          ev.mass_drift < c.num("contraction.mass_tol"));
  r.series = {ds, ms};
  return r;
}

// -------------------------------------------------------------- correction

ExperimentReport correction(const Config& c) {
  ExperimentReport r;
  const double M = c.num("correction.M");
  const int n = c.integer("correction.n");
  AnsatzParams p = ansatz(c, M);
  // The cavity window |x|, |v| <= 1/M holds f_r and f_c; the tubes enter
  // through the closed-form density rho_b and through F_err.
  GridSpec g = GridSpec::make({n, n, n}, {n, n, n}, 1 / M, 1 / M);
  SolverConfig sc;
  sc.collision = collision_config(c);
  sc.picard_tol = c.num("correction.picard_tol");
  CorrectionOptions opt;
  opt.substeps = c.num("correction.substeps");
  r.notes.push_back("grid is the cavity window [-1/M, 1/M)^6; tubes enter via closed-form rho_b and F_err");
  CorrectionResult cr = solve_correction(p, g, sc, opt);
  Series z = mk("ratio", "t", "|f_c|_Z/|f_a|_Z"), cs = mk("recursion_C", "interval", "C_j");
  double worst = 0;
  for (std::size_t i = 0; i < cr.times.size(); ++i) {
    z.x.push_back(cr.times[i]);
    z.y.push_back(cr.z_fc[i] / cr.z_fa[i]);
    worst = std::max(worst, z.y.back());
  }
  for (std::size_t j = 0; j < cr.recursion.size(); ++j) {
    cs.x.push_back(j + 1);
    cs.y.push_back(cr.recursion[j]);
  }
  r.series = {z, cs};
  r.scalars["max_ratio"] = worst;
  r.scalars["primary"] = worst;
  r.scalars["t_star"] = p.t_star;
  double cmax = cs.y.empty() ? 0 : *std::max_element(cs.y.begin(), cs.y.end());
  r.scalars["C_max"] = cmax;
  r.check("fc_over_fa", "correction.ratio_max", worst, c.num("correction.ratio_max"), worst < c.num("correction.ratio_max"),
          "max over the partition nodes, M = " + str(M));
  bool monotone = true;
  for (std::size_t i = 1; i < cr.z_fc.size(); ++i) monotone = monotone && cr.z_fc[i] >= cr.z_fc[i - 1];
  double first = cs.y.empty() ? 0 : cs.y.front();
  double growth = first > 0 ? cmax / first : (cmax <= 0 ? 0 : kInf);
  r.scalars["C_growth"] = growth;
  r.check("recursion_stable", "correction.c_growth_max", growth, c.num("correction.c_growth_max"),
          monotone && growth <= c.num("correction.c_growth_max"),
          std::string(monotone ? "|f_c|_Z nondecreasing backward" : "|f_c|_Z not monotone") + "; max C_j / C_1");
  return r;
}

// -------------------------------------------------------------------- twin

ExperimentReport twin(const Config& c) {
  ExperimentReport r;
  const int n = c.integer("twin.n");
  Series dt = mk("D_t0_lnM", "M", "D(t0) (ln M)^{1+mu}"), d0 = mk("D_0", "M", "D(0)");
  bool all = true;
  for (double M : c.list("ansatz.M_values")) {
    AnsatzParams p = ansatz(c, M);
    try {
      double t0 = twin_time(p);
      // smallest box that holds the tubes (|v| <= 1.1 N2) at the resolution guard
      double Lv = 1.1 * p.N2();
      int nv = n;
      while (2 * Lv / nv > 1 / (4 * M)) nv *= 2;
      GridSpec g = GridSpec::make({nv, nv, nv}, {nv, nv, nv}, Lv, Lv);
      SolverConfig sc;
      sc.collision = collision_config(c);
      TwinReport tw = twin_experiment(p, g, sc);
      dt.x.push_back(M);
      dt.y.push_back(tw.d_t0 * std::pow(std::log(M), 1 + p.mu));
      d0.x.push_back(M);
      d0.y.push_back(tw.d_0);
      r.scalars["t0_M" + str(M)] = t0;
    } catch (const Error& e) {
      all = false;
      r.notes.push_back("M = " + str(M) + ": " + e.what());
    }
  }
  r.series = {dt, d0};
  r.scalars["primary"] = dt.y.empty() ? 0 : dt.y.front();
  double spread = spread_about_mean(dt.y);
  r.check("D_t0_stable", "twin.stable_tol", spread, c.num("twin.stable_tol"),
          all && spread <= c.num("twin.stable_tol"), all ? "" : "not all M completed; see notes");
  double lo = d0.y.empty() ? 0 : *std::min_element(d0.y.begin(), d0.y.end());
  double hi = d0.y.empty() ? 0 : *std::max_element(d0.y.begin(), d0.y.end());
  r.check("D_0_order_one", "twin.d0_min", lo, c.num("twin.d0_min"),
          all && lo >= c.num("twin.d0_min") && hi <= c.num("twin.d0_max"), "range [twin.d0_min, twin.d0_max]");
  return r;
}

// ------------------------------------------------------------------ zprobe

ExperimentReport zprobe(const Config& c) {
  ExperimentReport r;
  const int corpus = c.integer("zprobe.corpus"), nc = c.integer("zprobe.n_coarse"), nf = c.integer("zprobe.n_fine");
  const double M = c.num("zprobe.M"), L = c.num("zprobe.L"), Lv = c.num("zprobe.Lv");
  const unsigned seed = static_cast<unsigned>(c.num("run.seed"));
  CollisionConfig cc = collision_config(c);
  ZProbeReport coarse = z_bilinear_probe(corpus, GridSpec::make({nc, nc, nc}, {nc, nc, nc}, L, Lv), cc, M, seed);
  r.scalars["gain_max"] = coarse.max_gain;
  r.scalars["loss_max"] = coarse.max_loss;
  r.scalars["primary"] = coarse.max_gain;
  r.series.push_back(mk("gain_ratios", "sample", "ratio"));
  r.series.back().y = coarse.gain_ratios;
  r.series.push_back(mk("loss_ratios", "sample", "ratio"));
  r.series.back().y = coarse.loss_ratios;
  for (auto& s : r.series)
    for (std::size_t i = 0; i < s.y.size(); ++i) s.x.push_back(i);
  if (single(c)) return r;
  // refine x and v separately (a 16^6 field pair does not fit the desk budget)
  ZProbeReport fx = z_bilinear_probe(corpus, GridSpec::make({nf, nf, nf}, {nc, nc, nc}, L, Lv), cc, M, seed);
  ZProbeReport fv = z_bilinear_probe(corpus, GridSpec::make({nc, nc, nc}, {nf, nf, nf}, L, Lv), cc, M, seed);
  r.scalars["gain_max_fine_x"] = fx.max_gain;
  r.scalars["loss_max_fine_x"] = fx.max_loss;
  r.scalars["gain_max_fine_v"] = fv.max_gain;
  r.scalars["loss_max_fine_v"] = fv.max_loss;
  double w = 0;
  for (const ZProbeReport* f : {&fx, &fv})
    w = std::max({w, std::abs(f->max_gain / coarse.max_gain - 1), std::abs(f->max_loss / coarse.max_loss - 1)});
  r.scalars["refinement_change"] = w;
  r.check("refinement_stable", "zprobe.stable_tol", w, c.num("zprobe.stable_tol"), w <= c.num("zprobe.stable_tol"),
          "largest relative change of the corpus maxima");
  return r;
}

using Fn = std::function<ExperimentReport(const Config&)>;

const std::map<std::string, Fn>& registry() {
  static const std::map<std::string, Fn> r{
      {"sharpness", sharpness},     {"overlap", overlap},       {"deflation", deflation},
      {"strichartz", strichartz},   {"conservation", conservation}, {"contraction", contraction},
      {"correction", correction},   {"twin", twin},             {"zprobe", zprobe},
  };
  return r;
}

struct Expected {
  double slope;
  double tol;
  bool relative;
  std::string key;
};

bool expected_slope(const std::string& name, const std::string& key, const Config& c, Expected& e) {
  if (name == "overlap" && key == "ansatz.M_values") {
    e = {(1 - c.num("ansatz.s")) * (1 + c.num("ansatz.mu")), c.num("overlap.exponent_tol"), false, "overlap.exponent_tol"};
    return true;
  }
  if (name == "deflation" && key == "ansatz.M_values") {
    e = {c.num("ansatz.delta"), c.num("deflation.slope_rel_tol"), true, "deflation.slope_rel_tol"};
    return true;
  }
  if (name == "sharpness" && key == "sharpness.N2") {
    e = {c.num("sharpness.slope_N2"), c.num("sharpness.slope_tol"), false, "sharpness.slope_tol"};
    return true;
  }
  if (name == "sharpness" && key == "sharpness.M2") {
    e = {c.num("sharpness.slope_M2"), c.num("sharpness.slope_tol"), false, "sharpness.slope_tol"};
    return true;
  }
  return false;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"sharpness",   "overlap",    "deflation", "strichartz", "conservation",
                                              "contraction", "correction", "twin",      "zprobe"};
  return names;
}

bool is_experiment(const std::string& name) { return registry().count(name) != 0; }

ExperimentReport run_experiment(const std::string& name, const Config& cfg) {
  auto it = registry().find(name);
  if (it == registry().end()) {
    std::string known;
    for (const auto& n : experiment_names()) known += (known.empty() ? "" : ", ") + n;
    fail(ErrorCode::InvalidArgument, "unknown experiment '" + name + "' (known: " + known + ")");
  }
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport r = it->second(cfg);
  r.name = name;
  r.params = cfg.values();
  r.seed = static_cast<unsigned long long>(cfg.num("run.seed"));
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

ExperimentReport sweep_experiment(const std::string& name, const std::string& key, const std::vector<std::string>& values,
                                  const Config& cfg) {
  require(is_experiment(name), ErrorCode::InvalidArgument, "unknown experiment '" + name + "'");
  require(cfg.has(key), ErrorCode::Config, "sweep: unknown key '" + key + "'");
  require(values.size() >= 2, ErrorCode::InvalidArgument, "degenerate sweep: '" + key + "' has a single value");
  auto t0 = std::chrono::steady_clock::now();
  ExperimentReport out;
  out.name = name + "_sweep";
  Series s = mk("primary_vs_" + key, key, "primary");
  for (const std::string& v : values) {
    Config c = cfg;
    c.set(key, v);
    c.set("run.single", "1");
    ExperimentReport r = run_experiment(name, c);
    s.x.push_back(c.num(key));
    s.y.push_back(r.scalars.at("primary"));
    for (const auto& [k, val] : r.scalars) out.scalars[key + "=" + v + "." + k] = val;
  }
  out.series.push_back(s);
  Slope f = fit_loglog(s.x, s.y, key);
  out.slopes.push_back(f);
  Expected e;
  if (expected_slope(name, key, cfg, e)) {
    check_slope(out, "slope", e.key, f.slope, e.slope, e.tol, e.relative);
  }
  Config rec = cfg;
  rec.set("run.single", "1");
  out.params = rec.values();
  out.params["sweep." + key] = [&] {
    std::string j;
    for (const auto& v : values) j += (j.empty() ? "" : ",") + v;
    return j;
  }();
  out.seed = static_cast<unsigned long long>(cfg.num("run.seed"));
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace klab::lab
