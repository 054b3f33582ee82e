#include "solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <json.hpp>

namespace klab {

namespace fs = std::filesystem;

void validate(const SolverConfig& c) {
  require(c.dt > 0 && std::isfinite(c.dt), ErrorCode::InvalidArgument, "dt must be positive");
  require(c.picard_iters >= 1, ErrorCode::InvalidArgument, "picard_iters must be >= 1");
  require(c.picard_tol >= 0, ErrorCode::InvalidArgument, "picard_tol must be >= 0");
  require(c.checkpoint_every >= 0, ErrorCode::InvalidArgument, "checkpoint_every must be >= 0");
  require(c.checkpoint_every == 0 || !c.checkpoint_dir.empty(), ErrorCode::InvalidArgument,
          "checkpointing needs a directory");
  for (std::size_t i = 1; i < c.partition.size(); ++i)
    require(c.partition[i] < c.partition[i - 1], ErrorCode::InvalidArgument, "partition must be strictly decreasing");
  c.collision.validate();
}

double StepStats::max_ratio() const {
  double r = 0;
  for (std::size_t k = 1; k < distances.size(); ++k)
    if (distances[k - 1] > 0) r = std::max(r, distances[k] / distances[k - 1]);
  return r;
}

namespace {

// Two-stage Gauss collocation in the interaction picture h = S(-s) f.
const double kSq3 = std::sqrt(3.0);
const double kC[2] = {0.5 - kSq3 / 6, 0.5 + kSq3 / 6};
const double kA[2][2] = {{0.25, 0.25 - kSq3 / 6}, {0.25 + kSq3 / 6, 0.25}};

PhaseField phys(const PhaseField& f) { return f.tag == Tag::Physical_xv ? f : to_tag(f, Tag::Physical_xv); }

}  // namespace

PhaseField duhamel_step_forced(const PhaseField& f0, double t, double dt, const Forcing& rhs, const SolverConfig& cfg,
                               StepStats* stats) {
  PhaseField f = phys(f0);
  if (stats) *stats = StepStats{};
  if (dt == 0) return f;

  PhaseField base[2], stage[2], R[2];
  for (int i = 0; i < 2; ++i) base[i] = free_transport(f, kC[i] * dt);
  for (int i = 0; i < 2; ++i) stage[i] = base[i];

  double prev = -1;
  int growth = 0;
  for (int it = 0; it < cfg.picard_iters; ++it) {
    for (int j = 0; j < 2; ++j) R[j] = phys(rhs(t + kC[j] * dt, stage[j]));
    double dist = 0, step = 0;
    for (int i = 0; i < 2; ++i) {
      PhaseField next = base[i];
      for (int j = 0; j < 2; ++j)
        next = axpy(dt * kA[i][j], free_transport(R[j], (kC[i] - kC[j]) * dt), next);
      // convergence: relative to the larger iterate (zero stays zero);
      // divergence: the absolute step, which keeps growing when the relative one saturates
      double d = l2_distance(next, stage[i]);
      double scale = std::max(l2_norm(next), l2_norm(stage[i]));
      if (scale > 0) dist = std::max(dist, d / scale);
      step = std::max(step, d);
      stage[i] = std::move(next);
    }
    if (!std::isfinite(dist) || !std::isfinite(step))
      fail(ErrorCode::StepTooLarge, "step too large: non-finite Picard iterate");
    if (stats) {
      stats->iterations = it + 1;
      stats->distances.push_back(dist);
    }
    if (prev >= 0 && step > prev) {
      if (++growth >= 3) {
        std::ostringstream m;
        m << "step too large: Picard residual grew 3 times in a row (dt " << dt << ", residual " << dist << ")";
        fail(ErrorCode::StepTooLarge, m.str());
      }
    } else {
      growth = 0;
    }
    prev = step;
    if (dist <= cfg.picard_tol) break;
  }
  for (int j = 0; j < 2; ++j) R[j] = phys(rhs(t + kC[j] * dt, stage[j]));

  PhaseField out = free_transport(f, dt);
  for (int j = 0; j < 2; ++j) out = axpy(0.5 * dt, free_transport(R[j], (1 - kC[j]) * dt), out);
  return out;
}

PhaseField duhamel_step(const PhaseField& f, double dt, const SolverConfig& cfg, StepStats* stats) {
  if (!cfg.collisions) {
    if (stats) *stats = StepStats{};
    return free_transport(phys(f), dt);
  }
  require(f.grid.storage == Storage::Full, ErrorCode::StorageMode, "gain term needs Full storage");
  Forcing q = [&](double, const PhaseField& g) { return collision(g, g, cfg.collision); };
  return duhamel_step_forced(f, 0.0, dt, q, cfg, stats);
}

// ------------------------------------------------------------------ evolve

namespace {

std::string snap_name(const std::string& dir, long step, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snap_%08ld.%s", step, ext);
  return (fs::path(dir) / buf).string();
}

void write_checkpoint(const SolverConfig& cfg, long step, double t, double t_start, double dt, const PhaseField& f) {
  fs::create_directories(cfg.checkpoint_dir);
  write_klb1(snap_name(cfg.checkpoint_dir, step, "klb"), f);
  nlohmann::json j;
  j["time"] = t;
  j["step"] = step;
  j["t_start"] = t_start;
  j["dt"] = dt;
  j["l2"] = l2_norm(f);
  j["mass"] = moments(f).mass;
  std::ofstream os(snap_name(cfg.checkpoint_dir, step, "json"));
  require(bool(os), ErrorCode::Io, "cannot write checkpoint sidecar in " + cfg.checkpoint_dir);
  os << j.dump(2) << "\n";
}

EvolveResult run_steps(PhaseField f, double t_start, double dt, long first, long nsteps, const SolverConfig& cfg) {
  EvolveResult res;
  f = phys(f);
  double m0 = moments(f).mass;
  res.trajectory.append(t_start + first * dt, f);
  res.trajectory.uniform_dt = dt;
  if (cfg.checkpoint_every > 0 && first == 0) write_checkpoint(cfg, 0, t_start, t_start, dt, f);
  for (long k = first; k < nsteps; ++k) {
    double t = t_start + k * dt;
    StepStats st;
    try {
      f = duhamel_step(f, dt, cfg, &st);
    } catch (const Error& e) {
      std::ostringstream m;
      m << "at t = " << t << ": " << e.what();
      throw Error(e.code(), m.str());
    }
    double tn = t_start + (k + 1) * dt;
    res.steps.push_back(st);
    res.trajectory.append(tn, f);
    if (m0 != 0) res.mass_drift = std::max(res.mass_drift, std::abs(moments(f).mass - m0) / std::abs(m0));
    if (cfg.checkpoint_every > 0 && (k + 1) % cfg.checkpoint_every == 0) write_checkpoint(cfg, k + 1, tn, t_start, dt, f);
  }
  return res;
}

}  // namespace

EvolveResult evolve(const PhaseField& f0, double t_end, const SolverConfig& cfg, double t_start) {
  validate(cfg);
  require(t_end >= t_start, ErrorCode::InvalidArgument, "evolve runs forward; backward solves go through solve_correction");
  double span = t_end - t_start;
  long n = span == 0 ? 0 : std::max(1L, long(std::ceil(std::abs(span) / cfg.dt - 1e-9)));
  double dt = n == 0 ? cfg.dt : span / n;
  return run_steps(f0, t_start, dt, 0, n, cfg);
}

EvolveResult evolve_resume(double t_end, const SolverConfig& cfg) {
  validate(cfg);
  require(fs::is_directory(cfg.checkpoint_dir), ErrorCode::Io, "no checkpoint directory " + cfg.checkpoint_dir);
  std::string best;
  for (const auto& e : fs::directory_iterator(cfg.checkpoint_dir)) {
    std::string n = e.path().filename().string();
    if (n.rfind("snap_", 0) == 0 && e.path().extension() == ".json" && n > best) best = n;
  }
  require(!best.empty(), ErrorCode::Io, "no checkpoint in " + cfg.checkpoint_dir);
  std::ifstream is(fs::path(cfg.checkpoint_dir) / best);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const std::exception& ex) {
    fail(ErrorCode::Format, "bad checkpoint sidecar " + best + ": " + ex.what());
  }
  long step = j.at("step").get<long>();
  double t_start = j.at("t_start").get<double>(), dt = j.at("dt").get<double>();
  PhaseField f = read_klb1(snap_name(cfg.checkpoint_dir, step, "klb"));
  long n = std::lround((t_end - t_start) / dt);
  require(n >= step, ErrorCode::InvalidArgument, "t_end lies before the newest checkpoint");
  return run_steps(f, t_start, dt, step, n, cfg);
}

// -------------------------------------------------------------- correction

std::vector<double> correction_partition(const AnsatzParams& p) {
  double h = p.delta * std::pow(p.M() * p.N2(), p.s() - 1);
  std::vector<double> T{0.0};
  while (T.back() - h > p.t_star + 1e-12 * h) T.push_back(T.back() - h);
  T.push_back(p.t_star);
  return T;
}

CorrectionResult solve_correction(const AnsatzParams& p, const GridSpec& g, const SolverConfig& cfg,
                                  const CorrectionOptions& opt) {
  validate(cfg);
  check_ansatz_resolution(p, g);
  require(g.storage == Storage::Full, ErrorCode::StorageMode, "correction solve needs Full storage");
  require(opt.substeps >= 1, ErrorCode::InvalidArgument, "substeps must be >= 1");
  std::vector<double> T = cfg.partition.empty() ? correction_partition(p) : cfg.partition;
  require(!T.empty() && T.front() == 0, ErrorCode::InvalidArgument, "partition must start at 0");
  require(T.back() >= p.t_star - 1e-12, ErrorCode::InvalidArgument, "partition leaves [t_star, 0]");
  if (opt.stop_time < 0) {
    require(opt.stop_time >= p.t_star, ErrorCode::InvalidArgument, "stop_time before t_star");
    while (T.size() > 1 && T[T.size() - 2] <= opt.stop_time) T.pop_back();
    T.back() = opt.stop_time;
  }

  // The frozen pieces depend on t only; the Picard loop revisits the same stage times.
  // rho_b enters through its closed form, so a grid that holds only the cavity
  // window still sees the tubes' density in Q-(f_c, f_b).
  const double kq = opt.kernel_scale;
  struct Frozen {
    PhaseField fr, fb, err, q_rr;
    std::vector<double> rho_b;
    bool tubes_on_grid = false;
  };
  std::map<double, Frozen> cache;
  auto frozen = [&](double t) -> const Frozen& {
    auto it = cache.find(t);
    if (it != cache.end()) return it->second;
    if (cache.size() > 8) cache.clear();
    Frozen z;
    z.fr = f_r_to_grid(p, t, g);
    z.fb = f_b_to_grid(p, t, g);
    z.tubes_on_grid = l2_norm(z.fb) > 0;
    z.rho_b.resize(g.nx_total());
    for (std::size_t ix = 0; ix < g.nx_total(); ++ix) z.rho_b[ix] = rho_b_eval(p, t, g.x_point(ix));
    z.err = PhaseField(g);
    if (!opt.zero_forcing) {
      auto terms = f_err_terms(p, t, g, cfg.collision);
      // first term is v.grad f_r, the rest are collision terms
      for (std::size_t k = 0; k < terms.size(); ++k)
        z.err = axpy(k == 0 ? 1.0 : kq, phys(terms[k].second), z.err);
    }
    if (cfg.collisions) z.q_rr = phys(collision(z.fr, z.fr, cfg.collision));
    return cache.emplace(t, std::move(z)).first->second;
  };
  constexpr double k4Pi = 4 * 3.14159265358979323846;
  Forcing G = [&](double t, const PhaseField& fc) {
    const Frozen& z = frozen(t);
    PhaseField r = scaled(z.err, -1.0);
    if (!cfg.collisions) return r;
    // Q(f_c, f_r) + Q(f_r, f_c) + Q(f_c, f_c) = Q(f_c + f_r, f_c + f_r) - Q(f_r, f_r):
    // one collision evaluation per stage instead of three.
    PhaseField sum = axpy(1.0, fc, z.fr);
    r = axpy(kq, phys(collision(sum, sum, cfg.collision)), r);
    r = axpy(-kq, z.q_rr, r);
    // tube parts: Q-(f_c, f_b) from the closed-form density
    const std::size_t nxt = g.nx_total();
    for (std::size_t iv = 0; iv < g.nv_total(); ++iv)
      for (std::size_t ix = 0; ix < nxt; ++ix) r.at(ix, iv) -= kq * k4Pi * z.rho_b[ix] * fc.at(ix, iv);
    if (z.tubes_on_grid) {
      r = axpy(kq, phys(gain_term_spectral(fc, z.fb, cfg.collision)), r);
      r = axpy(kq, phys(gain_term_spectral(z.fb, fc, cfg.collision)), r);
      r = axpy(-kq, phys(loss_term(z.fb, fc)), r);
    }
    return r;
  };

  CorrectionResult res;
  double Mdel = std::pow(p.M(), -p.delta);
  PhaseField fc(g);
  std::vector<PhaseField> fields;
  auto record = [&](double t) {
    double zc = z_norm(fc, p.M()), za = fa_z_parts(p, t).total(p.M());
    res.times.push_back(t);
    fields.push_back(fc);
    if (!res.z_fc.empty()) res.recursion.push_back((zc - 2 * res.z_fc.back()) / Mdel);
    res.z_fc.push_back(zc);
    res.z_fa.push_back(za);
    if (zc > za) {
      std::ostringstream m;
      m << "correction left the perturbative regime at t = " << t << "; |f_c|_Z history:";
      for (std::size_t i = 0; i < res.z_fc.size(); ++i) m << " " << res.times[i] << ":" << res.z_fc[i];
      m << " (|f_a|_Z = " << za << ")";
      fail(ErrorCode::Regime, m.str());
    }
  };
  record(T[0]);
  for (std::size_t j = 0; j + 1 < T.size(); ++j) {
    int ns = int(std::ceil(opt.substeps));
    double h = (T[j + 1] - T[j]) / ns;
    for (int k = 0; k < ns; ++k) {
      double t = T[j] + k * h;
      try {
        fc = duhamel_step_forced(fc, t, h, G, cfg);
      } catch (const Error& e) {
        std::ostringstream m;
        m << "at t = " << t << ": " << e.what();
        throw Error(e.code(), m.str());
      }
    }
    record(T[j + 1]);
  }
  for (std::size_t i = fields.size(); i-- > 0;) res.trajectory.append(res.times[i], std::move(fields[i]));
  return res;
}

// -------------------------------------------------------------------- twin

double twin_time(const AnsatzParams& p) {
  auto norm = [&](double t) { return fa_sobolev_norm(p, t, p.s0).cavity; };
  double lo = p.t_star, hi = 0;
  double nlo = norm(lo), nhi = norm(hi);
  if ((nlo - 1) * (nhi - 1) > 0) {
    std::ostringstream m;
    m << "no t0 with |f_r(t0)| = 1 on [t_star, 0]: norm is " << nhi << " at 0 and " << nlo << " at t_star";
    fail(ErrorCode::Regime, m.str());
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-3 * std::abs(p.t_star); ++it) {
    double mid = 0.5 * (lo + hi), nm = norm(mid);
    if ((nm - 1) * (nlo - 1) <= 0) {
      hi = mid;
    } else {
      lo = mid;
      nlo = nm;
    }
  }
  return 0.5 * (lo + hi);
}

TwinReport twin_distances(const PhaseField& a, const PhaseField& b, double t0, double q, const SolverConfig& cfg) {
  check_same_grid(phys(a), phys(b));
  SolverConfig c = cfg;
  c.checkpoint_every = 0;
  TwinReport r;
  r.t0 = t0;
  r.d_t0 = sobolev_norm(axpy(-1.0, phys(b), phys(a)), q, q);
  PhaseField fa = evolve(a, 0.0, c, t0).trajectory.fields.back();
  PhaseField fb = evolve(b, 0.0, c, t0).trajectory.fields.back();
  r.d_0 = sobolev_norm(axpy(-1.0, fb, fa), q, q);
  return r;
}

TwinReport twin_experiment(const AnsatzParams& p, const GridSpec& g, const SolverConfig& cfg) {
  check_ansatz_resolution(p, g);
  double t0 = twin_time(p);
  CorrectionOptions opt;
  opt.stop_time = t0;
  CorrectionResult corr = solve_correction(p, g, cfg, opt);
  PhaseField fex = axpy(1.0, corr.trajectory.fields.front(), f_a_to_grid(p, t0, g));
  PhaseField gex = f_r_to_grid(p, t0, g);
  return twin_distances(fex, gex, t0, p.s0, cfg);
}

// ------------------------------------------------------------------ Z probe

double z_ratio(const PhaseField& q, const PhaseField& f1, const PhaseField& f2, double M) {
  double a = z_norm(f1, M), b = z_norm(f2, M);
  if (a == 0 || b == 0) return 0;
  return z_norm(q, M) / (a * b);
}

ZProbeReport z_bilinear_probe(int corpus, const GridSpec& g, const CollisionConfig& cfg, double M, unsigned seed) {
  require(corpus >= 1, ErrorCode::InvalidArgument, "corpus must be >= 1");
  require(g.storage == Storage::Full, ErrorCode::StorageMode, "probe needs Full storage");
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> U(0, 1);
  auto draw = [&]() {
    // Isotropic Gaussian or a tube: narrow across a random axis direction, long along it.
    bool tube = U(rng) < 0.5;
    double z = 2 * U(rng) - 1, ph = 2 * 3.14159265358979323846 * U(rng), sz = std::sqrt(1 - z * z);
    Vec3 e{sz * std::cos(ph), sz * std::sin(ph), z};
    Vec3 xc, vc;
    for (int a = 0; a < 3; ++a) {
      xc[a] = (U(rng) - 0.5) * 0.3 * g.Lx;
      vc[a] = (U(rng) - 0.5) * 0.3 * g.Lv;
    }
    // widths stay near a quarter of the box so the coarse grid resolves them
    double wx = (0.2 + 0.07 * U(rng)) * g.Lx, wv = (0.2 + 0.07 * U(rng)) * g.Lv;
    double amp = 0.5 + U(rng);
    return sample(g, [&](const Vec3& x, const Vec3& v) {
      double xx = 0, vv = 0, xe = 0;
      for (int a = 0; a < 3; ++a) {
        xx += (x[a] - xc[a]) * (x[a] - xc[a]);
        vv += (v[a] - vc[a]) * (v[a] - vc[a]);
        xe += (x[a] - xc[a]) * e[a];
      }
      double ax = tube ? (xx - xe * xe) / (0.49 * wx * wx) + xe * xe / (2.25 * wx * wx) : xx / (wx * wx);
      return cplx(amp * std::exp(-0.5 * ax - 0.5 * vv / (wv * wv)), 0);
    });
  };
  ZProbeReport r;
  for (int k = 0; k < corpus; ++k) {
    PhaseField f1 = draw(), f2 = draw();
    double gr = z_ratio(phys(gain_term_spectral(f1, f2, cfg)), f1, f2, M);
    double lr = z_ratio(phys(loss_term(f1, f2)), f1, f2, M);
    r.gain_ratios.push_back(gr);
    r.loss_ratios.push_back(lr);
    r.max_gain = std::max(r.max_gain, gr);
    r.max_loss = std::max(r.max_loss, lr);
  }
  return r;
}

}  // namespace klab
