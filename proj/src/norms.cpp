#include "norms.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "fft.hpp"
#include "parallel.hpp"

namespace klab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double bracket(double a) { return std::sqrt(1.0 + a * a); }
double norm3(const Vec3& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

PhaseField eta_view(const PhaseField& f) {
  return f.tag == Tag::Spectral_eta_v ? f : to_tag(f, Tag::Spectral_eta_v);
}
PhaseField phys_view(const PhaseField& f) { return f.tag == Tag::Physical_xv ? f : to_tag(f, Tag::Physical_xv); }

double smooth_step(double u) {  // 0 at u<=0, 1 at u>=1
  if (u <= 0) return 0;
  if (u >= 1) return 1;
  double a = std::exp(-1.0 / u), b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

double weighted_l2(const PhaseField& f, double s, double r, bool homogeneous) {
  PhaseField h = eta_view(f);
  const GridSpec& g = h.grid;
  const std::size_t nxt = g.nx_total();
  std::vector<double> wx(nxt);
  for (std::size_t i = 0; i < nxt; ++i) {
    double e = norm3(g.eta_point(i));
    wx[i] = homogeneous ? std::pow(e, 2 * s) : std::pow(bracket(e), 2 * s);
  }
  double sum = ordered_sum<double>(h.nvt(), [&](std::size_t iv) {
    double vv = norm3(g.v_point(iv));
    double wv = homogeneous ? std::pow(vv, 2 * r) : std::pow(bracket(vv), 2 * r);
    const cplx* d = h.slice(iv);
    double acc = 0;
    for (std::size_t i = 0; i < nxt; ++i) acc += wx[i] * std::norm(d[i]);
    return acc * wv;
  });
  return std::sqrt(sum * h.cell_volume());
}

double lq(const double* vals, std::size_t n, double q, double cell) {
  if (q >= kInf) return n ? *std::max_element(vals, vals + n) : 0.0;
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += std::pow(vals[i], q);
  return std::pow(s * cell, 1.0 / q);
}

// |grad_x f| on one v-slice, written into out (length nxt).
void grad_magnitude(const GridSpec& g, const cplx* slice, double* out) {
  const std::size_t nxt = g.nx_total();
  std::vector<cplx> spec(slice, slice + nxt), comp(nxt);
  dft3_batch(spec.data(), g.nx, 1, 1, nxt, -1);
  std::fill(out, out + nxt, 0.0);
  for (int a = 0; a < 3; ++a) {
    if (g.nx[a] == 1) continue;
    for (std::size_t i = 0; i < nxt; ++i) {
      Idx3 k = g.x_index(i);
      double e = (2 * k[a] == g.nx[a]) ? 0.0 : g.eta(a, k[a]);
      comp[i] = spec[i] * cplx(0, e) / double(nxt);
    }
    dft3_batch(comp.data(), g.nx, 1, 1, nxt, +1);
    for (std::size_t i = 0; i < nxt; ++i) out[i] += std::norm(comp[i]);
  }
  for (std::size_t i = 0; i < nxt; ++i) out[i] = std::sqrt(out[i]);
}

double mixed_impl(const PhaseField& f, const MixedSpec& sp, bool grad) {
  PhaseField h = phys_view(f);
  const GridSpec& g = h.grid;
  const std::size_t nxt = g.nx_total();
  const double dx = g.dx3(), dv = g.dv3();
  std::vector<double> inner(h.nvt());
  parallel_for(h.nvt(), [&](std::size_t iv) {
    std::vector<double> mag(nxt);
    if (grad) {
      grad_magnitude(g, h.slice(iv), mag.data());
    } else {
      const cplx* d = h.slice(iv);
      for (std::size_t i = 0; i < nxt; ++i) mag[i] = std::abs(d[i]);
    }
    double w = sp.rv == 0 ? 1.0 : std::pow(bracket(norm3(g.v_point(iv))), sp.rv);
    inner[iv] = w * lq(mag.data(), nxt, sp.qx, dx);
  });
  return lq(inner.data(), inner.size(), sp.pv, dv);
}

}  // namespace

double sobolev_norm(const PhaseField& f, double s, double r) { return weighted_l2(f, s, r, false); }
double homogeneous_norm(const PhaseField& f, double s, double r) { return weighted_l2(f, s, r, true); }

MixedSpec parse_mixed(const std::string& spec) {
  // Accepts e.g. "Lv^1Lx^inf", "L_v^{2,1} L_x^2", "L^1_vL^inf_x".
  std::string s;
  for (char c : spec)
    if (c != ' ' && c != '_' && c != '{' && c != '}' && c != '^') s += c;
  static const std::regex vfirst(R"(^L(?:v([0-9.]+|inf)(?:,([0-9.]+))?|([0-9.]+|inf)(?:,([0-9.]+))?v)L(?:x([0-9.]+|inf)|([0-9.]+|inf)x)$)");
  static const std::regex xfirst(R"(^L(?:x[0-9.inf]+|[0-9.inf]+x)L.*v.*$)");
  std::smatch m;
  if (std::regex_match(s, m, vfirst)) {
    auto num = [](const std::string& t) { return t == "inf" ? kInf : std::stod(t); };
    MixedSpec out;
    out.pv = num(m[1].matched ? m[1].str() : m[3].str());
    std::string r = m[2].matched ? m[2].str() : (m[4].matched ? m[4].str() : "");
    out.rv = r.empty() ? 0.0 : std::stod(r);
    out.qx = num(m[5].matched ? m[5].str() : m[6].str());
    require(out.pv >= 1 && out.qx >= 1, ErrorCode::InvalidArgument, "Lebesgue exponents must be >= 1");
    return out;
  }
  if (std::regex_match(s, xfirst)) fail(ErrorCode::InvalidArgument, "unsupported order (x outer): " + spec);
  fail(ErrorCode::InvalidArgument, "unsupported mixed norm spec: " + spec);
}

double mixed_norm(const PhaseField& f, const MixedSpec& spec) { return mixed_impl(f, spec, false); }
double mixed_norm(const PhaseField& f, const std::string& spec) { return mixed_impl(f, parse_mixed(spec), false); }
double mixed_norm_grad(const PhaseField& f, const MixedSpec& spec) { return mixed_impl(f, spec, true); }

ZParts z_parts(const PhaseField& f) {
  ZParts z;
  MixedSpec l2{2, 1, 2}, l1inf{1, 0, kInf};
  z.l2 = mixed_norm(f, l2);
  z.grad_l2 = mixed_norm_grad(f, l2);
  z.l1inf = mixed_norm(f, l1inf);
  z.grad_l1inf = mixed_norm_grad(f, l1inf);
  return z;
}

double z_norm(const PhaseField& f, double M) {
  require(M >= 1, ErrorCode::InvalidArgument, "Z norm needs M >= 1");
  return z_parts(f).total(M);
}

// ------------------------------------------------------------ Littlewood-Paley

double lp_bump(double r) {
  if (r <= 1) return 1;
  if (r >= std::sqrt(2.0)) return 0;
  return 1.0 - smooth_step(2.0 * std::log2(r));
}

double cutoff_theta(double t) {
  double a = std::abs(t);
  if (a <= 1) return 1;
  if (a >= 2) return 0;
  return 1.0 - smooth_step(a - 1.0);
}

std::vector<double> lp_dyads(const GridSpec& g, LpAxis axis) {
  double kmax = 0;
  for (int a = 0; a < 3; ++a) {
    int n = axis == LpAxis::X ? g.nx[a] : g.nv[a];
    double d = axis == LpAxis::X ? g.deta(a) : g.dxi(a);
    double m = (n / 2) * d;
    kmax += m * m;
  }
  kmax = std::sqrt(kmax);
  std::vector<double> out{1.0};
  for (double N = 2; out.back() < kmax; N *= 2) out.push_back(N);
  return out;
}

PhaseField lp_project(const PhaseField& f, LpAxis axis, double N) {
  std::vector<double> dy = lp_dyads(f.grid, axis);
  bool ok = std::find(dy.begin(), dy.end(), N) != dy.end();
  require(ok, ErrorCode::InvalidArgument, "dyad outside resolved range");
  Tag orig = f.tag;
  Tag work = axis == LpAxis::X ? make_tag(true, v_spectral(orig)) : make_tag(x_spectral(orig), true);
  PhaseField h = to_tag(f, work);
  const GridSpec& g = h.grid;
  auto mult = [&](double k) { return N == 1 ? lp_bump(k) : lp_bump(k / N) - lp_bump(2 * k / N); };
  const std::size_t nxt = g.nx_total();
  parallel_for(h.nvt(), [&](std::size_t iv) {
    cplx* d = h.slice(iv);
    if (axis == LpAxis::Xi) {
      double m = mult(norm3(g.xi_point(iv)));
      for (std::size_t i = 0; i < nxt; ++i) d[i] *= m;
    } else {
      for (std::size_t i = 0; i < nxt; ++i) d[i] *= mult(norm3(g.eta_point(i)));
    }
  });
  return to_tag(h, orig);
}

// -------------------------------------------------------------- space-time

namespace {

std::vector<double> trapezoid_weights(const std::vector<double>& t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    double h = 0.5 * (t[i + 1] - t[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

double lq_time(const std::vector<double>& vals, const std::vector<double>& times, double q) {
  if (q >= kInf) return *std::max_element(vals.begin(), vals.end());
  std::vector<double> w = trapezoid_weights(times);
  double s = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) s += w[i] * std::pow(vals[i], q);
  return std::pow(s, 1.0 / q);
}

double snapshot_lp(const PhaseField& f, double p, double r) {
  PhaseField h = to_tag(f, Tag::Spectral_x_xi);
  const GridSpec& g = h.grid;
  const std::size_t nxt = g.nx_total(), nvt = g.nv_total();
  const double dx = g.dx3(), dxi = g.dxi3();
  // inner over xi at each x, then outer over x
  std::vector<double> inner(nxt);
  parallel_for(nxt, [&](std::size_t i) {
    if (r >= kInf) {
      double m = 0;
      for (std::size_t j = 0; j < nvt; ++j) m = std::max(m, std::abs(h.at(i, j)));
      inner[i] = m;
    } else {
      double s = 0;
      for (std::size_t j = 0; j < nvt; ++j) s += std::pow(std::abs(h.at(i, j)), r);
      inner[i] = std::pow(s * dxi, 1.0 / r);
    }
  });
  return lq(inner.data(), nxt, p, dx);
}

}  // namespace

double spacetime_norm(const Trajectory& traj, double q, double p) { return spacetime_mixed_norm(traj, q, p, p); }

double spacetime_mixed_norm(const Trajectory& traj, double q, double p, double r) {
  require(traj.size() >= 1, ErrorCode::InvalidArgument, "empty trajectory");
  std::vector<double> vals(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) vals[k] = snapshot_lp(traj.fields[k], p, r);
  if (traj.size() == 1 && q < kInf) return 0.0;
  return lq_time(vals, traj.times, q);
}

double xsb_norm(const Trajectory& traj, double s, double b, double T) {
  const std::size_t K = traj.size();
  require(K >= 4, ErrorCode::InvalidArgument, "window too short for cutoff");
  const double t0 = traj.times.front(), t1 = traj.times.back();
  const double dt = (t1 - t0) / double(K - 1);
  for (std::size_t k = 1; k < K; ++k)
    require(std::abs(traj.times[k] - traj.times[k - 1] - dt) < 1e-9 * std::max(1.0, std::abs(dt)),
            ErrorCode::InvalidArgument, "xsb_norm needs uniform time sampling");
  require(T > 0 && 2.0 * T <= 0.5 * (t1 - t0) + 1e-12, ErrorCode::InvalidArgument, "window too short for cutoff");
  const double tc = 0.5 * (t0 + t1);

  std::vector<PhaseField> views(K);
  for (std::size_t k = 0; k < K; ++k) {
    views[k] = eta_view(traj.fields[k]);
    double th = cutoff_theta((traj.times[k] - tc) / T);
    for (cplx& z : views[k].data) z *= th;
  }
  const GridSpec& g = views[0].grid;
  const std::size_t nxt = g.nx_total(), nvt = g.nv_total();
  const double dtau = 2 * kPi / (K * dt);
  const double norm = dt / std::sqrt(2 * kPi);
  std::vector<double> wx(nxt);
  for (std::size_t i = 0; i < nxt; ++i) wx[i] = std::pow(bracket(norm3(g.eta_point(i))), 2 * s);

  double sum = ordered_sum<double>(nvt, [&](std::size_t iv) {
    Vec3 v = g.v_point(iv);
    double wv = std::pow(bracket(norm3(v)), 2 * s);
    std::vector<cplx> buf(nxt * K);
    for (std::size_t i = 0; i < nxt; ++i)
      for (std::size_t k = 0; k < K; ++k) buf[i * K + k] = views[k].at(i, iv);
    dft3_batch(buf.data(), {int(K), 1, 1}, nxt, 1, K, -1);
    double acc = 0;
    for (std::size_t i = 0; i < nxt; ++i) {
      Vec3 e = g.eta_point(i);
      double ev = e[0] * v[0] + e[1] * v[1] + e[2] * v[2];
      double row = 0;
      for (std::size_t m = 0; m < K; ++m) {
        double tau = GridSpec::signed_mode(int(m), int(K)) * dtau;
        double wt = b == 0 ? 1.0 : std::pow(bracket(tau + ev), 2 * b);
        row += wt * std::norm(buf[i * K + m] * norm);
      }
      acc += wx[i] * row;
    }
    return acc * wv;
  });
  return std::sqrt(sum * dtau * g.deta3() * g.dv3());
}

}  // namespace klab
