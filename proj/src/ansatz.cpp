#include "ansatz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>

#include "bump.hpp"
#include "parallel.hpp"
#include "quad.hpp"

namespace klab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

void lagrange4(double s, double w[4]) {
  w[0] = -(s - 1) * (s - 2) * (s - 3) / 6;
  w[1] = s * (s - 2) * (s - 3) / 2;
  w[2] = -s * (s - 1) * (s - 3) / 2;
  w[3] = s * (s - 1) * (s - 2) / 6;
}

// Table on [0, xmax] x [0, ymax], even in both arguments; cubic Lagrange.
struct EvenTable {
  double dx = 0, dy = 0;
  int nx = 0, ny = 0;
  std::vector<double> v;

  double at(int i, int j) const { return v[std::size_t(std::abs(i)) * ny + std::abs(j)]; }

  double operator()(double x, double y) const {
    x = std::abs(x);
    y = std::abs(y);
    if (x >= dx * (nx - 1)) return 0.0;
    double u = x / dx, t = y / dy;
    int i = std::min(int(std::floor(u)) - 1, nx - 4);
    int j = std::min(int(std::floor(t)) - 1, ny - 4);
    double wu[4], wt[4];
    lagrange4(u - i, wu);
    lagrange4(t - j, wt);
    double s = 0;
    for (int a = 0; a < 4; ++a) {
      double r = 0;
      for (int b = 0; b < 4; ++b) r += wt[b] * at(i + a, j + b);
      s += wu[a] * r;
    }
    return s;
  }
};

// C2(r, tau) = int d^2y chi(|r e - tau y|) chi(|y|)
double c2_direct(double r, double tau) {
  static std::vector<double> x, w;
  static std::once_flag once;
  std::call_once(once, [] {
    std::vector<double> x0, w0;
    gauss_legendre(8, 0, 1, x0, w0);
    for (int p = 0; p < 6; ++p)
      for (int i = 0; i < 8; ++i) {
        x.push_back((p + x0[i]) / 6);
        w.push_back(w0[i] / 6);
      }
  });
  if (tau == 0) return bump(r) * 2 * kPi * BumpProfile::moment(1);
  const int nphi = 32;  // half circle, trapezoid on the even integrand
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double rho = x[i], inner = 0;
    for (int k = 0; k <= nphi; ++k) {
      double phi = kPi * k / nphi;
      double a = r - tau * rho * std::cos(phi), b = tau * rho * std::sin(phi);
      double c = (k == 0 || k == nphi) ? 1.0 : 2.0;
      inner += c * bump(std::sqrt(a * a + b * b));
    }
    s += w[i] * rho * bump(rho) * inner * (kPi / nphi);
  }
  return s;
}

// C1(a, tau) = int_{-1}^{1} chi(|a - tau w|) chi(|w|) dw
double c1_direct(double a, double tau) {
  static std::vector<double> x, w;
  static std::once_flag once;
  std::call_once(once, [] {
    std::vector<double> x0, w0;
    gauss_legendre(8, 0, 1, x0, w0);
    for (int p = 0; p < 16; ++p)
      for (int i = 0; i < 8; ++i) {
        x.push_back(-1 + 2 * (p + x0[i]) / 16);
        w.push_back(2 * w0[i] / 16);
      }
  });
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * bump(a - tau * x[i]) * bump(x[i]);
  return s;
}

const double kTauMax2 = 0.26, kTauMax1 = 0.026;

const EvenTable& c2_table() {
  static EvenTable t = [] {
    EvenTable e;
    e.dx = 0.005;
    e.nx = 261;
    e.dy = 0.005;
    e.ny = 53;
    e.v.resize(std::size_t(e.nx) * e.ny);
    parallel_for(std::size_t(e.nx), [&](std::size_t i) {
      for (int j = 0; j < e.ny; ++j) e.v[i * e.ny + j] = c2_direct(i * e.dx, j * e.dy);
    });
    return e;
  }();
  return t;
}

const EvenTable& c1_table() {
  static EvenTable t = [] {
    EvenTable e;
    e.dx = 0.0025;
    e.nx = 425;
    e.dy = 0.001;
    e.ny = 27;
    e.v.resize(std::size_t(e.nx) * e.ny);
    parallel_for(std::size_t(e.nx), [&](std::size_t i) {
      for (int j = 0; j < e.ny; ++j) e.v[i * e.ny + j] = c1_direct(i * e.dx, j * e.dy);
    });
    return e;
  }();
  return t;
}

void check_time(double t) {
  require(std::abs(t) <= 0.25 + 1e-12, ErrorCode::InvalidArgument, "need |t| <= 1/4");
}

// Largest angle between x and a tube axis for which the tube can still reach x.
double reach_angle(double rperp_max, double rx) {
  if (rx <= rperp_max) return kPi;
  return std::asin(rperp_max / rx);
}

std::vector<double> gl_nodes(int n, double a, double b, std::vector<double>& w) {
  std::vector<double> x;
  gauss_legendre(n, a, b, x, w);
  return x;
}

// Composite GL on [a, b] split into geometric panels [0,1],[1,2],[2,4],..
void spectral_nodes(double kmax, std::vector<double>& x, std::vector<double>& w) {
  x.clear();
  w.clear();
  std::vector<double> xs, ws;
  double lo = 0, hi = 0.5;
  while (lo < kmax) {
    hi = std::min(hi, kmax);
    gauss_legendre(16, lo, hi, xs, ws);
    x.insert(x.end(), xs.begin(), xs.end());
    w.insert(w.end(), ws.begin(), ws.end());
    lo = hi;
    hi *= 2;
  }
}
}  // namespace

// ------------------------------------------------------------ directions

std::vector<Vec3> sphere_grid(int J) {
  require(J >= 12, ErrorCode::InvalidArgument, "sphere_grid needs J >= 12");
  return SphereQuadrature::fibonacci(J).nodes;
}

double equal_area_spacing(int J) { return std::sqrt(4 * kPi / J); }

double min_pair_angle(const std::vector<Vec3>& d) {
  double best = -1;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = i + 1; j < d.size(); ++j) best = std::max(best, dot(d[i], d[j]));
  return std::acos(std::clamp(best, -1.0, 1.0));
}

DirectionIndex::DirectionIndex(const std::vector<Vec3>& dirs) {
  nt_ = std::max(1, int(std::sqrt(dirs.size() / 4.0)));
  np_ = 2 * nt_;
  cells_.assign(std::size_t(nt_) * np_, {});
  for (std::size_t j = 0; j < dirs.size(); ++j) {
    double th = std::acos(std::clamp(dirs[j][2], -1.0, 1.0));
    double ph = std::atan2(dirs[j][1], dirs[j][0]);
    if (ph < 0) ph += 2 * kPi;
    int it = std::min(nt_ - 1, int(th / (kPi / nt_)));
    int ip = std::min(np_ - 1, int(ph / (2 * kPi / np_)));
    cells_[cell(it, ip)].push_back(j);
  }
}

void DirectionIndex::near_axis(const Vec3& u, double a, const std::function<void(std::size_t)>& f) const {
  if (a >= kPi / 2 - 1e-12) {
    for (const auto& c : cells_)
      for (std::size_t j : c) f(j);
    return;
  }
  double n = norm(u);
  double th0 = std::acos(std::clamp(u[2] / n, -1.0, 1.0));
  double ph0 = std::atan2(u[1], u[0]);
  const double dth = kPi / nt_, dph = 2 * kPi / np_;
  std::vector<std::size_t> visit;
  for (int sign = 0; sign < 2; ++sign) {
    double th = sign ? kPi - th0 : th0;
    double ph = sign ? ph0 + kPi : ph0;
    int it0 = std::max(0, int(std::floor((th - a) / dth)));
    int it1 = std::min(nt_ - 1, int(std::floor((th + a) / dth)));
    bool pole = th - a <= 0 || th + a >= kPi;
    int ip0 = 0, ip1 = np_ - 1;
    if (!pole) {
      double w = std::asin(std::min(1.0, std::sin(a) / std::sin(th)));
      ip0 = int(std::floor((ph - w) / dph));
      ip1 = int(std::floor((ph + w) / dph));
      if (ip1 - ip0 + 1 >= np_) {
        ip0 = 0;
        ip1 = np_ - 1;
      }
    }
    for (int it = it0; it <= it1; ++it)
      for (int ip = ip0; ip <= ip1; ++ip) visit.push_back(cell(it, ((ip % np_) + np_) % np_));
  }
  // the two caps are disjoint but their cell covers may share cells
  std::sort(visit.begin(), visit.end());
  visit.erase(std::unique(visit.begin(), visit.end()), visit.end());
  for (std::size_t c : visit)
    for (std::size_t j : cells_[c]) f(j);
}

// ------------------------------------------------------------ parameters

TubeFamily TubeFamily::make(double M, double N2, double s, int J) {
  require(M >= 2, ErrorCode::InvalidArgument, "M must be >= 2");
  require(std::abs(std::log2(M) - std::round(std::log2(M))) < 1e-12, ErrorCode::InvalidArgument,
          "M must be dyadic");
  require(N2 > 1, ErrorCode::InvalidArgument, "N2 must be > 1");
  require(s > 0.5 && s < 1, ErrorCode::Regime, "s must lie in (1/2, 1)");
  double target = (M * N2) * (M * N2);
  if (J == 0) J = int(std::lround(target));
  require(J >= 0.5 * target && J <= 2 * target, ErrorCode::Regime, "J must lie in [(M N2)^2 / 2, 2 (M N2)^2]");
  TubeFamily t;
  t.M = M;
  t.N2 = N2;
  t.s = s;
  t.J = J;
  t.directions = sphere_grid(J);
  return t;
}

double s0_of(double M, double s) { return s - std::log(std::log(M)) / std::log(M); }

double t_star_of(double M, double N2, double s, double delta) {
  return -delta * std::pow(M * N2, s - 1) * std::log(M);
}

double default_kappa() { return 10.0 / (tube_perp_integral(0, 0) * tube_par_integral(0, 0)); }

AnsatzParams AnsatzParams::make(double M, double s, double delta, double mu, double N, int J) {
  require(delta > 0 && delta < 0.25, ErrorCode::Regime, "delta must lie in (0, 1/4)");
  require(delta <= 2 * (s - 0.5) + 1e-12, ErrorCode::Regime, "need delta <= 2 (s - 1/2)");
  require(mu >= delta, ErrorCode::Regime, "need mu >= delta");
  AnsatzParams p;
  double N2 = std::pow(M, mu);
  p.tube = TubeFamily::make(M, N2, s, J);
  p.N = N == 0 ? 1.0 / M : N;
  require(p.N > 0 && p.N <= 1.0 / M + 1e-12, ErrorCode::Regime, "need 0 < N <= 1/M");
  require(std::pow(N2, 1 - s) >= std::pow(M, delta) * (1 - 1e-12), ErrorCode::Regime, "need N2^{1-s} >= M^delta");
  p.delta = delta;
  p.mu = mu;
  p.s0 = s0_of(M, s);
  p.t_star = t_star_of(M, N2, s, delta);
  require(p.t_star >= -0.25, ErrorCode::Regime, "t_star outside [-1/4, 0]");
  p.kappa = default_kappa();
  p.index = std::make_shared<DirectionIndex>(p.tube.directions);
  return p;
}

double AnsatzParams::tube_amplitude() const {
  return kappa * std::pow(M(), 1 - s()) * std::pow(N2(), -2 - s());
}

double AnsatzParams::cavity_amplitude() const { return std::pow(M(), 1.5 - s()) * std::pow(N, -1.5); }

// ------------------------------------------------------------ pointwise

double tube_perp_integral(double r, double tau) {
  require(std::abs(tau) <= kTauMax2, ErrorCode::InvalidArgument, "tube_perp_integral: tau out of range");
  return c2_table()(r, tau);
}

double tube_par_integral(double a, double tau) {
  require(std::abs(tau) <= kTauMax1, ErrorCode::InvalidArgument, "tube_par_integral: tau out of range");
  return c1_table()(a, tau);
}

namespace {
bool in_v_support(const AnsatzParams& p, std::size_t j, const Vec3& v) {
  const Vec3& e = p.tube.directions[j];
  double ve = dot(v, e);
  double vperp = std::sqrt(std::max(0.0, dot(v, v) - ve * ve));
  return p.M() * vperp < 1 && std::abs(10 * (ve - p.N2()) / p.N2()) < 1;
}
}  // namespace

double tube_profile(const AnsatzParams& p, std::size_t j, double t, const Vec3& x, const Vec3& v) {
  const Vec3& e = p.tube.directions.at(j);
  const double M = p.M(), N2 = p.N2();
  Vec3 y{x[0] - v[0] * t, x[1] - v[1] * t, x[2] - v[2] * t};
  double ve = dot(v, e);
  double vperp = std::sqrt(std::max(0.0, dot(v, v) - ve * ve));
  double cv = bump(M * vperp) * bump(10 * (ve - N2) / N2);
  if (cv == 0) return 0;
  double ye = dot(y, e);
  double yperp = std::sqrt(std::max(0.0, dot(y, y) - ye * ye));
  return bump(M * yperp) * bump(ye / N2) * cv;
}

double f_b_eval(const AnsatzParams& p, double t, const Vec3& x, const Vec3& v) {
  const double M = p.M(), N2 = p.N2();
  double vn = norm(v);
  if (vn <= 0.9 * N2 || vn >= 1.1 * N2 + 1 / M) return 0;
  double s = 0;
  p.index->near_axis(v, reach_angle(1 / M, vn), [&](std::size_t j) {
    if (dot(v, p.tube.directions[j]) > 0) s += tube_profile(p, j, t, x, v);
  });
  return p.tube_amplitude() * s;
}

double rho_b_eval(const AnsatzParams& p, double t, const Vec3& x) {
  check_time(t);
  const double M = p.M(), N2 = p.N2(), at = std::abs(t);
  double xn2 = dot(x, x), xn = std::sqrt(xn2);
  double s = 0;
  p.index->near_axis(x, reach_angle((1 + at) / M, xn), [&](std::size_t j) {
    double xe = dot(x, p.tube.directions[j]);
    double r = M * std::sqrt(std::max(0.0, xn2 - xe * xe));
    if (r >= 1 + at) return;
    double c1 = c1_table()(xe / N2 - t, at / 10);
    if (c1 != 0) s += c2_table()(r, at) * c1;
  });
  return p.tube_amplitude() * N2 / (10 * M * M) * s;
}

double beta_eval(const AnsatzParams& p, double t, const Vec3& x, double rtol) {
  require(t <= 0 && t >= p.t_star - 1e-12, ErrorCode::InvalidArgument, "beta needs t in [t_star, 0]");
  if (t == 0) return 0;
  double scale = rho_b_eval(p, 0, {0, 0, 0}) * std::abs(t);
  QuadResult q = integrate_adaptive([&](double t0) { return rho_b_eval(p, t0, x); }, t, 0.0, rtol, 1e-14 * scale);
  return -q.value;
}

double f_r_with_beta(const AnsatzParams& p, double beta, const Vec3& x, const Vec3& v) {
  double c = bump(p.M() * norm(x)) * bump(norm(v) / p.N);
  if (c == 0) return 0;
  return p.cavity_amplitude() * std::exp(-beta) * c;
}

double f_r_eval(const AnsatzParams& p, double t, const Vec3& x, const Vec3& v) {
  if (bump(p.M() * norm(x)) * bump(norm(v) / p.N) == 0) return 0;
  return f_r_with_beta(p, beta_eval(p, t, x), x, v);
}

double f_a_eval(const AnsatzParams& p, double t, const Vec3& x, const Vec3& v) {
  return f_r_eval(p, t, x, v) + f_b_eval(p, t, x, v);
}

double rho_r_eval(const AnsatzParams& p, double beta, const Vec3& x) {
  double c = bump(p.M() * norm(x));
  if (c == 0) return 0;
  static const double m2 = BumpProfile::moment(2);
  return p.cavity_amplitude() * std::exp(-beta) * c * 4 * kPi * std::pow(p.N, 3) * m2;
}

// ------------------------------------------------------------ beta slice

BetaSlice::BetaSlice(const AnsatzParams& p, double t) : p_(&p), t_(t) {
  require(t <= 0 && t >= p.t_star - 1e-12, ErrorCode::InvalidArgument, "beta needs t in [t_star, 0]");
  const double at = std::abs(t);
  rmax_ = 1 + at + 0.05;
  amax_ = 1 + 1.1 * at + 0.05;
  nr_ = 129;
  na_ = 257;
  dr_ = rmax_ / (nr_ - 1);
  da_ = 2 * amax_ / (na_ - 1);
  table_.assign(std::size_t(nr_) * na_, 0.0);
  if (t == 0) return;
  std::vector<double> w;
  std::vector<double> tn = gl_nodes(32, t, 0.0, w);
  parallel_for(std::size_t(nr_), [&](std::size_t i) {
    double r = i * dr_;
    for (int k = 0; k < na_; ++k) {
      double a = -amax_ + k * da_, s = 0;
      for (std::size_t q = 0; q < tn.size(); ++q) {
        double t0 = tn[q], c1 = c1_table()(a - t0, std::abs(t0) / 10);
        if (c1 != 0) s += w[q] * c2_table()(r, std::abs(t0)) * c1;
      }
      // int_0^t = - int_t^0
      table_[i * na_ + k] = -s;
    }
  });
}

double BetaSlice::operator()(const Vec3& x) const {
  if (t_ == 0) return 0;
  const AnsatzParams& p = *p_;
  const double M = p.M(), N2 = p.N2();
  double xn2 = dot(x, x), xn = std::sqrt(xn2);
  double s = 0;
  p.index->near_axis(x, reach_angle(rmax_ / M, xn), [&](std::size_t j) {
    double xe = dot(x, p.tube.directions[j]);
    double r = M * std::sqrt(std::max(0.0, xn2 - xe * xe));
    double a = xe / N2;
    if (r >= rmax_ - 2 * dr_ || std::abs(a) >= amax_ - 2 * da_) return;
    double u = r / dr_, z = (a + amax_) / da_;
    int i = std::min(int(std::floor(u)) - 1, nr_ - 4), k = std::clamp(int(std::floor(z)) - 1, 0, na_ - 4);
    double wu[4], wz[4];
    lagrange4(u - i, wu);
    lagrange4(z - k, wz);
    double acc = 0;
    for (int m = 0; m < 4; ++m) {
      int ii = std::abs(i + m);  // even in r
      double row = 0;
      for (int n = 0; n < 4; ++n) row += wz[n] * table_[std::size_t(ii) * na_ + k + n];
      acc += wu[m] * row;
    }
    s += acc;
  });
  return p.tube_amplitude() * N2 / (10 * M * M) * s;
}

// ------------------------------------------------------------ grids

void check_ansatz_resolution(const AnsatzParams& p, const GridSpec& g) {
  const double h = 1 / (4 * p.M()) * (1 + 1e-12);
  for (int a = 0; a < 3; ++a) {
    bool ok = g.nx[a] > 1 && g.nv[a] > 1 && g.hx(a) <= h && g.hv(a) <= h;
    if (!ok) {
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "grid does not resolve the tube width: need >= 4 cells across 1/M = %g on every axis "
                    "(axis %d has hx = %g, hv = %g)",
                    1 / p.M(), a, g.nx[a] > 1 ? g.hx(a) : 2 * g.Lx, g.nv[a] > 1 ? g.hv(a) : 2 * g.Lv);
      fail(ErrorCode::ResolutionGuard, buf);
    }
  }
}

PhaseField f_b_to_grid(const AnsatzParams& p, double t, const GridSpec& g) {
  PhaseField out(g);
  const std::size_t nxt = g.nx_total();
  const double M = p.M(), N2 = p.N2(), A = p.tube_amplitude();
  parallel_for(g.nv_total(), [&](std::size_t iv) {
    Vec3 v = g.v_point(iv);
    double vn = norm(v);
    if (vn <= 0.9 * N2 || vn >= 1.1 * N2 + 1 / M) return;
    std::vector<std::size_t> js;
    p.index->near_axis(v, reach_angle(1 / M, vn), [&](std::size_t j) {
      if (in_v_support(p, j, v)) js.push_back(j);
    });
    if (js.empty()) return;
    cplx* row = out.slice(iv);
    for (std::size_t ix = 0; ix < nxt; ++ix) {
      Vec3 x = g.x_point(ix);
      double s = 0;
      for (std::size_t j : js) s += tube_profile(p, j, t, x, v);
      row[ix] = A * s;
    }
  });
  return out;
}

PhaseField f_r_to_grid(const AnsatzParams& p, double t, const GridSpec& g) {
  PhaseField out(g);
  BetaSlice beta(p, t);
  const std::size_t nxt = g.nx_total();
  std::vector<double> xpart(nxt, 0.0);
  parallel_for(nxt, [&](std::size_t ix) {
    Vec3 x = g.x_point(ix);
    double c = bump(p.M() * norm(x));
    if (c != 0) xpart[ix] = p.cavity_amplitude() * std::exp(-beta(x)) * c;
  });
  parallel_for(g.nv_total(), [&](std::size_t iv) {
    double cv = bump(norm(g.v_point(iv)) / p.N);
    if (cv == 0) return;
    cplx* row = out.slice(iv);
    for (std::size_t ix = 0; ix < nxt; ++ix) row[ix] = xpart[ix] * cv;
  });
  return out;
}

PhaseField f_a_to_grid(const AnsatzParams& p, double t, const GridSpec& g) {
  return axpy(1.0, f_r_to_grid(p, t, g), f_b_to_grid(p, t, g));
}

std::vector<std::pair<std::string, PhaseField>> f_err_terms(const AnsatzParams& p, double t, const GridSpec& g,
                                                           const CollisionConfig& cfg) {
  check_ansatz_resolution(p, g);
  require(g.storage == Storage::Full, ErrorCode::StorageMode, "f_err_terms needs a full field");
  PhaseField fr = f_r_to_grid(p, t, g), fb = f_b_to_grid(p, t, g);
  PhaseField fa = axpy(1.0, fr, fb);
  const std::size_t nxt = g.nx_total(), nvt = g.nv_total();

  // v . grad_x f_r
  PhaseField tr = transform(fr, Axes::X, Direction::Forward);
  for (std::size_t iv = 0; iv < nvt; ++iv) {
    Vec3 v = g.v_point(iv);
    cplx* row = tr.slice(iv);
    for (std::size_t ix = 0; ix < nxt; ++ix) row[ix] *= cplx(0, dot(g.eta_point(ix), v));
  }
  PhaseField transport = transform(tr, Axes::X, Direction::Inverse);

  BetaSlice beta(p, t);
  std::vector<double> rho_r(nxt), rho_b(nxt);
  parallel_for(nxt, [&](std::size_t ix) {
    Vec3 x = g.x_point(ix);
    rho_r[ix] = bump(p.M() * norm(x)) == 0 ? 0.0 : rho_r_eval(p, beta(x), x);
    rho_b[ix] = rho_b_eval(p, t, x);
  });
  auto loss = [&](const PhaseField& f, const std::vector<double>& rho) {
    PhaseField out(g);
    for (std::size_t iv = 0; iv < nvt; ++iv)
      for (std::size_t ix = 0; ix < nxt; ++ix) out.at(ix, iv) = 4 * kPi * rho[ix] * f.at(ix, iv);
    return out;
  };
  std::vector<std::pair<std::string, PhaseField>> out;
  out.emplace_back("v.grad_x f_r", std::move(transport));
  out.emplace_back("Q-(f_b,f_r)", loss(fb, rho_r));
  out.emplace_back("Q-(f_r,f_r)", loss(fr, rho_r));
  out.emplace_back("Q-(f_b,f_b)", loss(fb, rho_b));
  out.emplace_back("-Q+(f_a,f_a)", scaled(gain_term_spectral(fa, fa, cfg), -1.0));
  return out;
}

// ------------------------------------------------------------ norms

double AnsatzNorm::total() const { return std::sqrt(cavity * cavity + tubes * tubes); }

namespace {

// int <v>^{2q} chi(|v|/N)^p dv
double cavity_v_moment(double N, double q, int p) {
  std::vector<double> w;
  std::vector<double> u = gl_nodes(64, 0, 1, w);
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double v = N * u[i];
    s += w[i] * std::pow(1 + v * v, q) * std::pow(bump(u[i]), p) * u[i] * u[i];
  }
  return 4 * kPi * N * N * N * s;
}

// int <v>^{2q} W(v)^p dv for one tube's velocity profile
double tube_v_moment(double M, double N2, double q, int p) {
  std::vector<double> wr, wz;
  std::vector<double> r = gl_nodes(32, 0, 1 / M, wr), z = gl_nodes(32, 0.9 * N2, 1.1 * N2, wz);
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t k = 0; k < z.size(); ++k) {
      double v2 = r[i] * r[i] + z[k] * z[k];
      double W = bump(M * r[i]) * bump(10 * (z[k] - N2) / N2);
      s += wr[i] * wz[k] * 2 * kPi * r[i] * std::pow(1 + v2, q) * std::pow(W, p);
    }
  return s;
}

// int |T^(eta)|^2 weight(eta) d eta for T(x) = chi(M|x_perp|) chi(x_par / N2)
template <class Wt>
double tube_x_spectral(double M, double N2, Wt&& weight) {
  const BumpProfile& b = BumpProfile::instance();
  std::vector<double> k, w;
  spectral_nodes(b.k_max(), k, w);
  std::vector<double> h2(k.size()), h1(k.size());
  for (std::size_t i = 0; i < k.size(); ++i) {
    h2[i] = b.hat(k[i], 2);
    h1[i] = b.hat(k[i], 1);
  }
  double s = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    double inner = 0;
    for (std::size_t j = 0; j < k.size(); ++j) {
      double e2 = M * M * k[i] * k[i] + k[j] * k[j] / (N2 * N2);
      inner += w[j] * weight(e2) * h1[j] * h1[j];
    }
    s += w[i] * k[i] * h2[i] * h2[i] * 2 * inner;  // q' over the whole line
  }
  return 2 * kPi * N2 / (M * M) * s;
}

// ||chi(M .)||^2_{H^q}
double cavity_x_sobolev_sq(double M, double q) {
  const BumpProfile& b = BumpProfile::instance();
  std::vector<double> k, w;
  spectral_nodes(b.k_max(), k, w);
  double s = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    double h = b.hat(k[i], 3);
    s += w[i] * std::pow(1 + M * M * k[i] * k[i], q) * h * h * k[i] * k[i];
  }
  return 4 * kPi * s / (M * M * M);
}

// exp(-beta(t, x)) chi(M|x|) on a small periodic x box (single v point, unit cell).
PhaseField cavity_x_field(const AnsatzParams& p, double t, int nx) {
  double Lx = 1.25 / p.M();
  GridSpec g = GridSpec::make({nx, nx, nx}, {1, 1, 1}, Lx, 0.5);
  BetaSlice beta(p, t);
  PhaseField f(g);
  parallel_for(g.nx_total(), [&](std::size_t ix) {
    Vec3 x = g.x_point(ix);
    double c = bump(p.M() * norm(x));
    if (c != 0) f.data[ix] = std::exp(-beta(x)) * c;
  });
  return f;
}

double sup_abs(const PhaseField& f) {
  double m = 0;
  for (const cplx& z : f.data) m = std::max(m, std::abs(z));
  return m;
}

double sup_grad(const PhaseField& f) {
  PhaseField fx = transform(f, Axes::X, Direction::Forward);
  const GridSpec& g = f.grid;
  std::vector<double> g2(g.nx_total(), 0.0);
  for (int a = 0; a < 3; ++a) {
    PhaseField d = fx;
    for (std::size_t i = 0; i < g.nx_total(); ++i) d.data[i] *= cplx(0, g.eta_point(i)[a]);
    PhaseField back = transform(d, Axes::X, Direction::Inverse);
    for (std::size_t i = 0; i < g.nx_total(); ++i) g2[i] += std::norm(back.data[i]);
  }
  return std::sqrt(*std::max_element(g2.begin(), g2.end()));
}

}  // namespace

AnsatzNorm fa_sobolev_norm(const AnsatzParams& p, double t, double q, int nx) {
  const double M = p.M(), N2 = p.N2();
  AnsatzNorm out;
  double x0 = cavity_x_sobolev_sq(M, q);
  double ratio = 1;
  if (t != 0) {
    // discretisation error cancels in the ratio
    ratio = std::pow(sobolev_norm(cavity_x_field(p, t, nx), q, 0) / sobolev_norm(cavity_x_field(p, 0, nx), q, 0), 2);
  }
  out.cavity = p.cavity_amplitude() * std::sqrt(x0 * ratio * cavity_v_moment(p.N, q, 2));
  double T2 = tube_x_spectral(M, N2, [&](double e2) { return std::pow(1 + e2, q); });
  out.tubes = p.tube_amplitude() * std::sqrt(p.tube.J * T2 * tube_v_moment(M, N2, q, 2));
  return out;
}

ZParts fa_z_parts(const AnsatzParams& p, double t, int nx) {
  const double M = p.M(), N2 = p.N2(), J = p.tube.J;
  const double A = p.tube_amplitude(), Ar = p.cavity_amplitude();
  PhaseField cx = cavity_x_field(p, t, nx);
  double cv2 = std::sqrt(cavity_v_moment(p.N, 1, 2)), cv1 = cavity_v_moment(p.N, 0, 1);
  double tv2 = std::sqrt(tube_v_moment(M, N2, 1, 2)), tv1 = tube_v_moment(M, N2, 0, 1);
  double T0 = std::sqrt(tube_x_spectral(M, N2, [](double) { return 1.0; }));
  double T1 = std::sqrt(tube_x_spectral(M, N2, [](double e2) { return e2; }));
  // sup |grad T| over the profile chi(M r) chi(z / N2)
  double tg = 0;
  for (int i = 0; i <= 400; ++i)
    for (int k = 0; k <= 400; ++k) {
      double r = i / 400.0, z = k / 400.0, h = 1e-6;
      double dr = (bump(r + h) - bump(r - h)) / (2 * h), dz = (bump(z + h) - bump(z - h)) / (2 * h);
      tg = std::max(tg, std::hypot(M * dr * bump(z), bump(r) * dz / N2));
    }
  auto add = [](double a, double b) { return std::sqrt(a * a + b * b); };
  ZParts z;
  z.l2 = add(Ar * l2_norm(cx) * cv2, std::sqrt(J) * A * T0 * tv2);
  z.grad_l2 = add(Ar * homogeneous_norm(cx, 1, 0) * cv2, std::sqrt(J) * A * T1 * tv2);
  // L^1_v of disjointly supported pieces adds
  z.l1inf = Ar * sup_abs(cx) * cv1 + J * A * tv1;
  z.grad_l1inf = Ar * sup_grad(cx) * cv1 + J * A * tg * tv1;
  return z;
}

double loss_bb_l2(const AnsatzParams& p, int budget) {
  // ||Q-(f_b, f_b)||^2 = (4 pi)^2 A^2 ||W||^2 sum_j int rho_b^2 T_j^2 dx at t = 0.
  // The j-sum is estimated from `budget` sample tubes spread over the lattice.
  const double M = p.M(), N2 = p.N2();
  const int J = p.tube.J;
  int ns = budget > 0 ? budget : 4;
  ns = std::min(ns, J);
  std::vector<double> wr, wp, wz;
  std::vector<double> rr = gl_nodes(6, 0, 1 / M, wr);
  const int nphi = 8;
  int panels = std::max(8, int(std::ceil(4 * M * N2)));
  std::vector<double> z0, w0;
  gauss_legendre(4, 0, 1, z0, w0);
  double total = 0;
  for (int s = 0; s < ns; ++s) {
    std::size_t j = std::size_t((s + 0.5) * J / ns);
    const Vec3& e = p.tube.directions[j];
    Vec3 a = std::abs(e[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    double ae = dot(a, e);
    Vec3 u{a[0] - ae * e[0], a[1] - ae * e[1], a[2] - ae * e[2]};
    double un = norm(u);
    for (double& c : u) c /= un;
    Vec3 w{e[1] * u[2] - e[2] * u[1], e[2] * u[0] - e[0] * u[2], e[0] * u[1] - e[1] * u[0]};
    std::vector<double> part(panels, 0.0);
    parallel_for(std::size_t(panels), [&](std::size_t pi) {
      double h = 2 * N2 / panels, lo = -N2 + pi * h, acc = 0;
      for (int iz = 0; iz < 4; ++iz) {
        double zz = lo + h * z0[iz], wzz = h * w0[iz];
        double cz = bump(zz / N2);
        for (std::size_t ir = 0; ir < rr.size(); ++ir) {
          double cr = bump(M * rr[ir]), T = cz * cr;
          if (T == 0) continue;
          for (int k = 0; k < nphi; ++k) {
            double ph = 2 * kPi * k / nphi;
            double c = std::cos(ph) * rr[ir], sn = std::sin(ph) * rr[ir];
            Vec3 x{zz * e[0] + c * u[0] + sn * w[0], zz * e[1] + c * u[1] + sn * w[1], zz * e[2] + c * u[2] + sn * w[2]};
            double rho = rho_b_eval(p, 0, x);
            acc += wzz * wr[ir] * rr[ir] * (2 * kPi / nphi) * rho * rho * T * T;
          }
        }
      }
      part[pi] = acc;
    });
    for (double x : part) total += x;
  }
  total *= double(J) / ns;
  double A = p.tube_amplitude();
  return 4 * kPi * A * std::sqrt(tube_v_moment(M, N2, 0, 2) * total);
}

double rho_b_shell_average(const AnsatzParams& p, double t, double r) {
  check_time(t);
  const double M = p.M(), N2 = p.N2(), at = std::abs(t);
  auto g = [&](double th) {
    double rp = M * r * std::sin(th);
    if (rp >= 1 + at) return 0.0;
    return tube_perp_integral(rp, at) * tube_par_integral(r * std::cos(th) / N2 - t, at / 10) * std::sin(th);
  };
  double thc = r * M <= 1 + at ? kPi / 2 : std::asin((1 + at) / (M * r));
  std::vector<double> w;
  std::vector<double> th = gl_nodes(96, 0, thc, w);
  double s = 0;
  for (std::size_t i = 0; i < th.size(); ++i) s += w[i] * (g(th[i]) + g(kPi - th[i]));
  // (1 / 4 pi) int dOmega = (1/2) int sin(th) d th
  return p.tube.J * p.tube_amplitude() * N2 / (10 * M * M) * 0.5 * s;
}

}  // namespace klab
