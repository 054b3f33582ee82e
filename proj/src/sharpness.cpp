#include "sharpness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ansatz.hpp"
#include "bump.hpp"
#include "norms.hpp"
#include "parallel.hpp"
#include "quad.hpp"

namespace klab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// Uniform table on [0, xmax], cubic Lagrange, clamped outside.
struct Table1 {
  double dx = 0;
  std::vector<double> v;
  template <class F>
  Table1(double xmax, int n, F&& f) : dx(xmax / (n - 1)), v(n) {
    for (int i = 0; i < n; ++i) v[i] = f(i * dx);
  }
  double operator()(double x) const {
    const int n = int(v.size());
    double u = std::clamp(x / dx, 0.0, double(n - 1));
    int i = std::clamp(int(std::floor(u)) - 1, 0, n - 4);
    double s = u - i;
    return -(s - 1) * (s - 2) * (s - 3) / 6 * v[i] + s * (s - 2) * (s - 3) / 2 * v[i + 1] -
           s * (s - 1) * (s - 3) / 2 * v[i + 2] + s * (s - 1) * (s - 2) / 6 * v[i + 3];
  }
};

double gl_integral(const std::function<double(double)>& f, double a, double b, int panels) {
  static std::vector<double> x0, w0;
  if (x0.empty()) gauss_legendre(16, 0, 1, x0, w0);
  double h = (b - a) / panels, s = 0;
  for (int p = 0; p < panels; ++p)
    for (int i = 0; i < 16; ++i) s += w0[i] * f(a + h * (p + x0[i]));
  return s * h;
}

const double kThetaMax = 40;

const Table1& theta_table() {
  static const Table1 t(kThetaMax, 8001, [](double tau) {
    return std::sqrt(2 / kPi) * gl_integral([&](double s) { return cutoff_theta(s) * std::cos(s * tau); }, 0, 2, 16);
  });
  return t;
}

// G(y) = int_0^y b(t) t dt
const Table1& g_table() {
  static const Table1 t(1.0, 2001, [](double y) { return gl_integral([](double s) { return bump(s) * s; }, 0, y, 4); });
  return t;
}

// m(y) = int b(sqrt(y^2 + t^2)) dt
const Table1& m_table() {
  static const Table1 t(1.0, 2001, [](double y) {
    if (y >= 1) return 0.0;
    double h = std::sqrt(1 - y * y);
    return 2 * gl_integral([&](double s) { return bump(std::sqrt(y * y + s * s)); }, 0, h, 4);
  });
  return t;
}

// W1(w) = 2 pi int_{|w|}^1 b(s)^2 s ds
const Table1& w1_table() {
  static const Table1 t(1.0, 2001, [](double w) {
    return 2 * kPi * gl_integral([](double s) { return bump(s) * bump(s) * s; }, w, 1, 4);
  });
  return t;
}

double g_of(double y) { return y >= 1 ? g_table().v.back() : g_table()(y); }

void check_regime(double M1, double M2, double N, double N2) {
  require(M1 >= 1 && M2 >= 1, ErrorCode::Regime, "sharpness needs M1, M2 >= 1");
  require(N2 >= 2 && std::abs(std::log2(N2) - std::round(std::log2(N2))) < 1e-12, ErrorCode::Regime,
          "sharpness needs N2 >= 2 dyadic");
  require(N > 0 && N <= (1 + 1e-12) / std::max(M1, M2), ErrorCode::Regime, "sharpness needs 0 < N <= 1/max(M1, M2)");
}

int tube_count(double M2, double N2) { return std::max(12, int(std::lround((M2 * N2) * (M2 * N2)))); }
}  // namespace

double theta_hat(double tau) {
  tau = std::abs(tau);
  if (tau >= kThetaMax)
    return std::sqrt(2 / kPi) * gl_integral([&](double s) { return cutoff_theta(s) * std::cos(s * tau); }, 0, 2,
                                            int(std::ceil(tau)));
  return theta_table()(tau);
}

SharpnessFunctions sharpness_functions(double M1, double M2, double N, double N2) {
  check_regime(M1, M2, N, N2);
  SharpnessFunctions f;
  f.M1 = M1;
  f.M2 = M2;
  f.N = N;
  f.N2 = N2;
  f.directions = sphere_grid(tube_count(M2, N2));
  return f;
}

double SharpnessFunctions::phi(const Vec3& eta1, const Vec3& v) const {
  return std::pow(M1 * N, -1.5) * bump(norm(eta1) / M1) * bump(norm(v) / N);
}

double SharpnessFunctions::zeta(const Vec3& eta, const Vec3& v) const {
  double Mx = std::max(M1, M2);
  return std::pow(Mx * N, -1.5) * bump(norm(eta) / Mx) * bump(norm(v) / N);
}

double SharpnessFunctions::psi(const Vec3& eta2, const Vec3& v2) const {
  double e2 = dot(eta2, eta2), v22 = dot(v2, v2), s = 0;
  for (const Vec3& e : directions) {
    double ve = dot(v2, e);
    double cv = bump(10 * (ve - N2) / N2);
    if (cv == 0) continue;
    cv *= bump(M2 * std::sqrt(std::max(0.0, v22 - ve * ve)));
    if (cv == 0) continue;
    double ee = dot(eta2, e);
    s += cv * bump(std::sqrt(std::max(0.0, e2 - ee * ee)) / M2) * bump(N2 * ee);
  }
  return s / (M2 * N2);
}

SharpnessResult sharpness_integral(double M1, double M2, double N, double N2, int budget, double rtol) {
  check_regime(M1, M2, N, N2);
  require(budget >= 8, ErrorCode::InvalidArgument, "quadrature budget must be >= 8 nodes");
  const double Mx = std::max(M1, M2);
  const int J = tube_count(M2, N2);
  const double pref = J / (M2 * N2) * std::pow(M1, -1.5) * std::pow(Mx, -1.5) * std::pow(N, -3);

  auto level = [&](int n) {
    std::vector<double> rho, wr, w, ww, a, wa, z, wz, u, wu, s, ws;
    gauss_legendre(n, 0, M2, rho, wr);
    gauss_legendre(n, -1 / N2, 1 / N2, w, ww);
    gauss_legendre(n, -1 / M2, 1 / M2, a, wa);
    gauss_legendre(n, 0.9 * N2, 1.1 * N2, z, wz);
    gauss_legendre(n, -1, 1, u, wu);
    gauss_legendre(2 * n, 0, Mx, s, ws);
    std::vector<double> am(n), zb(n), uw(n), sb(2 * n);
    for (int k = 0; k < n; ++k) {
      am[k] = wa[k] * m_table()(std::abs(M2 * a[k])) / M2;
      zb[k] = wz[k] * bump(10 * (z[k] - N2) / N2);
      uw[k] = wu[k] * w1_table()(std::abs(u[k]));
    }
    for (int k = 0; k < 2 * n; ++k) sb[k] = ws[k] * s[k] * bump(s[k] / Mx);
    std::vector<double> part(n, 0.0);
    parallel_for(std::size_t(n), [&](std::size_t i) {
      double acc = 0;
      for (int j = 0; j < n; ++j) {
        double base = 2 * kPi * rho[i] * wr[i] * ww[j] * bump(rho[i] / M2) * bump(N2 * std::abs(w[j]));
        if (base == 0) continue;
        double r = std::hypot(rho[i], w[j]);
        // K(r) = int b(|eta - eta2| / M1) b(|eta| / Mx) d eta
        double K = 0;
        for (int k = 0; k < 2 * n; ++k)
          K += sb[k] * (g_of((s[k] + r) / M1) - g_of(std::abs(s[k] - r) / M1));
        K *= 2 * kPi * M1 * M1 / r;
        double rn = r * N, inner = 0;
        for (int k = 0; k < n; ++k) {
          if (am[k] == 0) continue;
          for (int l = 0; l < n; ++l) {
            if (zb[l] == 0) continue;
            double c = rho[i] * a[k] + w[j] * z[l], V = 0;
            for (int q = 0; q < n; ++q) V += uw[q] * theta_hat(c - rn * u[q]);
            inner += am[k] * zb[l] * N * N * N * V;
          }
        }
        acc += base * K * inner;
      }
      part[i] = acc;
    });
    double tot = 0;
    for (double x : part) tot += x;
    return pref * tot;
  };

  SharpnessResult res;
  res.target = std::min(M1, M2) * N2 * bilinear_factors(M1, M2, N, N2).BM;
  double prev = 0;
  for (int n = 8; n <= budget; n *= 2) {
    double v = level(n);
    res.history.push_back(v);
    res.value = v;
    res.nodes = n;
    if (prev != 0) {
      res.error_estimate = std::abs(v - prev) / std::abs(v);
      if (res.error_estimate < rtol) return res;
    } else {
      res.error_estimate = 1;
    }
    prev = v;
  }
  if (res.error_estimate > 0.05) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "quadrature budget exhausted: I = %.6g with estimated relative error %.3g at %d nodes per dimension",
                  res.value, res.error_estimate, res.nodes);
    fail(ErrorCode::Budget, buf);
  }
  return res;
}

BilinearFactors bilinear_factors(double M1, double M2, double N, double N2) {
  require(M1 >= 1 && M2 >= 1 && N2 >= 1 && N > 0, ErrorCode::InvalidArgument,
          "bilinear factors need M1, M2, N2 >= 1 and N > 0");
  double n = std::max(N, 1.0);
  BilinearFactors b;
  b.BM = M1 <= M2 ? std::sqrt(M1 / M2) : 1.0;
  b.BN = N2 <= n ? std::sqrt(N2 / n) : 1.0;
  return b;
}

}  // namespace klab
