#include "bump.hpp"

#include "quad.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

namespace klab {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Composite Gauss-Legendre on [a, b] with `panels` panels of 8 nodes.
template <class F>
double composite(F&& f, double a, double b, int panels) {
  static std::vector<double> x0, w0;
  static std::once_flag once;
  std::call_once(once, [] { gauss_legendre(8, 0.0, 1.0, x0, w0); });
  double h = (b - a) / panels, s = 0;
  for (int p = 0; p < panels; ++p) {
    double lo = a + p * h;
    for (std::size_t i = 0; i < x0.size(); ++i) s += w0[i] * f(lo + h * x0[i]);
  }
  return s * h;
}
}  // namespace

double bump(double r) {
  r = std::abs(r);
  if (r >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

double BumpProfile::hat_direct(double k, int dim) {
  int panels = std::max(24, int(std::ceil(k / 3)));
  const double c = std::sqrt(2 / kPi);
  switch (dim) {
    case 1:
      return c * composite([&](double z) { return bump(z) * std::cos(k * z); }, 0.0, 1.0, panels);
    case 2:
      return composite([&](double r) { return bump(r) * std::cyl_bessel_j(0.0, k * r) * r; }, 0.0, 1.0, panels);
    case 3:
      return c * composite(
                     [&](double r) {
                       double kr = k * r;
                       double sinc = kr < 1e-8 ? 1.0 - kr * kr / 6 : std::sin(kr) / kr;
                       return bump(r) * r * r * sinc;
                     },
                     0.0, 1.0, panels);
  }
  return 0.0;
}

double BumpProfile::moment(int m, int p) {
  return composite([&](double r) { return std::pow(bump(r), p) * std::pow(r, m); }, 0.0, 1.0, 64);
}

BumpProfile::BumpProfile() : kmin_(1e-3), kmax_(400.0), nk_(4096) {
  dlog_ = std::log(kmax_ / kmin_) / (nk_ - 1);
  for (int d = 0; d < 3; ++d) {
    table_[d].resize(nk_);
    for (int i = 0; i < nk_; ++i) table_[d][i] = hat_direct(kmin_ * std::exp(i * dlog_), d + 1);
  }
}

const BumpProfile& BumpProfile::instance() {
  static const BumpProfile p;
  return p;
}

double BumpProfile::hat(double k, int dim) const {
  k = std::abs(k);
  const std::vector<double>& t = table_[dim - 1];
  if (k >= kmax_) return 0.0;
  if (k <= kmin_) {
    // even in k: quadratic through the first table entry and k = 0
    double h0 = hat_direct(0.0, dim);
    return h0 + (t[0] - h0) * (k * k) / (kmin_ * kmin_);
  }
  double u = std::log(k / kmin_) / dlog_;
  int i = std::clamp(int(std::floor(u)) - 1, 0, nk_ - 4);
  double s = u - i;
  // 4-point Lagrange through i .. i+3 at offset s
  double w0 = -(s - 1) * (s - 2) * (s - 3) / 6, w1 = s * (s - 2) * (s - 3) / 2;
  double w2 = -s * (s - 1) * (s - 3) / 2, w3 = s * (s - 1) * (s - 2) / 6;
  return w0 * t[i] + w1 * t[i + 1] + w2 * t[i + 2] + w3 * t[i + 3];
}

double BumpProfile::inverse(double r) const {
  const double c = std::sqrt(2 / kPi);
  int panels = int(std::ceil(kmax_ / 0.5));
  return c * composite(
                 [&](double k) {
                   double kr = k * r;
                   double sinc = kr < 1e-8 ? 1.0 - kr * kr / 6 : std::sin(kr) / kr;
                   return hat(k, 3) * k * k * sinc;
                 },
                 0.0, kmax_, panels);
}

}  // namespace klab
