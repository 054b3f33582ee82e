#include <cmath>
#include <random>

#include "doctest.h"
#include "norms.hpp"

using namespace klab;

namespace {
constexpr double kPi = 3.14159265358979323846;

PhaseField random_field(const GridSpec& g, unsigned seed, bool real = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0, 1);
  PhaseField f(g);
  for (auto& z : f.data) z = cplx(n(rng), real ? 0.0 : n(rng));
  return f;
}

// Sum of three random Gaussians; the widths leave room for compression by 4.
PhaseField gaussian_mixture(const GridSpec& g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uc(-0.3, 0.3), uw(0.85, 1.0), ua(0.5, 1.5);
  PhaseField f(g);
  for (int k = 0; k < 3; ++k) {
    GaussianData d;
    for (int a = 0; a < 6; ++a) {
      double L = a < 3 ? g.Lx : g.Lv;
      d.centers[a] = uc(rng) * L / 4;
      d.widths[a] = uw(rng) * L / 3.3;
    }
    d.amplitude = ua(rng);
    // tails beyond the box are below the tolerance used here
    PhaseField part = sample(g, [&](const Vec3& x, const Vec3& v) {
      double e = 0;
      for (int a = 0; a < 3; ++a) {
        e += std::pow((x[a] - d.centers[a]) / d.widths[a], 2);
        e += std::pow((v[a] - d.centers[3 + a]) / d.widths[3 + a], 2);
      }
      return d.amplitude * std::exp(-0.5 * e);
    });
    f = axpy(1.0, part, f);
  }
  return f;
}

// 4 pi int_0^R r^2 (1 + r^2) e^{-r^2} dr by composite Simpson.
double radial_oracle() {
  const int n = 20000;
  const double R = 12.0, h = R / n;
  double s = 0;
  for (int i = 0; i <= n; ++i) {
    double r = i * h;
    double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
    s += w * r * r * (1 + r * r) * std::exp(-r * r);
  }
  return 4 * kPi * s * h / 3;
}
}  // namespace

TEST_CASE("sobolev norm: plain L2 at s=r=0, weighted Gaussian, monotone in s") {
  GridSpec g = GridSpec::make({16, 16, 16}, {16, 16, 16}, 6.6, 6.6);
  GaussianData d;
  PhaseField f = gaussian_oracle(g, d, 0.0);
  CHECK(std::abs(sobolev_norm(f, 0, 0) - l2_norm(f)) < 1e-12 * l2_norm(f));
  double exact = radial_oracle();  // each factor of the separable integral
  CHECK(std::abs(sobolev_norm(f, 1, 1) / exact - 1) < 1e-6);
  PhaseField r = random_field(GridSpec::make({8, 8, 8}, {4, 4, 4}, 2, 2), 3);
  CHECK(sobolev_norm(r, 1, 0) >= sobolev_norm(r, 0, 0));
  CHECK(sobolev_norm(r, 1, 1) >= sobolev_norm(r, 0, 1));
}

TEST_CASE("sobolev norm equals the mixed composition of weights") {
  GridSpec g = GridSpec::make({8, 8, 8}, {4, 4, 4}, 3, 2);
  PhaseField f = random_field(g, 5);
  const double s = 0.7, r = 1.3;
  PhaseField h = transform(f, Axes::X, Direction::Forward);
  for (std::size_t iv = 0; iv < h.nvt(); ++iv)
    for (std::size_t ix = 0; ix < h.nxt(); ++ix) {
      Vec3 e = g.eta_point(ix);
      h.at(ix, iv) *= std::pow(1 + e[0] * e[0] + e[1] * e[1] + e[2] * e[2], s / 2);
    }
  h = transform(h, Axes::X, Direction::Inverse);
  double viaMixed = mixed_norm(h, MixedSpec{2, r, 2});
  CHECK(std::abs(viaMixed / sobolev_norm(f, s, r) - 1) < 1e-10);
}

TEST_CASE("mixed norm of separable data and spec parsing") {
  GridSpec g = GridSpec::make({8, 8, 4}, {8, 4, 4}, 2, 3);
  PhaseField f(g);
  std::vector<double> a(f.nxt()), b(f.nvt());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& z : a) z = u(rng);
  for (auto& z : b) z = u(rng);
  for (std::size_t iv = 0; iv < f.nvt(); ++iv)
    for (std::size_t ix = 0; ix < f.nxt(); ++ix) f.at(ix, iv) = a[ix] * b[iv];
  double sumb = 0;
  for (double z : b) sumb += z;
  double expect = sumb * g.dv3() * *std::max_element(a.begin(), a.end());
  CHECK(std::abs(mixed_norm(f, "Lv^1Lx^inf") / expect - 1) < 1e-10);
  CHECK(std::abs(mixed_norm(scaled(f, -2.5), "L_v^{2,1}L_x^2") / mixed_norm(f, "L_v^{2,1}L_x^2") - 2.5) < 1e-12);
  MixedSpec sp = parse_mixed("L_v^{2,1}L_x^2");
  CHECK(sp.pv == 2);
  CHECK(sp.rv == 1);
  CHECK(sp.qx == 2);
  CHECK_THROWS_AS(parse_mixed("Lx^2Lv^1"), Error);
  CHECK_THROWS_AS(parse_mixed("banana"), Error);
}

TEST_CASE("norms are homogeneous and satisfy the triangle inequality") {
  GridSpec g = GridSpec::make({8, 8, 8}, {4, 4, 4}, 2, 2);
  for (unsigned seed = 0; seed < 4; ++seed) {
    PhaseField f = random_field(g, 100 + seed), h = random_field(g, 200 + seed);
    PhaseField s = axpy(1.0, f, h);
    auto checks = [&](auto nrm) {
      CHECK(nrm(s) <= nrm(f) + nrm(h) + 1e-10);
      CHECK(std::abs(nrm(scaled(f, cplx(0, -3))) - 3 * nrm(f)) < 1e-10 * nrm(f));
    };
    checks([](const PhaseField& x) { return sobolev_norm(x, 0.8, 0.5); });
    checks([](const PhaseField& x) { return mixed_norm(x, "Lv^1Lx^inf"); });
    checks([](const PhaseField& x) { return mixed_norm(x, "Lv^{2,1}Lx^2"); });
    checks([](const PhaseField& x) { return z_norm(x, 4.0); });
  }
}

TEST_CASE("z norm basics") {
  GridSpec g = GridSpec::make({8, 8, 8}, {4, 4, 4}, 2, 2);
  CHECK(z_norm(PhaseField(g), 8.0) == 0.0);
  PhaseField f = random_field(g, 3);
  CHECK(std::abs(z_norm(scaled(f, 0.5), 8.0) - 0.5 * z_norm(f, 8.0)) < 1e-12 * z_norm(f, 8.0));
  CHECK_THROWS_AS(z_norm(f, 0.5), Error);
  // gradient part of a plane wave: |grad| = |k| |f|
  GridSpec h = GridSpec::make({16, 1, 1}, {1, 1, 1}, kPi, 1.0);
  PhaseField w = sample(h, [](const Vec3& x, const Vec3&) { return std::exp(cplx(0, 3 * x[0])); });
  ZParts z = z_parts(w);
  CHECK(std::abs(z.grad_l1inf / z.l1inf - 3) < 1e-10);
  CHECK(std::abs(z.grad_l2 / z.l2 - 3) < 1e-10);
}

TEST_CASE("Littlewood-Paley projectors partition the field") {
  GridSpec g = GridSpec::make({16, 16, 16}, {4, 4, 4}, 4, 2);
  PhaseField f = random_field(g, 21);
  for (LpAxis ax : {LpAxis::X, LpAxis::Xi}) {
    PhaseField sum(g);
    for (double N : lp_dyads(g, ax)) sum = axpy(1.0, lp_project(f, ax, N), sum);
    CHECK(rel_l2_error(sum, f) < 1e-10);
  }
  CHECK_THROWS_AS(lp_project(f, LpAxis::X, 3.0), Error);
  CHECK_THROWS_AS(lp_project(f, LpAxis::X, 1024.0), Error);
}

TEST_CASE("single-annulus data is captured by one dyad") {
  GridSpec g = GridSpec::make({32, 32, 32}, {1, 1, 1}, 8, 1);
  const double N = 4.0;
  PhaseField f = transform(random_field(g, 8), Axes::X, Direction::Forward);
  for (std::size_t i = 0; i < f.nxt(); ++i) {
    Vec3 e = g.eta_point(i);
    double k = std::sqrt(e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    if (k < N / std::sqrt(2.0) * 1.001 || k > N * 0.999) f.at(i, 0) = 0;
  }
  f = transform(f, Axes::X, Direction::Inverse);
  CHECK(rel_l2_error(lp_project(f, LpAxis::X, N), f) < 1e-12);
  for (double M : lp_dyads(g, LpAxis::X))
    if (M != N) CHECK(l2_norm(lp_project(f, LpAxis::X, M)) < 1e-8 * l2_norm(f));
}

TEST_CASE("dyadic H^s sum is comparable to the H^s norm") {
  GridSpec g = GridSpec::make({16, 16, 16}, {2, 2, 2}, 3, 1);
  for (unsigned seed = 0; seed < 3; ++seed) {
    PhaseField f = random_field(g, 40 + seed);
    for (double s : {0.5, 1.0, 2.0}) {
      double lhs = std::pow(sobolev_norm(f, s, 0), 2);
      double rhs = 0;
      for (double N : lp_dyads(g, LpAxis::X)) rhs += std::pow(1 + N * N, s) * std::pow(l2_norm(lp_project(f, LpAxis::X, N)), 2);
      CHECK(lhs / rhs > 0.25);
      CHECK(lhs / rhs < 4.0);
    }
  }
}

TEST_CASE("space-time norms: trivial cases") {
  GridSpec g = GridSpec::make({8, 8, 8}, {4, 4, 4}, 2, 2);
  PhaseField f = random_field(g, 2);
  Trajectory one;
  one.append(0.0, f);
  PhaseField fx = to_tag(f, Tag::Spectral_x_xi);
  double lp3 = 0;
  for (auto z : fx.data) lp3 += std::pow(std::abs(z), 3);
  lp3 = std::pow(lp3 * fx.cell_volume(), 1.0 / 3);
  CHECK(std::abs(spacetime_norm(one, kInf, 3) / lp3 - 1) < 1e-12);
  Trajectory flat;
  for (int k = 0; k <= 10; ++k) flat.append(0.1 * k * 1.7, f);
  double l2 = l2_norm(f);
  CHECK(std::abs(spacetime_norm(flat, 2, 2) / (std::sqrt(1.7) * l2) - 1) < 1e-12);
  CHECK(std::abs(spacetime_norm(flat, 4, 2) / (std::pow(1.7, 0.25) * l2) - 1) < 1e-12);
}

TEST_CASE("X_{s,b} norm: b=s=0 is L2 of the cut-off trajectory; zero gives zero") {
  GridSpec g = GridSpec::make({8, 8, 8}, {4, 4, 4}, 3, 1.5);
  GaussianData d;
  d.widths = {0.4, 0.4, 0.4, 0.2, 0.2, 0.2};
  PhaseField f0 = gaussian_oracle(g, d, 0.0);
  Trajectory tr, zero;
  const int K = 64;
  const double T = 0.25;
  for (int k = 0; k < K; ++k) {
    double t = -1.0 + 2.0 * k / (K - 1);
    tr.append(t, free_transport(f0, t));
    zero.append(t, PhaseField(g));
  }
  double direct = 0;
  const double dt = 2.0 / (K - 1);
  for (int k = 0; k < K; ++k) direct += std::pow(cutoff_theta(tr.times[k] / T) * l2_norm(tr.fields[k]), 2) * dt;
  CHECK(std::abs(xsb_norm(tr, 0, 0, T) / std::sqrt(direct) - 1) < 1e-8);
  CHECK(xsb_norm(zero, 0.5, 0.6, T) == 0.0);
  double r = xsb_norm(tr, 0, 0.6, T) / xsb_norm(tr, 0, 0, T);
  CHECK(std::isfinite(r));
  CHECK(r >= 1.0);
  CHECK_THROWS_AS(xsb_norm(tr, 0, 0.6, 0.9), Error);
}

TEST_CASE("homogeneous weighted norm follows the scaling law") {
  struct Case {
    double alpha, beta;
    GridSpec g;
  };
  std::vector<Case> cases = {{1, 0, GridSpec::make({32, 32, 32}, {4, 4, 4}, 4, 4)},
                             {0, 1, GridSpec::make({4, 4, 4}, {32, 32, 32}, 4, 4)}};
  const double s = 0.75;
  for (const Case& c : cases) {
    PhaseField f = gaussian_mixture(c.g, 77);
    double n0 = homogeneous_norm(f, s, s);
    for (double lam : {2.0, 4.0}) {
      double ratio = homogeneous_norm(rescale(f, {lam, c.alpha, c.beta}), s, s) / n0;
      double expect = std::pow(lam, (s - 0.5) * (c.alpha - c.beta));
      CHECK(std::abs(ratio / expect - 1) < 0.05);
    }
  }
}
