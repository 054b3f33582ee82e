#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "ansatz.hpp"
#include "bump.hpp"
#include "doctest.h"
#include "quad.hpp"

using namespace klab;

namespace {
constexpr double kPi = 3.14159265358979323846;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  Vec3 u{n(rng), n(rng), n(rng)};
  double l = norm(u);
  return {u[0] / l, u[1] / l, u[2] / l};
}

// orthonormal pair perpendicular to e
void frame(const Vec3& e, Vec3& u, Vec3& w) {
  Vec3 a = std::abs(e[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  double ae = dot(a, e);
  u = {a[0] - ae * e[0], a[1] - ae * e[1], a[2] - ae * e[2]};
  double l = norm(u);
  for (double& c : u) c /= l;
  w = {e[1] * u[2] - e[2] * u[1], e[2] * u[0] - e[0] * u[2], e[0] * u[1] - e[1] * u[0]};
}

double median_nn_angle(const std::vector<Vec3>& d) {
  std::vector<double> nn;
  for (std::size_t i = 0; i < d.size(); ++i) {
    double best = -1;
    for (std::size_t j = 0; j < d.size(); ++j)
      if (i != j) best = std::max(best, dot(d[i], d[j]));
    nn.push_back(std::acos(std::min(1.0, best)));
  }
  std::sort(nn.begin(), nn.end());
  return nn[nn.size() / 2];
}
}  // namespace

TEST_CASE("bump profile basics and transform tables") {
  const BumpProfile& b = BumpProfile::instance();
  CHECK(bump(0) == 1.0);
  CHECK(bump(1.0) == 0.0);
  CHECK(bump(1.5) == 0.0);
  for (double r = 0; r < 1.2; r += 0.01) CHECK(bump(r) >= 0);
  for (int d = 1; d <= 3; ++d)
    for (double k : {0.0, 0.3, 2.0, 17.0, 90.0}) {
      double ref = BumpProfile::hat_direct(k, d);
      CHECK(std::abs(b.hat(k, d) - ref) < 1e-8 * std::abs(BumpProfile::hat_direct(0, d)));
    }
  for (double r : {0.0, 0.3, 0.6}) CHECK(std::abs(b.inverse(r) - bump(r)) < 1e-6);
}

TEST_CASE("adaptive quadrature") {
  QuadResult q = integrate_adaptive([](double x) { return std::exp(-x * x); }, -3, 3, 1e-12);
  CHECK(std::abs(q.value - std::sqrt(kPi) * std::erf(3.0)) < 1e-12);
  std::vector<double> x, w;
  gauss_legendre(10, 0, 2, x, w);
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::pow(x[i], 19);
  CHECK(std::abs(s - std::pow(2.0, 20) / 20) < 1e-9 * s);
  CHECK_THROWS_AS(integrate_adaptive([](double x) { return std::sin(1 / (x + 1e-9)); }, 0, 1, 1e-12, 0, 8), Error);
}

TEST_CASE("sphere grid") {
  std::vector<Vec3> d12 = sphere_grid(12);
  CHECK(min_pair_angle(d12) > 0.5 * std::sqrt(4 * kPi / 12));
  for (int J : {12, 100, 1000})
    for (const Vec3& e : sphere_grid(J)) CHECK(std::abs(norm(e) - 1) < 1e-14);
  // doubling J halves the neighbourhood area (angle^2) within 20%
  for (int J : {100, 400}) {
    double a = median_nn_angle(sphere_grid(J)), b = median_nn_angle(sphere_grid(2 * J));
    CHECK(std::abs((a * a) / (b * b) - 2) < 0.4);
  }
  // tube-family spacing stays within [0.5, 2] of the equal-area value
  TubeFamily tf = TubeFamily::make(4, 4, 0.75);
  double r = min_pair_angle(tf.directions) / equal_area_spacing(tf.J);
  CHECK(r > 0.5);
  CHECK(r < 2.0);
  CHECK_THROWS_AS(sphere_grid(11), Error);
  CHECK_THROWS_AS(TubeFamily::make(4, 4, 0.75, 20), Error);
}

TEST_CASE("direction index never misses a direction") {
  std::vector<Vec3> d = sphere_grid(3000);
  DirectionIndex idx(d);
  std::mt19937_64 rng(5);
  for (int it = 0; it < 200; ++it) {
    Vec3 u = random_unit(rng);
    if (it % 17 == 0) u = {0, 0, it % 2 ? 1.0 : -1.0};
    double a = std::pow(10.0, -2.5 + 2.7 * (it % 10) / 10.0);
    std::set<std::size_t> got;
    idx.near_axis({u[0] * 3, u[1] * 3, u[2] * 3}, a, [&](std::size_t j) { got.insert(j); });
    std::multiset<std::size_t> all;
    idx.near_axis(u, a, [&](std::size_t j) { all.insert(j); });
    for (std::size_t j = 0; j < d.size(); ++j) {
      CHECK(all.count(j) <= 1);
      if (std::abs(dot(d[j], u)) >= std::cos(a)) CHECK(got.count(j) == 1);
    }
  }
}

TEST_CASE("parameters: derived quantities and regime checks") {
  AnsatzParams p = AnsatzParams::make(8);
  CHECK(p.N2() == doctest::Approx(8));
  CHECK(p.N == doctest::Approx(0.125));
  CHECK(p.s0 == doctest::Approx(0.75 - std::log(std::log(8.0)) / std::log(8.0)).epsilon(1e-14));
  CHECK(p.t_star == doctest::Approx(-0.2 * std::pow(64.0, -0.25) * std::log(8.0)).epsilon(1e-14));
  // ln ln M / ln M peaks near M = e^e, so s0 only rises from M = 16 on
  CHECK(s0_of(16, 0.75) < s0_of(64, 0.75));
  CHECK(s0_of(64, 0.75) < s0_of(256, 0.75));
  CHECK(s0_of(256, 0.75) < 0.75);
  CHECK_THROWS_AS(AnsatzParams::make(8, 0.55), Error);             // delta > 2 (s - 1/2)
  CHECK_THROWS_AS(AnsatzParams::make(8, 0.75, 0.3), Error);        // delta >= 1/4
  CHECK_THROWS_AS(AnsatzParams::make(8, 0.75, 0.2, 0.1), Error);   // mu < delta
  CHECK_THROWS_AS(AnsatzParams::make(8, 0.75, 0.2, 1, 0.5), Error);  // N > 1/M
  CHECK_THROWS_AS(AnsatzParams::make(6), Error);
}

TEST_CASE("f_b: examples, support, transport identity, disjoint v-supports") {
  AnsatzParams p = AnsatzParams::make(4);
  p.kappa = 1;
  const auto& e = p.tube.directions;
  const double N2 = p.N2(), A = p.tube_amplitude();
  CHECK(A == doctest::Approx(std::pow(4.0, 0.25) * std::pow(4.0, -2.75)));
  // brute force over all tubes at (0, 0, N2 e_0)
  Vec3 v0{N2 * e[0][0], N2 * e[0][1], N2 * e[0][2]};
  double brute = 0;
  for (std::size_t j = 0; j < e.size(); ++j) brute += tube_profile(p, j, 0, {0, 0, 0}, v0);
  CHECK(brute == doctest::Approx(1.0));
  CHECK(f_b_eval(p, 0, {0, 0, 0}, v0) == doctest::Approx(A * brute).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ux(-2, 2), ut(-0.25, 0.25), ur(0, 1);
  for (int it = 0; it < 300; ++it) {
    Vec3 u = random_unit(rng);
    double vn = it % 3 == 0 ? N2 * (ur(rng) < 0.5 ? 0.85 : 1.2) : N2 * (0.9 + 0.2 * ur(rng));
    Vec3 v{vn * u[0], vn * u[1], vn * u[2]};
    if (it % 3 == 0) {
      CHECK(f_b_eval(p, ut(rng), {ux(rng), ux(rng), ux(rng)}, v) == 0.0);
      continue;
    }
    // place v inside a tube's v-support half of the time
    if (it % 2 == 0) {
      const Vec3& ej = e[it % e.size()];
      Vec3 a, b;
      frame(ej, a, b);
      double r = 0.9 * ur(rng) / p.M(), ph = 2 * kPi * ur(rng), z = N2 * (0.92 + 0.16 * ur(rng));
      for (int k = 0; k < 3; ++k) v[k] = z * ej[k] + r * (std::cos(ph) * a[k] + std::sin(ph) * b[k]);
    }
    double t = ut(rng);
    Vec3 x{ux(rng), ux(rng), ux(rng)};
    double tube_x = (ur(rng) - 0.5) * 2 * N2;
    if (it % 2 == 0)
      for (int k = 0; k < 3; ++k) x[k] = tube_x * e[it % e.size()][k] + v[k] * t + 0.05 * ux(rng);
    Vec3 y{x[0] - v[0] * t, x[1] - v[1] * t, x[2] - v[2] * t};
    double lhs = f_b_eval(p, t, x, v), rhs = f_b_eval(p, 0, y, v);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1e-300, std::abs(rhs)));
    // at most one tube owns v
    int owners = 0;
    for (std::size_t j = 0; j < e.size(); ++j)
      if (tube_profile(p, j, 0, {0, 0, 0}, v) > 0 || tube_profile(p, j, t, x, v) > 0) ++owners;
    CHECK(owners <= 1);
  }
}

TEST_CASE("rho_b matches direct velocity quadrature of f_b") {
  AnsatzParams p = AnsatzParams::make(4);
  const double M = p.M(), N2 = p.N2();
  std::vector<double> zr, wr, zz, wz;
  gauss_legendre(16, 0, 1 / M, zr, wr);
  gauss_legendre(24, 0.9 * N2, 1.1 * N2, zz, wz);
  const int nphi = 32;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-0.4, 0.4);
  for (int it = 0; it < 4; ++it) {
    double t = it == 0 ? 0.0 : p.t_star * (0.3 * it);
    Vec3 x{ux(rng), ux(rng), ux(rng)};
    double s = 0;
    for (std::size_t j = 0; j < p.tube.directions.size(); ++j) {
      const Vec3& e = p.tube.directions[j];
      Vec3 a, b;
      frame(e, a, b);
      for (std::size_t iz = 0; iz < zz.size(); ++iz)
        for (std::size_t ir = 0; ir < zr.size(); ++ir)
          for (int k = 0; k < nphi; ++k) {
            double ph = 2 * kPi * (k + 0.5) / nphi, r = zr[ir];
            Vec3 v;
            for (int c = 0; c < 3; ++c) v[c] = zz[iz] * e[c] + r * (std::cos(ph) * a[c] + std::sin(ph) * b[c]);
            s += wz[iz] * wr[ir] * r * (2 * kPi / nphi) * tube_profile(p, j, t, x, v);
          }
    }
    double ref = p.tube_amplitude() * s;
    CHECK(std::abs(rho_b_eval(p, t, x) - ref) < 1e-4 * ref);
  }
  CHECK_THROWS_AS(rho_b_eval(p, 0.3, {0, 0, 0}), Error);
}

TEST_CASE("rho_b: centre density law, support, two-sided overlap profile") {
  std::vector<double> centre;
  for (double M : {4.0, 8.0, 16.0}) {
    AnsatzParams p = AnsatzParams::make(M);
    p.kappa = 1;
    centre.push_back(rho_b_eval(p, 0, {0, 0, 0}) / std::pow(M * p.N2(), 1 - p.s()));
    CHECK(rho_b_eval(p, 0, {1.3 * p.N2(), 0, 0}) == 0.0);
    CHECK(rho_b_eval(p, -0.1, {0, 0.8 * p.N2(), 1.1 * p.N2()}) == 0.0);
  }
  for (double c : centre) CHECK(std::abs(c / centre[1] - 1) < 0.2);

  for (double M : {4.0, 8.0}) {
    AnsatzParams p = AnsatzParams::make(M);
    double c0 = rho_b_eval(p, 0, {0, 0, 0});
    double lo = 1e300, hi = 0;
    for (int i = 0; i <= 40; ++i) {
      double r = 0.5 * p.N2() * i / 40;
      double law = std::pow((1 / M) / (r + 1 / M), 2);
      double q = rho_b_shell_average(p, 0, r) / c0 / law;
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    CHECK(hi / lo < 30);
  }
  // the per-tube angular reduction agrees with a brute-force sphere average
  AnsatzParams p = AnsatzParams::make(4);
  for (double r : {0.1, 0.7}) {
    std::vector<Vec3> d = sphere_grid(40000);
    double s = 0;
    for (const Vec3& u : d) s += rho_b_eval(p, -0.05, {r * u[0], r * u[1], r * u[2]});
    s /= d.size();
    CHECK(std::abs(rho_b_shell_average(p, -0.05, r) / s - 1) < 0.02);
  }
}

TEST_CASE("beta: zero at t = 0, Taylor limit, bound constant, slice table") {
  std::vector<double> bound;
  for (double M : {4.0, 8.0, 16.0}) {
    AnsatzParams p = AnsatzParams::make(M);
    Vec3 x{0.2 / M, -0.1 / M, 0.3 / M};
    CHECK(beta_eval(p, 0, x) == 0.0);
    double t = 0.01 * p.t_star;
    double b = beta_eval(p, t, x), taylor = t * rho_b_eval(p, 0, x);
    CHECK(std::abs(b / taylor - 1) < 0.05);
    double sup = 0;
    for (double r : {0.0, 0.25 / M, 0.5 / M})
      sup = std::max(sup, std::abs(beta_eval(p, p.t_star, {r, 0, 0})));
    bound.push_back(sup / (std::abs(p.t_star) * std::pow(M * p.N2(), 1 - p.s())));
    if (M == 16) break;
    BetaSlice slice(p, 0.6 * p.t_star);
    std::mt19937_64 rng{static_cast<unsigned>(M)};
    std::uniform_real_distribution<double> u(-1.5 / M, 1.5 / M), far(-p.N2(), p.N2());
    for (int it = 0; it < 20; ++it) {
      Vec3 y = it < 12 ? Vec3{u(rng), u(rng), u(rng)} : Vec3{far(rng), far(rng), far(rng)};
      double ref = beta_eval(p, 0.6 * p.t_star, y);
      CHECK(std::abs(slice(y) - ref) <= 1e-6 * std::abs(beta_eval(p, 0.6 * p.t_star, {0, 0, 0})));
    }
    CHECK_THROWS_AS(beta_eval(p, 0.01, x), Error);
    CHECK_THROWS_AS(beta_eval(p, 1.5 * p.t_star, x), Error);
  }
  for (double c : bound) CHECK(std::abs(c / bound[1] - 1) < 0.3);
}

TEST_CASE("f_r: examples, defining ODE, monotonicity") {
  AnsatzParams p = AnsatzParams::make(4);
  const double M = p.M();
  Vec3 x{0.1 / M, 0.2 / M, -0.3 / M}, v{0.2 * p.N, -0.1 * p.N, 0.05 * p.N};
  double pure = p.cavity_amplitude() * bump(M * norm(x)) * bump(norm(v) / p.N);
  CHECK(f_r_eval(p, 0, x, v) == doctest::Approx(pure).epsilon(1e-15));
  CHECK(f_r_eval(p, p.t_star, x, {p.N, 0, 0}) == 0.0);
  CHECK(f_r_eval(p, p.t_star, x, {0, 1.2 * p.N, 0}) == 0.0);
  for (double t : {0.3 * p.t_star, 0.7 * p.t_star}) {
    double h = 1e-4 * std::abs(p.t_star);
    double d = (f_r_eval(p, t + h, x, v) - f_r_eval(p, t - h, x, v)) / (2 * h);
    double f = f_r_eval(p, t, x, v);
    CHECK(std::abs(d + f * rho_b_eval(p, t, x)) < 1e-4 * std::abs(f * rho_b_eval(p, t, x)));
  }
  // deflation forward in time: nonincreasing in t on [t_star, 0]
  double prev = 1e300;
  for (int k = 0; k <= 20; ++k) {
    double t = p.t_star * (1 - k / 20.0);
    double f = f_r_eval(p, t, x, v);
    CHECK(f <= prev * (1 + 1e-14));
    prev = f;
  }
  CHECK(f_r_eval(p, p.t_star, x, v) > f_r_eval(p, 0, x, v));
  double beta = beta_eval(p, p.t_star, x);
  CHECK(f_r_with_beta(p, beta, x, v) == doctest::Approx(f_r_eval(p, p.t_star, x, v)).epsilon(1e-14));
}

TEST_CASE("grid samplers agree with the pointwise evaluators") {
  AnsatzParams p = AnsatzParams::make(4);
  GridSpec g = GridSpec::make({4, 4, 4}, {16, 16, 16}, 0.5, 5.0);
  double t = 0.5 * p.t_star;
  PhaseField fa = f_a_to_grid(p, t, g), fr = f_r_to_grid(p, t, g), fb = f_b_to_grid(p, t, g);
  double err = 0, ref = 0;
  for (std::size_t iv = 0; iv < g.nv_total(); ++iv)
    for (std::size_t ix = 0; ix < g.nx_total(); ++ix) {
      Vec3 x = g.x_point(ix), v = g.v_point(iv);
      double e = f_a_eval(p, t, x, v);
      err = std::max(err, std::abs(fa.at(ix, iv).real() - e));
      ref = std::max(ref, std::abs(e));
      // disjoint v-supports
      CHECK(fr.at(ix, iv).real() * fb.at(ix, iv).real() == 0.0);
    }
  CHECK(ref > 0);
  CHECK(err < 1e-6 * ref);
}

TEST_CASE("f_err terms: list, guard, loss scaling") {
  AnsatzParams p = AnsatzParams::make(4);
  CollisionConfig cfg;
  GridSpec coarse = GridSpec::make({4, 4, 4}, {4, 4, 4}, 0.5, 0.5);
  CHECK_THROWS_AS(f_err_terms(p, 0, coarse, cfg), Error);
  GridSpec g = GridSpec::make({8, 8, 8}, {8, 8, 8}, 0.25, 0.25);
  auto t0 = f_err_terms(p, 0, g, cfg);
  auto t1 = f_err_terms(p, p.t_star, g, cfg);
  REQUIRE(t0.size() == 5);
  for (const auto& [name, f] : t0) CHECK(name != "v.grad_x f_b");
  CHECK(t0[2].first == "Q-(f_r,f_r)");
  // Q-(f_r, f_r) carries exp(-2 beta)
  BetaSlice beta(p, p.t_star);
  int checked = 0;
  for (std::size_t iv = 0; iv < g.nv_total(); ++iv)
    for (std::size_t ix = 0; ix < g.nx_total(); ++ix) {
      double a = t0[2].second.at(ix, iv).real();
      if (a == 0) continue;
      double b = t1[2].second.at(ix, iv).real();
      CHECK(std::abs(b / a / std::exp(-2 * beta(g.x_point(ix))) - 1) < 1e-6);
      ++checked;
    }
  CHECK(checked > 0);
  // ||Q-(f_b, f_b)|| ~ M^{1/2 - 2s} N2^{1/2 - 2s}
  AnsatzParams p8 = AnsatzParams::make(8);
  double slope = std::log(loss_bb_l2(p8, 2) / loss_bb_l2(p, 2)) / std::log(2.0);
  CHECK(std::abs(slope - (0.5 - 2 * 0.75) * 2) < 0.2);
}

TEST_CASE("semi-analytic norms") {
  AnsatzParams p = AnsatzParams::make(4);
  // q = 0 tube part by Plancherel: products of bump moments
  double m12 = BumpProfile::moment(1, 2), m02 = BumpProfile::moment(0, 2);
  double M = p.M(), N2 = p.N2();
  double tube_l2 = std::sqrt(p.tube.J) * p.tube_amplitude() * (2 * kPi * m12 / (M * M)) * (2 * m02) *
                   std::sqrt(N2 * N2 / 10);
  CHECK(fa_sobolev_norm(p, 0, 0).tubes == doctest::Approx(tube_l2).epsilon(1e-6));
  // tube part does not depend on t
  CHECK(fa_sobolev_norm(p, p.t_star, p.s0).tubes == doctest::Approx(fa_sobolev_norm(p, 0, p.s0).tubes));

  // cavity part against a brute-force grid norm of f_r
  GridSpec g = GridSpec::make({16, 16, 16}, {16, 16, 16}, 1.25 / M, 1.25 * p.N);
  PhaseField fr = f_r_to_grid(p, p.t_star, g);
  double grid = sobolev_norm(fr, p.s0, p.s0);
  CHECK(std::abs(fa_sobolev_norm(p, p.t_star, p.s0).cavity / grid - 1) < 0.02);

  // |f_a(0)| ln M of order one and stable, and growth towards t_star
  std::vector<double> scaled, growth;
  for (double m : {4.0, 8.0}) {
    AnsatzParams q = AnsatzParams::make(m);
    double n0 = fa_sobolev_norm(q, 0, q.s0).total();
    scaled.push_back(n0 * std::log(m));
    growth.push_back(fa_sobolev_norm(q, q.t_star, q.s0).total() / n0);
  }
  CHECK(std::abs(scaled[1] / scaled[0] - 1) < 0.5);
  CHECK(growth[0] > 1);
  CHECK(growth[1] > growth[0]);

  ZParts z0 = fa_z_parts(p, 0), z1 = fa_z_parts(p, p.t_star);
  CHECK(z0.l2 > 0);
  CHECK(z1.l1inf > z0.l1inf);
  CHECK(z1.grad_l2 > z0.grad_l2);
}
