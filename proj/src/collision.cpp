#include "collision.hpp"

#include <cmath>

#include "fft.hpp"
#include "parallel.hpp"

namespace klab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

std::pair<Vec3, Vec3> frame(const Vec3& w) {
  Vec3 t = std::abs(w[0]) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  double d = dot(t, w);
  Vec3 e1{t[0] - d * w[0], t[1] - d * w[1], t[2] - d * w[2]};
  double n = std::sqrt(dot(e1, e1));
  for (double& c : e1) c /= n;
  Vec3 e2{w[1] * e1[2] - w[2] * e1[1], w[2] * e1[0] - w[0] * e1[2], w[0] * e1[1] - w[1] * e1[0]};
  return {e1, e2};
}

std::vector<cplx> site_values(const PhaseField& f, std::size_t ix) {
  std::vector<cplx> out(f.nvt());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = f.at(ix, j);
  return out;
}

void check_pair(const PhaseField& f, const PhaseField& g) {
  require(f.grid == g.grid, ErrorCode::GridMismatch, "grid mismatch");
}

// ---- spectral-side evaluators of f~ at off-grid frequencies

class SpectralSampler {
 public:
  SpectralSampler(const GridSpec& g, const std::vector<cplx>& vals, Interpolation kind, int pad)
      : g_(g), kind_(kind), pad_(pad), c_(std::pow(2 * kPi, -1.5) * g.dv3()) {
    for (int a = 0; a < 3; ++a) n_[a] = g.nv[a];
    if (kind_ == Interpolation::Trig) {
      vals_ = vals;
      return;
    }
    for (int a = 0; a < 3; ++a) m_[a] = pad_ * n_[a];
    fine_.assign(std::size_t(m_[0]) * m_[1] * m_[2], 0.0);
    for (int k2 = 0; k2 < n_[2]; ++k2)
      for (int k1 = 0; k1 < n_[1]; ++k1)
        for (int k0 = 0; k0 < n_[0]; ++k0)
          fine_[k0 + m_[0] * (k1 + std::size_t(m_[1]) * k2)] = vals[k0 + n_[0] * (k1 + std::size_t(n_[1]) * k2)];
    dft3_batch(fine_.data(), m_, 1, 1, fine_.size(), +1);
    for (int k2 = 0; k2 < m_[2]; ++k2)
      for (int k1 = 0; k1 < m_[1]; ++k1)
        for (int k0 = 0; k0 < m_[0]; ++k0) {
          int mm[3] = {GridSpec::signed_mode(k0, m_[0]), GridSpec::signed_mode(k1, m_[1]),
                       GridSpec::signed_mode(k2, m_[2])};
          double ph = 0;
          for (int a = 0; a < 3; ++a) ph -= kPi * mm[a] * (n_[a] > 1 ? 1.0 : 0.0) / pad_;
          fine_[k0 + m_[0] * (k1 + std::size_t(m_[1]) * k2)] *= c_ * cplx(std::cos(ph), std::sin(ph));
        }
  }

  cplx operator()(const Vec3& z) const { return kind_ == Interpolation::Trig ? trig(z) : trilinear(z); }

 private:
  cplx trig(const Vec3& z) const {
    cplx E[3][64];
    for (int a = 0; a < 3; ++a) {
      double v0 = g_.v(a, 0), h = g_.hv(a);
      cplx e0(std::cos(z[a] * v0), std::sin(z[a] * v0)), st(std::cos(z[a] * h), std::sin(z[a] * h));
      cplx e = e0;
      for (int k = 0; k < n_[a]; ++k) {
        E[a][k] = e;
        e *= st;
      }
    }
    cplx acc = 0;
    std::size_t idx = 0;
    for (int k2 = 0; k2 < n_[2]; ++k2) {
      cplx s1 = 0;
      for (int k1 = 0; k1 < n_[1]; ++k1) {
        cplx s0 = 0;
        for (int k0 = 0; k0 < n_[0]; ++k0) s0 += E[0][k0] * vals_[idx++];
        s1 += E[1][k1] * s0;
      }
      acc += E[2][k2] * s1;
    }
    return c_ * acc;
  }

  cplx trilinear(const Vec3& z) const {
    int i0[3];
    double t[3];
    for (int a = 0; a < 3; ++a) {
      double u = z[a] / (g_.dxi(a) / pad_);
      double fl = std::floor(u);
      t[a] = u - fl;
      i0[a] = int(fl);
    }
    cplx acc = 0;
    for (int c = 0; c < 8; ++c) {
      double w = 1;
      std::size_t off = 0, mul = 1;
      for (int a = 0; a < 3; ++a) {
        int b = (c >> a) & 1;
        w *= b ? t[a] : 1 - t[a];
        int k = (i0[a] + b) % m_[a];
        if (k < 0) k += m_[a];
        off += mul * std::size_t(k);
        mul *= std::size_t(m_[a]);
      }
      if (w != 0) acc += w * fine_[off];
    }
    return acc;
  }

  const GridSpec& g_;
  Interpolation kind_;
  int pad_;
  double c_;
  int n_[3];
  Idx3 m_{1, 1, 1};
  std::vector<cplx> vals_, fine_;
};

// ---- physical-side evaluator: trig upsampling then 4-point Lagrange,
// or plain trilinear on the samples. Zero outside the box.

class PhysicalSampler {
 public:
  PhysicalSampler(const GridSpec& g, const std::vector<cplx>& vals, Interpolation kind, int up)
      : g_(g), L_(g.Lv) {
    if (kind == Interpolation::Trilinear) {
      up_ = 1;
      for (int a = 0; a < 3; ++a) m_[a] = g.nv[a];
      data_ = vals;
      cubic_ = false;
      return;
    }
    up_ = up;
    cubic_ = true;
    Idx3 n = g.nv;
    for (int a = 0; a < 3; ++a) m_[a] = up_ * n[a];
    std::vector<cplx> spec = vals;
    dft3_batch(spec.data(), n, 1, 1, spec.size(), -1);
    data_.assign(std::size_t(m_[0]) * m_[1] * m_[2], 0.0);
    const double scale = 1.0 / double(spec.size());
    for (int k2 = 0; k2 < n[2]; ++k2)
      for (int k1 = 0; k1 < n[1]; ++k1)
        for (int k0 = 0; k0 < n[0]; ++k0) {
          cplx val = spec[k0 + n[0] * (k1 + std::size_t(n[1]) * k2)] * scale;
          int ks[3] = {k0, k1, k2};
          // Nyquist coefficients are split evenly between +n/2 and -n/2.
          int nsplit = 0;
          for (int a = 0; a < 3; ++a)
            if (2 * ks[a] == n[a]) ++nsplit;
          double share = 1.0 / double(1 << nsplit);
          for (int mask = 0; mask < (1 << 3); ++mask) {
            bool skip = false;
            std::size_t off = 0, mul = 1;
            for (int a = 0; a < 3; ++a) {
              int bit = (mask >> a) & 1;
              bool nyq = 2 * ks[a] == n[a];
              if (bit && !nyq) {
                skip = true;
                break;
              }
              int m = GridSpec::signed_mode(ks[a], n[a]);
              if (nyq && bit) m = -m;
              int idx = m >= 0 ? m : m + m_[a];
              off += mul * std::size_t(idx);
              mul *= std::size_t(m_[a]);
            }
            if (!skip) data_[off] += val * share;
          }
        }
    dft3_batch(data_.data(), m_, 1, 1, data_.size(), +1);
  }

  cplx operator()(const Vec3& y) const {
    double u[3];
    for (int a = 0; a < 3; ++a) {
      if (y[a] < -L_ || y[a] >= L_) return 0.0;
      u[a] = (y[a] + L_) / (g_.hv(a) / up_);
    }
    if (!cubic_) {
      cplx acc = 0;
      int i0[3];
      double t[3];
      for (int a = 0; a < 3; ++a) {
        double fl = std::floor(u[a]);
        i0[a] = int(fl);
        t[a] = u[a] - fl;
      }
      for (int c = 0; c < 8; ++c) {
        double w = 1;
        std::size_t off = 0, mul = 1;
        bool out = false;
        for (int a = 0; a < 3; ++a) {
          int b = (c >> a) & 1;
          w *= b ? t[a] : 1 - t[a];
          int k = i0[a] + b;
          if (k >= m_[a]) out = true;  // beyond the last sample: zero
          off += mul * std::size_t(std::min(k, m_[a] - 1));
          mul *= std::size_t(m_[a]);
        }
        if (!out && w != 0) acc += w * data_[off];
      }
      return acc;
    }
    int j0[3];
    double w[3][4];
    for (int a = 0; a < 3; ++a) {
      double fl = std::floor(u[a]);
      j0[a] = int(fl) - 1;
      double t = u[a] - fl;
      w[a][0] = -t * (t - 1) * (t - 2) / 6;
      w[a][1] = (t + 1) * (t - 1) * (t - 2) / 2;
      w[a][2] = -(t + 1) * t * (t - 2) / 2;
      w[a][3] = (t + 1) * t * (t - 1) / 6;
    }
    cplx acc = 0;
    for (int q2 = 0; q2 < 4; ++q2) {
      int k2 = (j0[2] + q2 + m_[2]) % m_[2];
      cplx s1 = 0;
      for (int q1 = 0; q1 < 4; ++q1) {
        int k1 = (j0[1] + q1 + m_[1]) % m_[1];
        const cplx* row = data_.data() + std::size_t(m_[0]) * (k1 + std::size_t(m_[1]) * k2);
        cplx s0 = 0;
        for (int q0 = 0; q0 < 4; ++q0) s0 += w[0][q0] * row[(j0[0] + q0 + m_[0]) % m_[0]];
        s1 += w[1][q1] * s0;
      }
      acc += w[2][q2] * s1;
    }
    return acc;
  }

 private:
  const GridSpec& g_;
  double L_;
  int up_ = 1;
  bool cubic_ = false;
  Idx3 m_{1, 1, 1};
  std::vector<cplx> data_;
};

}  // namespace

SphereQuadrature SphereQuadrature::fibonacci(int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "quadrature needs at least one node");
  SphereQuadrature q;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / n;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden * i;
    q.nodes.push_back({r * std::cos(phi), r * std::sin(phi), z});
    q.weights.push_back(4 * kPi / n);
  }
  return q;
}

SphereQuadrature SphereQuadrature::axes() {
  SphereQuadrature q;
  for (int a = 0; a < 3; ++a)
    for (int sgn : {1, -1}) {
      Vec3 w{0, 0, 0};
      w[a] = sgn;
      q.nodes.push_back(w);
      q.weights.push_back(4 * kPi / 6);
    }
  return q;
}

void CollisionConfig::validate() const {
  require(dealias_margin >= 0 && dealias_margin <= 0.5, ErrorCode::InvalidArgument,
          "dealias_margin must lie in [0, 1/2]");
  require(quadrature.size() > 0, ErrorCode::InvalidArgument, "empty sphere quadrature");
  require(pad_factor >= 1, ErrorCode::InvalidArgument, "pad_factor must be >= 1");
  require(direct_upsample >= 1, ErrorCode::InvalidArgument, "direct_upsample must be >= 1");
}

std::pair<Vec3, Vec3> post_collision(const Vec3& u, const Vec3& v, const Vec3& w) {
  require(std::abs(dot(w, w) - 1.0) < 1e-12, ErrorCode::InvalidArgument, "omega must be a unit vector");
  double p = w[0] * (v[0] - u[0]) + w[1] * (v[1] - u[1]) + w[2] * (v[2] - u[2]);
  Vec3 us, vs;
  for (int a = 0; a < 3; ++a) {
    us[a] = u[a] + p * w[a];
    vs[a] = v[a] - p * w[a];
  }
  return {us, vs};
}

std::vector<cplx> density(const PhaseField& g) {
  require(g.tag == Tag::Physical_xv, ErrorCode::TagMismatch, "density needs Physical_xv");
  const std::size_t nxt = g.nxt();
  std::vector<cplx> rho(nxt, 0.0);
  parallel_for(nxt, [&](std::size_t i) {
    cplx s = 0;
    for (std::size_t j = 0; j < g.nvt(); ++j) s += g.at(i, j);
    rho[i] = s * g.grid.dv3();
  });
  return rho;
}

PhaseField loss_term(const PhaseField& f, const PhaseField& g) {
  check_pair(f, g);
  PhaseField fp = to_tag(f, Tag::Physical_xv), gp = to_tag(g, Tag::Physical_xv);
  std::vector<cplx> rho = density(gp);
  PhaseField out = fp;
  const std::size_t nxt = out.nxt();
  parallel_for(out.nvt(), [&](std::size_t j) {
    cplx* d = out.slice(j);
    for (std::size_t i = 0; i < nxt; ++i) d[i] *= 4 * kPi * rho[i];
  });
  return out;
}

PhaseField loss_term_spectral(const PhaseField& f, const PhaseField& g) {
  check_pair(f, g);
  PhaseField ft = to_tag(f, Tag::Spectral_x_xi), gt = to_tag(g, Tag::Spectral_x_xi);
  const GridSpec& G = ft.grid;
  std::size_t j0 = 0;  // xi = 0 sits at index 0 in FFT ordering
  (void)G;
  PhaseField out = ft;
  const std::size_t nxt = out.nxt();
  const double c = std::pow(2 * kPi, 1.5) * 4 * kPi;
  parallel_for(out.nvt(), [&](std::size_t j) {
    cplx* d = out.slice(j);
    for (std::size_t i = 0; i < nxt; ++i) d[i] *= c * gt.at(i, j0);
  });
  return out;
}

PhaseField gain_term_spectral(const PhaseField& f, const PhaseField& g, const CollisionConfig& cfg,
                              double* imag_residue) {
  check_pair(f, g);
  cfg.validate();
  require(f.grid.storage == Storage::Full, ErrorCode::StorageMode, "gain requires full field");
  PhaseField fp = to_tag(f, Tag::Physical_xv), gp = to_tag(g, Tag::Physical_xv);
  const GridSpec& G = fp.grid;
  const double R = (1.0 - cfg.dealias_margin) * G.xi_radius() * (1.0 - 1e-12);
  std::vector<std::size_t> active;
  for (std::size_t j = 0; j < fp.nvt(); ++j) {
    Vec3 xi = G.xi_point(j);
    if (std::sqrt(dot(xi, xi)) < R) active.push_back(j);
  }
  PhaseField out(G, Tag::Spectral_x_xi);
  const SphereQuadrature& Q = cfg.quadrature;
  const double pref = std::pow(2 * kPi, 1.5);
  parallel_for(fp.nxt(), [&](std::size_t ix) {
    std::vector<cplx> fv = site_values(fp, ix), gv = site_values(gp, ix);
    SpectralSampler F(G, fv, cfg.interpolation, cfg.pad_factor);
    SpectralSampler H(G, gv, cfg.interpolation, cfg.pad_factor);
    for (std::size_t j : active) {
      Vec3 xi = G.xi_point(j);
      double r = std::sqrt(dot(xi, xi));
      cplx acc = 0;
      for (std::size_t q = 0; q < Q.size(); ++q) {
        const Vec3& w = Q.nodes[q];
        Vec3 a, b;
        if (cfg.form == GainForm::Omega) {
          double p = dot(w, xi);
          for (int k = 0; k < 3; ++k) {
            b[k] = p * w[k];
            a[k] = xi[k] - b[k];
          }
        } else {
          for (int k = 0; k < 3; ++k) {
            a[k] = 0.5 * (xi[k] + r * w[k]);
            b[k] = 0.5 * (xi[k] - r * w[k]);
          }
        }
        acc += Q.weights[q] * F(a) * H(b);
      }
      out.at(ix, j) = pref * acc;
    }
  });
  PhaseField phys = transform(out, Axes::V, Direction::Inverse);
  double re = 0, im = 0;
  for (cplx& z : phys.data) {
    re += z.real() * z.real();
    im += z.imag() * z.imag();
    z = z.real();
  }
  if (imag_residue) *imag_residue = re > 0 ? std::sqrt(im / re) : std::sqrt(im);
  return phys;
}

PhaseField gain_term_direct(const PhaseField& f, const PhaseField& g, const CollisionConfig& cfg) {
  check_pair(f, g);
  cfg.validate();
  const GridSpec& G = f.grid;
  for (int a = 0; a < 3; ++a)
    require(G.nv[a] <= cfg.direct_max_nv, ErrorCode::ResolutionGuard,
            "direct gain: v resolution exceeds the cost guard");
  PhaseField fp = to_tag(f, Tag::Physical_xv), gp = to_tag(g, Tag::Physical_xv);
  const SphereQuadrature& Q = cfg.quadrature;
  double h = std::min({G.hv(0), G.hv(1), G.hv(2)});
  const double P = std::sqrt(3.0) * G.Lv;
  const int na = int(std::ceil(P / h));
  PhaseField out(G);
  // Per node: Q+(v) += w * [int f(v + a w) da] * [int_{w-perp} g(p w + y) dy], p = w.v,
  // i.e. the u-integral taken in the frame aligned with w.
  parallel_for(fp.nxt(), [&](std::size_t ix) {
    std::vector<cplx> fv = site_values(fp, ix), gv = site_values(gp, ix);
    PhysicalSampler F(G, fv, cfg.interpolation, cfg.direct_upsample),
        H(G, gv, cfg.interpolation, cfg.direct_upsample);
    std::vector<cplx> acc(fp.nvt(), 0.0);
    for (std::size_t q = 0; q < Q.size(); ++q) {
      const Vec3& w = Q.nodes[q];
      auto [e1, e2] = frame(w);
      for (std::size_t j = 0; j < fp.nvt(); ++j) {
        Vec3 v = G.v_point(j);
        double p = dot(w, v);
        Vec3 base{v[0] - p * w[0], v[1] - p * w[1], v[2] - p * w[2]};
        cplx X = 0;
        for (int i = -na; i <= na; ++i) {
          double a = i * h;
          X += F({base[0] + a * w[0], base[1] + a * w[1], base[2] + a * w[2]});
        }
        X *= h;
        cplx Rg = 0;
        for (int ib = -na; ib <= na; ++ib) {
          double b = ib * h;
          for (int ic = -na; ic <= na; ++ic) {
            double c = ic * h;
            if (b * b + c * c > P * P) continue;
            Rg += H({p * w[0] + b * e1[0] + c * e2[0], p * w[1] + b * e1[1] + c * e2[1],
                     p * w[2] + b * e1[2] + c * e2[2]});
          }
        }
        Rg *= h * h;
        acc[j] += Q.weights[q] * X * Rg;
      }
    }
    for (std::size_t j = 0; j < fp.nvt(); ++j) out.at(ix, j) = acc[j].real();
  });
  return out;
}

PhaseField collision(const PhaseField& f, const PhaseField& g, const CollisionConfig& cfg, GainMethod method) {
  PhaseField gain = method == GainMethod::Spectral ? gain_term_spectral(f, g, cfg) : gain_term_direct(f, g, cfg);
  return axpy(-1.0, loss_term(f, g), gain);
}

namespace {
Moments moments_impl(const PhaseField& f, bool absolute) {
  PhaseField p = to_tag(f, Tag::Physical_xv);
  const GridSpec& G = p.grid;
  struct Acc {
    double m = 0, px = 0, py = 0, pz = 0, e = 0;
    Acc& operator+=(const Acc& o) {
      m += o.m;
      px += o.px;
      py += o.py;
      pz += o.pz;
      e += o.e;
      return *this;
    }
  };
  Acc s = ordered_sum<Acc>(p.nvt(), [&](std::size_t j) {
    Vec3 v = G.v_point(j);
    double col = 0;
    const cplx* d = p.slice(j);
    for (std::size_t i = 0; i < p.nxt(); ++i) col += absolute ? std::abs(d[i]) : d[i].real();
    Acc a;
    double v2 = dot(v, v);
    a.m = col;
    a.px = col * (absolute ? std::abs(v[0]) : v[0]);
    a.py = col * (absolute ? std::abs(v[1]) : v[1]);
    a.pz = col * (absolute ? std::abs(v[2]) : v[2]);
    a.e = col * v2;
    return a;
  });
  double c = G.dx3() * G.dv3();
  Moments m;
  m.mass = s.m * c;
  m.momentum = {s.px * c, s.py * c, s.pz * c};
  m.energy = s.e * c;
  return m;
}
}  // namespace

Moments moments(const PhaseField& f) { return moments_impl(f, false); }
Moments abs_moments(const PhaseField& f) { return moments_impl(f, true); }

}  // namespace klab
