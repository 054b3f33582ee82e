#include "spectral.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fft.hpp"
#include "parallel.hpp"

namespace klab {

namespace {
constexpr double kPi = 3.14159265358979323846;

bool pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

double axis_dual(int n, double L) { return 2.0 * kPi / (n * (2.0 * L / n)); }

int parity3(const Idx3& k) { return (k[0] + k[1] + k[2]) & 1; }
}  // namespace

const char* tag_name(Tag t) {
  switch (t) {
    case Tag::Physical_xv: return "Physical_xv";
    case Tag::Spectral_eta_v: return "Spectral_eta_v";
    case Tag::Spectral_x_xi: return "Spectral_x_xi";
    case Tag::Spectral_eta_xi: return "Spectral_eta_xi";
  }
  return "?";
}

GridSpec GridSpec::make(Idx3 nx, Idx3 nv, double Lx, double Lv, Storage st, std::size_t full_cap) {
  for (int a = 0; a < 3; ++a) {
    require(pow2(nx[a]) && pow2(nv[a]), ErrorCode::InvalidArgument, "grid resolutions must be powers of two");
  }
  require(Lx > 0 && Lv > 0 && std::isfinite(Lx) && std::isfinite(Lv), ErrorCode::InvalidArgument,
          "box half-widths must be positive");
  GridSpec g;
  g.nx = nx;
  g.nv = nv;
  g.Lx = Lx;
  g.Lv = Lv;
  g.storage = st;
  require(st != Storage::Full || g.total() <= full_cap, ErrorCode::StorageMode,
          "grid exceeds the Full storage cap; use VSliced");
  return g;
}

double GridSpec::deta(int a) const { return axis_dual(nx[a], Lx); }
double GridSpec::dxi(int a) const { return axis_dual(nv[a], Lv); }

Idx3 GridSpec::x_index(std::size_t i) const {
  return {int(i % nx[0]), int((i / nx[0]) % nx[1]), int(i / (std::size_t(nx[0]) * nx[1]))};
}
Idx3 GridSpec::v_index(std::size_t j) const {
  return {int(j % nv[0]), int((j / nv[0]) % nv[1]), int(j / (std::size_t(nv[0]) * nv[1]))};
}
Vec3 GridSpec::x_point(std::size_t i) const {
  Idx3 k = x_index(i);
  return {x(0, k[0]), x(1, k[1]), x(2, k[2])};
}
Vec3 GridSpec::v_point(std::size_t j) const {
  Idx3 k = v_index(j);
  return {v(0, k[0]), v(1, k[1]), v(2, k[2])};
}
Vec3 GridSpec::eta_point(std::size_t i) const {
  Idx3 k = x_index(i);
  return {eta(0, k[0]), eta(1, k[1]), eta(2, k[2])};
}
Vec3 GridSpec::xi_point(std::size_t j) const {
  Idx3 k = v_index(j);
  return {xi(0, k[0]), xi(1, k[1]), xi(2, k[2])};
}
double GridSpec::xi_radius() const {
  double r = 1e300;
  for (int a = 0; a < 3; ++a)
    if (nv[a] > 1) r = std::min(r, 0.5 * nv[a] * dxi(a));
  return r;
}

double PhaseField::cell_volume() const {
  double cx = x_spectral(tag) ? grid.deta3() : grid.dx3();
  double cv = v_spectral(tag) ? grid.dxi3() : grid.dv3();
  return cx * cv;
}

bool PhaseField::finite() const {
  for (const cplx& z : data)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

void Trajectory::append(double t, PhaseField f) {
  require(times.empty() || t > times.back(), ErrorCode::InvalidArgument, "trajectory times must increase");
  require(fields.empty() || fields.front().grid == f.grid, ErrorCode::GridMismatch,
          "trajectory fields must share one grid");
  times.push_back(t);
  fields.push_back(std::move(f));
}

// ---------------------------------------------------------------- transforms

namespace {

// Unitary continuous-FT approximation on one axis group. Forward on x uses
// e^{-i eta x}, forward on v uses e^{+i xi v}.
void apply_x(PhaseField& f, bool forward) {
  const GridSpec& g = f.grid;
  const std::size_t nxt = g.nx_total();
  const double c = forward ? std::pow(2 * kPi, -1.5) * g.dx3() : std::pow(2 * kPi, -1.5) * g.deta3();
  auto sign_fix = [&](cplx* d) {
    for (std::size_t i = 0; i < nxt; ++i) {
      double s = parity3(g.x_index(i)) ? -c : c;
      d[i] *= s;
    }
  };
  if (!forward) parallel_for(f.nvt(), [&](std::size_t iv) { sign_fix(f.slice(iv)); });
  dft3_batch(f.data.data(), g.nx, f.nvt(), 1, nxt, forward ? -1 : +1);
  if (forward) parallel_for(f.nvt(), [&](std::size_t iv) { sign_fix(f.slice(iv)); });
}

void apply_v(PhaseField& f, bool forward) {
  const GridSpec& g = f.grid;
  const std::size_t nxt = g.nx_total();
  const double c = forward ? std::pow(2 * kPi, -1.5) * g.dv3() : std::pow(2 * kPi, -1.5) * g.dxi3();
  auto sign_fix = [&]() {
    parallel_for(f.nvt(), [&](std::size_t iv) {
      double s = parity3(g.v_index(iv)) ? -c : c;
      cplx* d = f.slice(iv);
      for (std::size_t i = 0; i < nxt; ++i) d[i] *= s;
    });
  };
  if (!forward) sign_fix();
  dft3_batch(f.data.data(), g.nv, nxt, nxt, 1, forward ? +1 : -1);
  if (forward) sign_fix();
}

}  // namespace

PhaseField transform(const PhaseField& f, Axes axes, Direction dir) {
  const bool fwd = dir == Direction::Forward;
  const bool do_x = axes != Axes::V;
  const bool do_v = axes != Axes::X;
  if (do_x) require(x_spectral(f.tag) != fwd, ErrorCode::RedundantTransform, "redundant transform");
  if (do_v) require(v_spectral(f.tag) != fwd, ErrorCode::RedundantTransform, "redundant transform");
  PhaseField out = f;
  if (do_x) apply_x(out, fwd);
  if (do_v) apply_v(out, fwd);
  out.tag = make_tag(do_x ? fwd : x_spectral(f.tag), do_v ? fwd : v_spectral(f.tag));
  return out;
}

PhaseField to_tag(const PhaseField& f, Tag target) {
  PhaseField out = f;
  if (x_spectral(f.tag) != x_spectral(target)) apply_x(out, x_spectral(target));
  if (v_spectral(f.tag) != v_spectral(target)) apply_v(out, v_spectral(target));
  out.tag = target;
  return out;
}

PhaseField free_transport(const PhaseField& f, double t) {
  require(f.tag == Tag::Physical_xv || f.tag == Tag::Spectral_eta_v, ErrorCode::TagMismatch,
          "free_transport needs Physical_xv or Spectral_eta_v");
  PhaseField h = f.tag == Tag::Physical_xv ? transform(f, Axes::X, Direction::Forward) : f;
  const GridSpec& g = h.grid;
  const std::size_t nxt = g.nx_total();
  parallel_for(h.nvt(), [&](std::size_t iv) {
    Vec3 v = g.v_point(iv);
    cplx* d = h.slice(iv);
    for (std::size_t i = 0; i < nxt; ++i) {
      Vec3 e = g.eta_point(i);
      double ph = -t * (e[0] * v[0] + e[1] * v[1] + e[2] * v[2]);
      d[i] *= cplx(std::cos(ph), std::sin(ph));
    }
  });
  return f.tag == Tag::Physical_xv ? transform(h, Axes::X, Direction::Inverse) : h;
}

// ------------------------------------------------------------- Gaussian oracle

double gaussian_tail_fraction(double center, double width, double L) {
  double s = width * std::sqrt(2.0);
  return 0.5 * std::erfc((L - center) / s) + 0.5 * std::erfc((L + center) / s);
}

PhaseField gaussian_oracle(const GridSpec& g, const GaussianData& d, double t) {
  for (int a = 0; a < 6; ++a) require(d.widths[a] > 0, ErrorCode::InvalidArgument, "widths must be positive");
  for (int a = 0; a < 3; ++a) {
    if (g.nx[a] > 1)
      require(gaussian_tail_fraction(d.centers[a], d.widths[a], g.Lx) < 1e-10, ErrorCode::BoxTooSmall,
              "box too small");
    if (g.nv[a] > 1)
      require(gaussian_tail_fraction(d.centers[3 + a], d.widths[3 + a], g.Lv) < 1e-10, ErrorCode::BoxTooSmall,
              "box too small");
  }
  const double P = 2.0 * g.Lx;
  auto periodic = [&](double z, double c, double w) {
    double y = z - c;
    y -= P * std::floor((y + g.Lx) / P);
    double s = 0;
    for (int k = -1; k <= 1; ++k) {
      double u = y + k * P;
      s += std::exp(-0.5 * u * u / (w * w));
    }
    return s;
  };
  PhaseField out(g);
  const std::size_t nxt = g.nx_total();
  parallel_for(g.nv_total(), [&](std::size_t iv) {
    Vec3 v = g.v_point(iv);
    double vv = d.amplitude;
    for (int a = 0; a < 3; ++a) vv *= std::exp(-0.5 * std::pow((v[a] - d.centers[3 + a]) / d.widths[3 + a], 2));
    cplx* s = out.slice(iv);
    for (std::size_t i = 0; i < nxt; ++i) {
      Vec3 x = g.x_point(i);
      double val = vv;
      // Single-point x axes carry no x dependence (spatially homogeneous).
      for (int a = 0; a < 3; ++a)
        if (g.nx[a] > 1) val *= periodic(x[a] - v[a] * t, d.centers[a], d.widths[a]);
      s[i] = val;
    }
  });
  return out;
}

// -------------------------------------------------------------------- rescale

namespace {

// Weights w_j with value(y) = sum_j w_j f_j for samples on [-L, L).
std::vector<double> interp_weights(double y, int n, double L, Interp kind) {
  std::vector<double> w(n, 0.0);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  if (y < -L || y >= L) return w;
  const double h = 2.0 * L / n;
  const double u = (y + L) / h;
  if (kind == Interp::Trig) {
    for (int j = 0; j < n; ++j) {
      double d = u - j;
      double s = std::sin(kPi * d);
      if (std::abs(s) < 1e-14) {
        double r = std::remainder(d, double(n));
        w[j] = std::abs(r) < 1e-9 ? 1.0 : 0.0;
      } else {
        w[j] = s / (n * std::tan(kPi * d / n));
      }
    }
  } else {
    int j0 = int(std::floor(u)) - 1;
    double tt = u - (j0 + 1);
    double c[4] = {-tt * (tt - 1) * (tt - 2) / 6, (tt + 1) * (tt - 1) * (tt - 2) / 2,
                   -(tt + 1) * tt * (tt - 2) / 2, (tt + 1) * tt * (tt - 1) / 6};
    for (int q = 0; q < 4; ++q) {
      int j = j0 + q;
      if (j >= 0 && j < n) w[j] += c[q];
    }
  }
  return w;
}

// Resamples one of the six axes in place: new(y_k) = old(scale * y_k).
void resample_axis(PhaseField& f, int axis, double scale, Interp kind) {
  const GridSpec& g = f.grid;
  const bool is_x = axis < 3;
  const int a = axis % 3;
  const int n = is_x ? g.nx[a] : g.nv[a];
  if (n == 1 || scale == 1.0) return;
  const double L = is_x ? g.Lx : g.Lv;
  std::vector<std::vector<double>> W(n);
  for (int k = 0; k < n; ++k) W[k] = interp_weights(scale * (is_x ? g.x(a, k) : g.v(a, k)), n, L, kind);

  // Axis stride within the flat layout.
  std::size_t stride = 1;
  if (is_x) {
    for (int b = 0; b < a; ++b) stride *= g.nx[b];
  } else {
    stride = g.nx_total();
    for (int b = 0; b < a; ++b) stride *= g.nv[b];
  }
  const std::size_t total = f.data.size();
  const std::size_t block = stride * n;
  const std::size_t lines = total / n;
  parallel_for(lines, [&](std::size_t line) {
    std::size_t lo = line % stride;
    std::size_t hi = line / stride;
    cplx* base = f.data.data() + hi * block + lo;
    std::vector<cplx> old(n), nw(n);
    for (int j = 0; j < n; ++j) old[j] = base[j * stride];
    for (int k = 0; k < n; ++k) {
      cplx s = 0;
      for (int j = 0; j < n; ++j) s += W[k][j] * old[j];
      nw[k] = s;
    }
    for (int k = 0; k < n; ++k) base[k * stride] = nw[k];
  });
}

// Fraction of |f|^2 at samples with |z| >= cut along one axis.
double escaped_fraction(const PhaseField& f, int axis, double cut) {
  const GridSpec& g = f.grid;
  const bool is_x = axis < 3;
  const int a = axis % 3;
  double out = 0, tot = 0;
  for (std::size_t iv = 0; iv < f.nvt(); ++iv) {
    Idx3 kv = g.v_index(iv);
    for (std::size_t ix = 0; ix < f.nxt(); ++ix) {
      double z = is_x ? g.x(a, g.x_index(ix)[a]) : g.v(a, kv[a]);
      double m = std::norm(f.at(ix, iv));
      tot += m;
      if (std::abs(z) >= cut) out += m;
    }
  }
  return tot > 0 ? out / tot : 0.0;
}

}  // namespace

PhaseField rescale(const PhaseField& f, const ScalingTransform& s, Interp interp) {
  require(s.lambda > 0 && std::isfinite(s.lambda), ErrorCode::InvalidArgument, "lambda must be positive");
  require(f.tag == Tag::Physical_xv, ErrorCode::TagMismatch, "rescale needs Physical_xv");
  PhaseField out = f;
  for (int axis = 0; axis < 6; ++axis) {
    const bool is_x = axis < 3;
    const int n = is_x ? f.grid.nx[axis % 3] : f.grid.nv[axis % 3];
    if (n == 1) continue;
    double scale = std::pow(s.lambda, is_x ? s.alpha : s.beta_exp);
    if (scale < 1.0) {
      double L = is_x ? f.grid.Lx : f.grid.Lv;
      require(escaped_fraction(f, axis, scale * L * (1.0 - 1e-12)) < 1e-12, ErrorCode::BoxTooSmall,
              "rescaled support escapes the box");
    }
    // Trig weights are dense; use the local stencil on very long axes.
    Interp kind = (interp == Interp::Trig && n > 256) ? Interp::Cubic : interp;
    resample_axis(out, axis, scale, kind);
  }
  const double amp = std::pow(s.lambda, s.alpha + 2 * s.beta_exp);
  for (cplx& z : out.data) z *= amp;
  return out;
}

// ---------------------------------------------------------------- arithmetic

void check_same_grid(const PhaseField& a, const PhaseField& b) {
  require(a.grid == b.grid, ErrorCode::GridMismatch, "grid mismatch");
  require(a.tag == b.tag, ErrorCode::TagMismatch, "representation mismatch");
}

double l2_norm(const PhaseField& f) {
  const std::size_t nxt = f.nxt();
  double s = ordered_sum<double>(f.nvt(), [&](std::size_t iv) {
    const cplx* d = f.slice(iv);
    double acc = 0;
    for (std::size_t i = 0; i < nxt; ++i) acc += std::norm(d[i]);
    return acc;
  });
  return std::sqrt(s * f.cell_volume());
}

double l2_distance(const PhaseField& a, const PhaseField& b) {
  check_same_grid(a, b);
  const std::size_t nxt = a.nxt();
  double s = ordered_sum<double>(a.nvt(), [&](std::size_t iv) {
    const cplx* p = a.slice(iv);
    const cplx* q = b.slice(iv);
    double acc = 0;
    for (std::size_t i = 0; i < nxt; ++i) acc += std::norm(p[i] - q[i]);
    return acc;
  });
  return std::sqrt(s * a.cell_volume());
}

double rel_l2_error(const PhaseField& a, const PhaseField& ref) {
  double r = l2_norm(ref);
  double d = l2_distance(a, ref);
  return r > 0 ? d / r : d;
}

PhaseField axpy(cplx a, const PhaseField& x, const PhaseField& y) {
  check_same_grid(x, y);
  PhaseField out = y;
  parallel_for(out.data.size(), [&](std::size_t i) { out.data[i] += a * x.data[i]; });
  return out;
}

PhaseField scaled(const PhaseField& f, cplx a) {
  PhaseField out = f;
  for (cplx& z : out.data) z *= a;
  return out;
}

// ---------------------------------------------------------------------- KLB1

namespace {

void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put_f64(std::vector<unsigned char>& b, double d) {
  std::uint64_t u;
  std::memcpy(&u, &d, 8);
  for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>(u >> (8 * i)));
}
std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}
double get_f64(const unsigned char* p) {
  std::uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= std::uint64_t(p[i]) << (8 * i);
  double d;
  std::memcpy(&d, &u, 8);
  return d;
}

constexpr std::size_t kHeaderBytes = 4 + 6 * 4 + 2 * 8 + 1;

Klb1Header parse_header(const unsigned char* p, std::size_t n) {
  require(n >= 4, ErrorCode::Format, "truncated KLB1 file (no magic)");
  if (std::memcmp(p, "1BLK", 4) == 0) fail(ErrorCode::Format, "KLB1 magic byte-swapped: wrong endianness");
  require(std::memcmp(p, "KLB1", 4) == 0, ErrorCode::Format, "bad magic: not a KLB1 file");
  require(n >= kHeaderBytes, ErrorCode::Format, "truncated KLB1 header");
  Klb1Header h;
  for (int a = 0; a < 3; ++a) {
    h.nx[a] = int(get_u32(p + 4 + 4 * a));
    h.nv[a] = int(get_u32(p + 16 + 4 * a));
    require(pow2(h.nx[a]) && pow2(h.nv[a]), ErrorCode::Format,
            "KLB1 axis size is not a power of two (wrong endianness?)");
  }
  h.Lx = get_f64(p + 28);
  h.Lv = get_f64(p + 36);
  require(h.Lx > 0 && h.Lv > 0 && std::isfinite(h.Lx) && std::isfinite(h.Lv), ErrorCode::Format,
          "KLB1 box lengths invalid (wrong endianness?)");
  unsigned tag = p[44];
  require(tag <= 3, ErrorCode::Format, "KLB1 tag byte out of range");
  h.tag = static_cast<Tag>(tag);
  return h;
}

std::size_t payload_bytes(const Klb1Header& h) {
  std::size_t n = 1;
  for (int a = 0; a < 3; ++a) n *= std::size_t(h.nx[a]) * h.nv[a];
  return n * 16;
}

}  // namespace

std::vector<unsigned char> encode_klb1(const PhaseField& f) {
  std::vector<unsigned char> b;
  b.reserve(kHeaderBytes + f.data.size() * 16);
  b.insert(b.end(), {'K', 'L', 'B', '1'});
  for (int a = 0; a < 3; ++a) put_u32(b, std::uint32_t(f.grid.nx[a]));
  for (int a = 0; a < 3; ++a) put_u32(b, std::uint32_t(f.grid.nv[a]));
  put_f64(b, f.grid.Lx);
  put_f64(b, f.grid.Lv);
  b.push_back(static_cast<unsigned char>(f.tag));
  for (const cplx& z : f.data) {
    put_f64(b, z.real());
    put_f64(b, z.imag());
  }
  return b;
}

PhaseField decode_klb1(const std::vector<unsigned char>& bytes) {
  Klb1Header h = parse_header(bytes.data(), bytes.size());
  std::size_t need = kHeaderBytes + payload_bytes(h);
  require(bytes.size() >= need, ErrorCode::Format, "truncated KLB1 payload");
  require(bytes.size() == need, ErrorCode::Format, "trailing bytes after KLB1 payload");
  std::size_t tot = payload_bytes(h) / 16;
  GridSpec g = GridSpec::make(h.nx, h.nv, h.Lx, h.Lv, tot <= kDefaultFullCap ? Storage::Full : Storage::VSliced);
  PhaseField f(g, h.tag);
  const unsigned char* p = bytes.data() + kHeaderBytes;
  for (std::size_t i = 0; i < tot; ++i) f.data[i] = cplx(get_f64(p + 16 * i), get_f64(p + 16 * i + 8));
  return f;
}

void write_klb1(const std::string& path, const PhaseField& f) {
  std::vector<unsigned char> b = encode_klb1(f);
  std::ofstream os(path, std::ios::binary);
  require(bool(os), ErrorCode::Io, "cannot open for writing: " + path);
  os.write(reinterpret_cast<const char*>(b.data()), std::streamsize(b.size()));
  require(bool(os), ErrorCode::Io, "write failed: " + path);
}

PhaseField read_klb1(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorCode::Io, "cannot open: " + path);
  std::vector<unsigned char> b((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_klb1(b);
}

Klb1Header read_klb1_header(const std::string& path) {
  std::ifstream is(path, std::ios::binary | std::ios::ate);
  require(bool(is), ErrorCode::Io, "cannot open: " + path);
  std::size_t size = std::size_t(is.tellg());
  is.seekg(0);
  unsigned char buf[kHeaderBytes] = {};
  is.read(reinterpret_cast<char*>(buf), std::streamsize(std::min(size, kHeaderBytes)));
  Klb1Header h = parse_header(buf, std::min(size, kHeaderBytes));
  require(size >= kHeaderBytes + payload_bytes(h), ErrorCode::Format, "truncated KLB1 payload");
  return h;
}

}  // namespace klab
