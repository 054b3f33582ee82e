#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace klab {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;
using Idx3 = std::array<int, 3>;

enum class Storage { Full, VSliced };

// bit 0: x axes in Fourier space, bit 1: v axes in Fourier space
enum class Tag : std::uint8_t { Physical_xv = 0, Spectral_eta_v = 1, Spectral_x_xi = 2, Spectral_eta_xi = 3 };

inline bool x_spectral(Tag t) { return (static_cast<int>(t) & 1) != 0; }
inline bool v_spectral(Tag t) { return (static_cast<int>(t) & 2) != 0; }
inline Tag make_tag(bool xs, bool vs) { return static_cast<Tag>((xs ? 1 : 0) | (vs ? 2 : 0)); }
const char* tag_name(Tag t);

constexpr std::size_t kDefaultFullCap = 191102976;  // 24^6

// Axis k of a periodic box [-L, L): points -L + k h with h = 2L/n.
// A single-point axis sits at 0 with cell width 2L.
struct GridSpec {
  Idx3 nx{1, 1, 1};
  Idx3 nv{1, 1, 1};
  double Lx = 1.0;
  double Lv = 1.0;
  Storage storage = Storage::Full;

  static GridSpec make(Idx3 nx, Idx3 nv, double Lx, double Lv, Storage st = Storage::Full,
                       std::size_t full_cap = kDefaultFullCap);

  std::size_t nx_total() const { return std::size_t(nx[0]) * nx[1] * nx[2]; }
  std::size_t nv_total() const { return std::size_t(nv[0]) * nv[1] * nv[2]; }
  std::size_t total() const { return nx_total() * nv_total(); }

  double hx(int a) const { return 2.0 * Lx / nx[a]; }
  double hv(int a) const { return 2.0 * Lv / nv[a]; }
  double dx3() const { return hx(0) * hx(1) * hx(2); }
  double dv3() const { return hv(0) * hv(1) * hv(2); }
  double deta(int a) const;  // 2 pi / (n h)
  double dxi(int a) const;
  double deta3() const { return deta(0) * deta(1) * deta(2); }
  double dxi3() const { return dxi(0) * dxi(1) * dxi(2); }

  double x(int a, int k) const { return nx[a] == 1 ? 0.0 : -Lx + k * hx(a); }
  double v(int a, int k) const { return nv[a] == 1 ? 0.0 : -Lv + k * hv(a); }
  // Dual frequencies in FFT ordering (k < n/2 positive).
  double eta(int a, int k) const { return signed_mode(k, nx[a]) * deta(a); }
  double xi(int a, int k) const { return signed_mode(k, nv[a]) * dxi(a); }
  static int signed_mode(int k, int n) { return k < (n + 1) / 2 ? k : k - n; }

  Idx3 x_index(std::size_t i) const;
  Idx3 v_index(std::size_t j) const;
  Vec3 x_point(std::size_t i) const;
  Vec3 v_point(std::size_t j) const;
  Vec3 eta_point(std::size_t i) const;
  Vec3 xi_point(std::size_t j) const;
  double xi_radius() const;  // largest ball inside the dual v box

  bool operator==(const GridSpec& o) const {
    return nx == o.nx && nv == o.nv && Lx == o.Lx && Lv == o.Lv && storage == o.storage;
  }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

// Samples indexed (x, v) with the x index fastest: data[ix + nx_total * iv].
struct PhaseField {
  GridSpec grid;
  Tag tag = Tag::Physical_xv;
  std::vector<cplx> data;

  PhaseField() = default;
  PhaseField(const GridSpec& g, Tag t = Tag::Physical_xv) : grid(g), tag(t), data(g.total()) {}

  std::size_t nxt() const { return grid.nx_total(); }
  std::size_t nvt() const { return grid.nv_total(); }
  cplx& at(std::size_t ix, std::size_t iv) { return data[ix + nxt() * iv]; }
  const cplx& at(std::size_t ix, std::size_t iv) const { return data[ix + nxt() * iv]; }
  cplx* slice(std::size_t iv) { return data.data() + nxt() * iv; }
  const cplx* slice(std::size_t iv) const { return data.data() + nxt() * iv; }

  // Cell volume matching the current representation.
  double cell_volume() const;
  bool finite() const;
};

// Fills a physical-space field from f(x, v).
template <class F>
PhaseField sample(const GridSpec& g, F&& f);

struct Trajectory {
  std::vector<double> times;
  std::vector<PhaseField> fields;
  std::optional<double> uniform_dt;

  void append(double t, PhaseField f);
  std::size_t size() const { return times.size(); }
};

struct ScalingTransform {
  double lambda = 1.0;
  double alpha = 1.0;
  double beta_exp = 1.0;
};

enum class Axes { X, V, Both };
enum class Direction { Forward, Inverse };
enum class Interp { Trig, Cubic };

PhaseField transform(const PhaseField& f, Axes axes, Direction dir);
// Converts to the requested representation, transforming only what differs.
PhaseField to_tag(const PhaseField& f, Tag target);

PhaseField free_transport(const PhaseField& f, double t);

struct GaussianData {
  std::array<double, 6> centers{};  // (x, v)
  std::array<double, 6> widths{1, 1, 1, 1, 1, 1};
  double amplitude = 1.0;
};

// Periodic closed-form solution f0(x - v t, v) of free transport.
PhaseField gaussian_oracle(const GridSpec& g, const GaussianData& d, double t);
double gaussian_tail_fraction(double center, double width, double L);

PhaseField rescale(const PhaseField& f, const ScalingTransform& s, Interp interp = Interp::Trig);

// Discrete norms and arithmetic with representation-aware cell volumes.
double l2_norm(const PhaseField& f);
double l2_distance(const PhaseField& a, const PhaseField& b);
double rel_l2_error(const PhaseField& a, const PhaseField& ref);
PhaseField axpy(cplx a, const PhaseField& x, const PhaseField& y);  // a x + y
PhaseField scaled(const PhaseField& f, cplx a);
void check_same_grid(const PhaseField& a, const PhaseField& b);

// KLB1 binary format.
struct Klb1Header {
  Idx3 nx, nv;
  double Lx, Lv;
  Tag tag;
};
void write_klb1(const std::string& path, const PhaseField& f);
PhaseField read_klb1(const std::string& path);
Klb1Header read_klb1_header(const std::string& path);
std::vector<unsigned char> encode_klb1(const PhaseField& f);
PhaseField decode_klb1(const std::vector<unsigned char>& bytes);

template <class F>
PhaseField sample(const GridSpec& g, F&& f) {
  PhaseField out(g);
  const std::size_t nxt = g.nx_total();
  const std::size_t nvt = g.nv_total();
  for (std::size_t iv = 0; iv < nvt; ++iv) {
    Vec3 v = g.v_point(iv);
    for (std::size_t ix = 0; ix < nxt; ++ix) out.data[ix + nxt * iv] = f(g.x_point(ix), v);
  }
  return out;
}

}  // namespace klab
