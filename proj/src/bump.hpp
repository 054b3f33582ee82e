#pragma once

#include <vector>

namespace klab {

// chi(r) = exp(1 - 1/(1 - r^2)) for r < 1, else 0. chi(0) = 1.
double bump(double r);

// Radial profile of the bump and its unitary Fourier transforms in one, two
// and three dimensions, tabulated on a logarithmic frequency grid.
class BumpProfile {
 public:
  static const BumpProfile& instance();

  double chi(double r) const { return bump(r); }
  // chi^ in dimension d evaluated at |k|, from the table (cubic in log k).
  double hat(double k, int dim = 3) const;
  // Same transforms by direct quadrature (slow; used to build and check the tables).
  static double hat_direct(double k, int dim);
  // Inverse 3D radial transform of the tabulated chi^, evaluated at radius r.
  double inverse(double r) const;

  // int_0^1 chi(r)^p r^m dr
  static double moment(int m, int p = 1);

  double k_max() const { return kmax_; }

 private:
  BumpProfile();
  double kmin_, kmax_;
  int nk_;
  double dlog_;
  std::vector<double> table_[3];
};

}  // namespace klab
