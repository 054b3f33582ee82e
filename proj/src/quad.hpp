#pragma once

#include <functional>
#include <vector>

namespace klab {

// Gauss-Legendre nodes and weights on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

struct QuadResult {
  double value = 0;
  double error = 0;
  int intervals = 0;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]; stops once the summed error
// estimate is below max(atol, rtol |value|). Throws Convergence (with the
// current estimate in the message) after max_intervals subdivisions.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a, double b, double rtol,
                              double atol = 0, int max_intervals = 400);

}  // namespace klab
