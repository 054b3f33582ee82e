#include "lab/fit.hpp"

#include <cmath>

#include "error.hpp"

namespace klab::lab {

Slope fit_loglog(const std::vector<double>& x, const std::vector<double>& y, const std::string& name) {
  require(x.size() == y.size(), ErrorCode::InvalidArgument, "fit: x and y differ in length");
  require(x.size() >= 3, ErrorCode::InvalidArgument, "fit needs at least 3 points, got " + std::to_string(x.size()));
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    require(x[i] > 0 && y[i] > 0 && std::isfinite(x[i]) && std::isfinite(y[i]), ErrorCode::InvalidArgument,
            "log-log fit needs positive finite data");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 0, ErrorCode::InvalidArgument, "fit: abscissae are all equal");
  Slope s;
  s.name = name;
  s.points = int(n);
  s.slope = sxy / sxx;
  s.intercept = my - s.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = ly[i] - s.intercept - s.slope * lx[i];
    rss += r * r;
  }
  s.stderr_ = n > 2 ? std::sqrt(rss / (n - 2) / sxx) : 0;
  return s;
}

double spread_about_mean(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  double lm = 0;
  for (double a : v) lm += std::log(a);
  double m = std::exp(lm / v.size()), w = 0;
  for (double a : v) w = std::max(w, std::abs(a / m - 1));
  return w;
}

}  // namespace klab::lab
