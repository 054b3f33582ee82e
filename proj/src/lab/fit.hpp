#pragma once

#include <string>
#include <vector>

#include "lab/report.hpp"

namespace klab::lab {

// Least squares log y = a + b log x. Needs >= 3 points with x, y > 0.
Slope fit_loglog(const std::vector<double>& x, const std::vector<double>& y, const std::string& name = "slope");

// max |v_i / mean - 1| with the geometric mean (0 for fewer than two values)
double spread_about_mean(const std::vector<double>& v);

}  // namespace klab::lab
