#include "lab/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace klab::lab {

namespace {

// Every accepted key with its default. All ansatz defaults satisfy the standing
// constraints (delta < 1/4, delta <= 2(s - 1/2), mu >= delta, N <= 1/M).
const char* kDefaults = R"(
[run]
seed = 20240601
out = lab_out
# 1: skip the internal multi-point series (set by sweeps)
single = 0

[ansatz]
s = 0.75
delta = 0.2
mu = 1.0
# 0 picks N = 1/M
N = 0
M_values = 4,8,16

[collision]
quadrature_nodes = 64
# trilinear | trig
interpolation = trilinear
dealias_margin = 0.3333333333333333
pad = 2

[conservation]
nv = 8
spectral_nv = 16
L = 4.0
pairs = 3
direct_tol = 1e-6
spectral_tol = 5e-2
maxwellian_nv = 16
maxwellian_tol = 5e-2

[sharpness]
M1 = 4
M2 = 4
N2 = 8
N2_values = 4,8,16
M2_values = 4,8,16
M1_for_M2 = 2
budget = 32
slope_N2 = 1.0
slope_M2 = -0.5
slope_tol = 0.15
budget_tol = 0.10

[overlap]
exponent_tol = 0.2
profile_factor = 3
profile_points = 24

[deflation]
stable_tol = 0.5
slope_rel_tol = 0.3

[strichartz]
corpus = 20
n = 16
L = 4.0
t_end = 1.0
steps = 8
spread_max = 10
growth_min = 10
lambdas = 1,2,4,8,16
# 1D grid for the p != r family
necessity_n = 1024
necessity_L = 12.0

[contraction]
nv = 16
L = 4.0
amplitude = 0.05
dt_fraction = 0.2
steps = 4
ratio_max = 0.5
mass_tol = 1e-4

[correction]
M = 8
n = 8
substeps = 1
picard_tol = 1e-8
ratio_max = 0.1
c_growth_max = 2

[twin]
n = 8
stable_tol = 0.5
d0_min = 0.2
d0_max = 5

[zprobe]
corpus = 4
M = 4
n_coarse = 8
n_fine = 16
L = 1.5
Lv = 3.0
stable_tol = 0.2
)";

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

[[noreturn]] void cfg_error(const std::string& origin, int line, const std::string& key, const std::string& msg) {
  std::ostringstream m;
  m << origin;
  if (line > 0) m << ":" << line;
  if (!key.empty()) m << ": key '" << key << "'";
  m << ": " << msg;
  fail(ErrorCode::Config, m.str());
}

// Numbers stay numbers: a key whose default parses as a number (or list of
// numbers) only accepts numbers.
bool numeric_list(const std::string& s) {
  std::stringstream ss(s);
  std::string item;
  int n = 0;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) return false;
    std::size_t pos = 0;
    try {
      std::stod(item, &pos);
    } catch (...) {
      return false;
    }
    if (pos != item.size()) return false;
    ++n;
  }
  return n > 0;
}

void parse_into(std::map<std::string, std::string>& out, const std::string& text, const std::string& origin,
                bool known_only) {
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) cfg_error(origin, lineno, "", "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) cfg_error(origin, lineno, "", "expected key = value");
    std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (k.empty()) cfg_error(origin, lineno, "", "empty key");
    std::string key = section.empty() ? k : section + "." + k;
    if (known_only) {
      auto it = out.find(key);
      if (it == out.end()) cfg_error(origin, lineno, key, "unknown key");
      if (numeric_list(it->second) && !numeric_list(v)) cfg_error(origin, lineno, key, "expected a number, got '" + v + "'");
    }
    out[key] = v;
  }
}

}  // namespace

Config Config::defaults() {
  Config c;
  parse_into(c.values_, kDefaults, "<defaults>", false);
  return c;
}

Config Config::parse(const std::string& text, const std::string& origin) {
  Config c = defaults();
  parse_into(c.values_, text, origin, true);
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str(), path);
}

const std::string& Config::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) cfg_error("<config>", 0, key, "missing");
  return it->second;
}

double Config::num(const std::string& key) const {
  const std::string& s = raw(key);
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) cfg_error("<config>", 0, key, "not a number: '" + s + "'");
  return v;
}

int Config::integer(const std::string& key) const {
  double v = num(key);
  if (v != std::floor(v) || std::abs(v) > 2e9) cfg_error("<config>", 0, key, "not an integer: '" + raw(key) + "'");
  return int(v);
}

bool Config::flag(const std::string& key) const {
  const std::string& s = raw(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  cfg_error("<config>", 0, key, "not a boolean: '" + s + "'");
}

std::vector<double> Config::list(const std::string& key) const {
  const std::string& s = raw(key);
  if (!numeric_list(s)) cfg_error("<config>", 0, key, "not a number list: '" + s + "'");
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
  return out;
}

void Config::set(const std::string& key, const std::string& value) {
  parse_into(values_, key + " = " + value, "<override>", true);
}

std::string Config::dump() const {
  std::ostringstream os;
  std::string section = "\x01";
  for (const auto& [k, v] : values_) {
    std::size_t dot = k.find('.');
    std::string sec = dot == std::string::npos ? "" : k.substr(0, dot);
    if (sec != section) {
      os << (section == "\x01" ? "" : "\n") << "[" << sec << "]\n";
      section = sec;
    }
    os << k.substr(dot + 1) << " = " << v << "\n";
  }
  return os.str();
}

}  // namespace klab::lab
