#include "lab/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace klab::lab {

namespace fs = std::filesystem;

bool ExperimentReport::passed() const {
  for (const Verdict& v : verdicts)
    if (!v.pass) return false;
  return true;
}

void ExperimentReport::check(const std::string& n, const std::string& key, double value, double threshold, bool pass,
                             const std::string& detail) {
  verdicts.push_back({n, key, value, threshold, pass, detail});
}

namespace {
// JSON has no inf/nan; keep them readable
nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}
}  // namespace

nlohmann::json ExperimentReport::to_json(bool with_wall) const {
  nlohmann::json j;
  j["name"] = name;
  j["seed"] = seed;
  j["params"] = params;
  nlohmann::json sc = nlohmann::json::object();
  for (const auto& [k, v] : scalars) sc[k] = num(v);
  j["scalars"] = sc;
  j["series"] = nlohmann::json::array();
  for (const Series& s : series) {
    nlohmann::json a;
    a["name"] = s.name;
    a["x_label"] = s.x_label;
    a["y_label"] = s.y_label;
    a["x"] = nlohmann::json::array();
    a["y"] = nlohmann::json::array();
    for (double v : s.x) a["x"].push_back(num(v));
    for (double v : s.y) a["y"].push_back(num(v));
    j["series"].push_back(a);
  }
  j["slopes"] = nlohmann::json::array();
  for (const Slope& s : slopes)
    j["slopes"].push_back(
        {{"name", s.name}, {"slope", num(s.slope)}, {"stderr", num(s.stderr_)}, {"intercept", num(s.intercept)}, {"points", s.points}});
  j["verdicts"] = nlohmann::json::array();
  for (const Verdict& v : verdicts)
    j["verdicts"].push_back({{"name", v.name},
                             {"threshold_key", v.threshold_key},
                             {"value", num(v.value)},
                             {"threshold", num(v.threshold)},
                             {"pass", v.pass},
                             {"detail", v.detail}});
  j["notes"] = notes;
  j["passed"] = passed();
  if (with_wall) j["wall_seconds"] = wall_seconds;
  return j;
}

std::string ExperimentReport::summary() const {
  std::ostringstream os;
  for (const Verdict& v : verdicts) {
    os << (v.pass ? "PASS " : "FAIL ") << name << "." << v.name << ": " << fmt17(v.value) << " vs " << v.threshold_key
       << " = " << fmt17(v.threshold);
    if (!v.detail.empty()) os << " (" << v.detail << ")";
    os << "\n";
  }
  return os.str();
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string series_csv(const Series& s) {
  std::ostringstream os;
  os << s.x_label << "," << s.y_label << "\n";
  for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) os << fmt17(s.x[i]) << "," << fmt17(s.y[i]) << "\n";
  return os.str();
}

std::string write_report(const ExperimentReport& r, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorCode::Io, "cannot create output directory " + dir);
  std::string jpath = (fs::path(dir) / (r.name + ".json")).string();
  {
    std::ofstream os(jpath);
    require(bool(os), ErrorCode::Io, "cannot write " + jpath);
    os << r.to_json().dump(2) << "\n";
  }
  for (const Series& s : r.series) {
    std::string p = (fs::path(dir) / (r.name + "_" + s.name + ".csv")).string();
    std::ofstream os(p);
    require(bool(os), ErrorCode::Io, "cannot write " + p);
    os << series_csv(s);
  }
  return jpath;
}

}  // namespace klab::lab
