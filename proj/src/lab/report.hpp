#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace klab::lab {

struct Series {
  std::string name;
  std::string x_label = "x", y_label = "y";
  std::vector<double> x, y;
};

struct Slope {
  std::string name;
  double slope = 0, stderr_ = 0, intercept = 0;
  int points = 0;
};

// value compared against a named config threshold
struct Verdict {
  std::string name;
  std::string threshold_key;
  double value = 0;
  double threshold = 0;
  bool pass = false;
  std::string detail;
};

struct ExperimentReport {
  std::string name;
  std::map<std::string, std::string> params;  // the full config used
  std::map<std::string, double> scalars;
  std::vector<Series> series;
  std::vector<Slope> slopes;
  std::vector<Verdict> verdicts;
  std::vector<std::string> notes;
  unsigned long long seed = 0;
  double wall_seconds = 0;

  bool passed() const;
  void check(const std::string& name, const std::string& key, double value, double threshold, bool pass,
             const std::string& detail = "");
  nlohmann::json to_json(bool with_wall = true) const;
  std::string summary() const;  // one line per verdict
};

// "%.17g"
std::string fmt17(double v);
std::string series_csv(const Series& s);
// Writes <dir>/<name>.json and <dir>/<name>_<series>.csv; returns the JSON path.
std::string write_report(const ExperimentReport& r, const std::string& dir);

}  // namespace klab::lab
