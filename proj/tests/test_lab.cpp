#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "error.hpp"
#include "lab/config.hpp"
#include "lab/experiments.hpp"
#include "lab/fit.hpp"
#include "lab/report.hpp"

using namespace klab;
using namespace klab::lab;

namespace {
std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}
}  // namespace

TEST_CASE("config defaults satisfy the standing constraints") {
  Config c = Config::defaults();
  double s = c.num("ansatz.s"), d = c.num("ansatz.delta"), mu = c.num("ansatz.mu");
  CHECK(d < 0.25);
  CHECK(d <= 2 * (s - 0.5));
  CHECK(mu >= d);
  for (double M : c.list("ansatz.M_values")) CHECK(std::pow(std::pow(M, mu), 1 - s) >= std::pow(M, d) * (1 - 1e-12));
  CHECK(c.integer("run.seed") == 20240601);
  CHECK_FALSE(c.flag("run.single"));
}

TEST_CASE("config parse errors carry origin, line and key") {
  std::string m = message_of([] { Config::parse("[ansatz]\ns = 0.8\nbogus = 1\n", "my.cfg"); });
  CHECK(m.find("my.cfg:3") != std::string::npos);
  CHECK(m.find("ansatz.bogus") != std::string::npos);

  m = message_of([] { Config::parse("[ansatz]\n\ndelta = fast\n", "x.cfg"); });
  CHECK(m.find("x.cfg:3") != std::string::npos);
  CHECK(m.find("ansatz.delta") != std::string::npos);

  CHECK(message_of([] { Config::parse("[ansatz\n"); }).find(":1") != std::string::npos);
  CHECK(message_of([] { Config::parse("just words\n"); }).find("key = value") != std::string::npos);

  try {
    Config::parse("nope = 1\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}

TEST_CASE("config overrides, comments and dump round trip") {
  Config c = Config::parse("# header\n[ansatz]\ns = 0.8  # inline\n[collision]\ninterpolation = trig\n");
  CHECK(c.num("ansatz.s") == doctest::Approx(0.8));
  CHECK(c.raw("collision.interpolation") == "trig");
  c.set("ansatz.M_values", "4, 8");
  CHECK(c.list("ansatz.M_values") == std::vector<double>{4, 8});
  CHECK_THROWS_AS(c.set("ansatz.nothing", "1"), Error);
  CHECK_THROWS_AS(c.integer("ansatz.s"), Error);
  Config back = Config::parse(c.dump());
  CHECK(back.values() == c.values());
  CHECK_THROWS_AS(Config::load("/nonexistent/lab.cfg"), Error);
}

TEST_CASE("log-log fit: exact power laws, standard error, guards") {
  Slope s = fit_loglog({2, 4, 8, 16}, {3 * 4.0, 3 * 16.0, 3 * 64.0, 3 * 256.0});
  CHECK(s.slope == doctest::Approx(2).epsilon(1e-12));
  CHECK(std::exp(s.intercept) == doctest::Approx(3).epsilon(1e-12));
  CHECK(s.stderr_ < 1e-12);
  CHECK(s.points == 4);

  Slope noisy = fit_loglog({1, 2, 4}, {1, 2.2, 3.9});
  CHECK(noisy.stderr_ > 0);

  CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), Error);
  CHECK_THROWS_AS(fit_loglog({1, 2, 4}, {1, -2, 4}), Error);
  CHECK_THROWS_AS(fit_loglog({2, 2, 2}, {1, 2, 4}), Error);

  CHECK(spread_about_mean({5}) == 0);
  CHECK(spread_about_mean({1, 4}) == doctest::Approx(1));
}

TEST_CASE("CSV series keep full double precision") {
  Series s;
  s.name = "t";
  s.x = {0.1, 1.0 / 3};
  s.y = {std::nextafter(1.0, 2.0), 6.02214076e23};
  std::istringstream is(series_csv(s));
  std::string line;
  std::getline(is, line);
  CHECK(line == "x,y");
  for (std::size_t i = 0; i < 2; ++i) {
    std::getline(is, line);
    std::size_t c = line.find(',');
    CHECK(std::stod(line.substr(0, c)) == s.x[i]);
    CHECK(std::stod(line.substr(c + 1)) == s.y[i]);
  }
}

TEST_CASE("reports: verdicts, JSON shape, files on disk") {
  ExperimentReport r;
  r.name = "demo";
  r.scalars["a"] = 1.5;
  r.scalars["bad"] = INFINITY;
  r.check("ok", "demo.tol", 0.1, 0.2, true);
  CHECK(r.passed());
  r.check("no", "demo.tol", 0.3, 0.2, false, "too big");
  CHECK_FALSE(r.passed());
  CHECK(r.summary().find("FAIL demo.no") != std::string::npos);
  CHECK(r.summary().find("demo.tol") != std::string::npos);
  auto j = r.to_json(false);
  CHECK(j["scalars"]["bad"] == "inf");
  CHECK_FALSE(j.contains("wall_seconds"));
  CHECK(r.to_json(true).contains("wall_seconds"));

  Series s;
  s.name = "curve";
  s.x = {1, 2};
  s.y = {3, 4};
  r.series.push_back(s);
  auto dir = std::filesystem::temp_directory_path() / "klab_test_report";
  std::filesystem::remove_all(dir);
  std::string path = write_report(r, dir.string());
  CHECK(std::filesystem::exists(path));
  CHECK(std::filesystem::exists(dir / "demo_curve.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("registry and sweep guards") {
  CHECK(experiment_names().size() == 9);
  for (const char* n : {"sharpness", "overlap", "deflation", "strichartz", "conservation", "contraction", "correction",
                        "twin", "zprobe"})
    CHECK(is_experiment(n));
  Config c = Config::defaults();
  std::string m = message_of([&] { run_experiment("nonsense", c); });
  CHECK(m.find("unknown experiment") != std::string::npos);
  CHECK_THROWS_AS(sweep_experiment("sharpness", "sharpness.N2", {"8"}, c), Error);
  CHECK_THROWS_AS(sweep_experiment("sharpness", "sharpness.N2", {"4", "8"}, c), Error);
  CHECK_THROWS_AS(sweep_experiment("sharpness", "sharpness.nokey", {"4", "8", "16"}, c), Error);
}

TEST_CASE("sharpness run and sweep: slopes, reproducibility") {
  Config c = Config::defaults();
  ExperimentReport a = run_experiment("sharpness", c), b = run_experiment("sharpness", c);
  CHECK(a.passed());
  CHECK(a.to_json(false) == b.to_json(false));
  CHECK(a.params.at("run.seed") == "20240601");

  ExperimentReport sw = sweep_experiment("sharpness", "sharpness.N2", {"4", "8", "16"}, c);
  REQUIRE(sw.slopes.size() == 1);
  CHECK(sw.slopes[0].points == 3);
  CHECK(sw.slopes[0].slope == doctest::Approx(1).epsilon(0.15));
  CHECK(sw.passed());
}

TEST_CASE("randomized experiments are reproducible from the seed") {
  Config c = Config::defaults();
  c.set("conservation.pairs", "1");
  ExperimentReport a = run_experiment("conservation", c), b = run_experiment("conservation", c);
  CHECK(a.to_json(false).dump() == b.to_json(false).dump());
  c.set("run.seed", "7");
  ExperimentReport d = run_experiment("conservation", c);
  CHECK(d.scalars.at("spectral_residual_max") != a.scalars.at("spectral_residual_max"));
}
