// Command-line front end; talks to the library only through the C API.
#include <klab/klab.h>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

namespace {

constexpr int kExitPass = 0, kExitError = 1, kExitFail = 2;

int report_error(const std::string& what) {
  std::cerr << "lab: " << what << ": " << klab_last_error() << "\n";
  return kExitError;
}

klab_config* load_config(const std::string& path) {
  klab_config* c = nullptr;
  int rc = path.empty() ? klab_config_defaults(&c) : klab_config_load(path.c_str(), &c);
  return rc == KLAB_OK ? c : nullptr;
}

std::string config_value(const klab_config* c, const char* key) {
  std::size_t need = 0;
  if (klab_config_get(c, key, nullptr, 0, &need) != KLAB_OK) return {};
  std::string s(need, '\0');
  klab_config_get(c, key, s.data(), s.size(), nullptr);
  s.resize(need - 1);
  return s;
}

int finish(klab_report* r, const std::string& out_dir, bool quiet_json) {
  std::cout << klab_report_summary(r);
  if (!quiet_json) std::cout << klab_report_json(r, 1) << "\n";
  if (klab_report_write(r, out_dir.c_str()) != KLAB_OK) {
    klab_report_free(r);
    return report_error("writing report");
  }
  bool pass = klab_report_passed(r) != 0;
  std::cout << (pass ? "PASS" : "FAIL") << "\n";
  klab_report_free(r);
  return pass ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("LAB_THREADS")) {
    char* end = nullptr;
    long n = std::strtol(t, &end, 10);
    if (end == t || *end != '\0' || n < 0) {
      std::cerr << "lab: LAB_THREADS must be a non-negative integer, got '" << t << "'\n";
      return kExitError;
    }
    klab_set_threads(static_cast<int>(n));
  }

  CLI::App app{"kinetic lab: experiments, sweeps and KLB1 field files"};
  app.require_subcommand(1);

  std::string name, config_path, out_dir, vary;
  long long seed = -1;
  bool json = false;

  auto* run = app.add_subcommand("run", "run one registered experiment");
  run->add_option("name", name, "experiment name")->required();
  run->add_option("--config", config_path, "config file (defaults if omitted)");
  run->add_option("--out", out_dir, "report directory (default: run.out)");
  run->add_option("--seed", seed, "override run.seed");
  run->add_flag("--json", json, "also print the report JSON");

  auto* sweep = app.add_subcommand("sweep", "sweep one key and fit a log-log slope");
  sweep->add_option("name", name, "experiment name")->required();
  sweep->add_option("--vary", vary, "key=v1,v2,v3")->required();
  sweep->add_option("--config", config_path, "config file (defaults if omitted)");
  sweep->add_option("--out", out_dir, "report directory (default: run.out)");
  sweep->add_option("--seed", seed, "override run.seed");
  sweep->add_flag("--json", json, "also print the report JSON");

  std::string action, path;
  int n = 8;
  double Lx = 1.0, Lv = 1.0;
  std::uint64_t fseed = 1;
  auto* field = app.add_subcommand("field", "KLB1 field files");
  field->add_option("action", action, "dump | load | info")->required()->check(CLI::IsMember({"dump", "load", "info"}));
  field->add_option("path", path, "KLB1 file")->required();
  field->add_option("--n", n, "dump: points per axis");
  field->add_option("--Lx", Lx, "dump: x half-width");
  field->add_option("--Lv", Lv, "dump: v half-width");
  field->add_option("--seed", fseed, "dump: seed of the random field");

  app.add_subcommand("list", "list registered experiments");
  auto* show = app.add_subcommand("config", "print the effective configuration");
  show->add_option("--config", config_path, "config file (defaults if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitPass : kExitError;
  }

  if (app.got_subcommand("list")) {
    for (int i = 0; i < klab_experiment_count(); ++i) std::cout << klab_experiment_name(i) << "\n";
    return kExitPass;
  }

  if (app.got_subcommand("field")) {
    if (action == "info") {
      const char* j = nullptr;
      if (klab_field_info(path.c_str(), &j) != KLAB_OK) return report_error("field info " + path);
      std::cout << j << "\n";
      return kExitPass;
    }
    klab_field* f = nullptr;
    int rc = action == "dump" ? klab_field_random(n, Lx, Lv, fseed, &f) : klab_field_load(path.c_str(), &f);
    if (rc != KLAB_OK) return report_error("field " + action + " " + path);
    if (action == "dump" && klab_field_save(f, path.c_str()) != KLAB_OK) {
      klab_field_free(f);
      return report_error("field dump " + path);
    }
    const char* j = nullptr;
    std::uint64_t sum = 0;
    klab_field_describe(f, &j);
    std::string desc = j;
    klab_field_checksum(f, &sum);
    klab_field_free(f);
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(sum));
    std::cout << desc << "\nchecksum " << hex << "\n";
    return kExitPass;
  }

  klab_config* cfg = load_config(config_path);
  if (!cfg) return report_error("config " + (config_path.empty() ? std::string("<defaults>") : config_path));
  if (seed >= 0 && klab_config_set(cfg, "run.seed", std::to_string(seed).c_str()) != KLAB_OK) {
    klab_config_free(cfg);
    return report_error("--seed");
  }
  if (app.got_subcommand("config")) {
    const char* text = nullptr;
    int rc = klab_config_dump(cfg, &text);
    if (rc == KLAB_OK) std::cout << text;
    klab_config_free(cfg);
    return rc == KLAB_OK ? kExitPass : report_error("config");
  }
  if (out_dir.empty()) out_dir = config_value(cfg, "run.out");

  klab_report* r = nullptr;
  int rc;
  if (app.got_subcommand("run")) {
    rc = klab_run(name.c_str(), cfg, &r);
  } else {
    std::size_t eq = vary.find('=');
    if (eq == std::string::npos) {
      klab_config_free(cfg);
      std::cerr << "lab: --vary expects key=v1,v2,...\n";
      return kExitError;
    }
    rc = klab_sweep(name.c_str(), vary.substr(0, eq).c_str(), vary.substr(eq + 1).c_str(), cfg, &r);
  }
  klab_config_free(cfg);
  if (rc != KLAB_OK) return report_error(name);
  return finish(r, out_dir, !json);
}
