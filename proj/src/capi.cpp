#include "klab/klab.h"

#include <cstring>
#include <new>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "error.hpp"
#include "lab/config.hpp"
#include "lab/experiments.hpp"
#include "lab/report.hpp"
#include "parallel.hpp"
#include "spectral.hpp"

struct klab_config {
  klab::lab::Config cfg;
};

struct klab_field {
  klab::PhaseField f;
};

struct klab_report {
  klab::lab::ExperimentReport r;
  std::string json, json_nowall, summary;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_scratch;

// Every entry point funnels exceptions through here.
template <class F>
int guarded(F&& body) {
  try {
    g_error.clear();
    body();
    return KLAB_OK;
  } catch (const klab::Error& e) {
    g_error = e.what();
    return -static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_error = "out of memory";
    return KLAB_E_INTERNAL;
  } catch (const std::exception& e) {
    g_error = e.what();
    return KLAB_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  klab::require(p != nullptr, klab::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

klab_report* wrap(klab::lab::ExperimentReport r) {
  auto* out = new klab_report{std::move(r), {}, {}, {}};
  out->json = out->r.to_json(true).dump(2);
  out->json_nowall = out->r.to_json(false).dump(2);
  out->summary = out->r.summary();
  return out;
}

nlohmann::json header_json(const klab::Idx3& nx, const klab::Idx3& nv, double Lx, double Lv, klab::Tag tag) {
  return {{"format", "KLB1"}, {"nx", nx}, {"nv", nv}, {"Lx", Lx}, {"Lv", Lv}, {"tag", klab::tag_name(tag)}};
}

}  // namespace

extern "C" {

const char* klab_last_error(void) { return g_error.c_str(); }

void klab_set_threads(int n) { klab::set_threads(n < 0 ? 0 : n); }

int klab_config_defaults(klab_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new klab_config{klab::lab::Config::defaults()};
  });
}

int klab_config_load(const char* path, klab_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new klab_config{klab::lab::Config::load(path)};
  });
}

int klab_config_parse(const char* text, const char* origin, klab_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new klab_config{klab::lab::Config::parse(text, origin ? origin : "<config>")};
  });
}

int klab_config_set(klab_config* c, const char* key, const char* value) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    need(value, "value");
    c->cfg.set(key, value);
  });
}

int klab_config_get(const klab_config* c, const char* key, char* buf, size_t cap, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    need(key, "key");
    const std::string& v = c->cfg.raw(key);
    if (needed) *needed = v.size() + 1;
    if (buf && cap > 0) {
      std::size_t n = std::min(cap - 1, v.size());
      std::memcpy(buf, v.data(), n);
      buf[n] = '\0';
    }
  });
}

int klab_config_dump(const klab_config* c, const char** text) {
  return guarded([&] {
    need(c, "config");
    need(text, "text");
    g_scratch = c->cfg.dump();
    *text = g_scratch.c_str();
  });
}

void klab_config_free(klab_config* c) { delete c; }

int klab_experiment_count(void) { return static_cast<int>(klab::lab::experiment_names().size()); }

const char* klab_experiment_name(int i) {
  const auto& n = klab::lab::experiment_names();
  if (i < 0 || i >= static_cast<int>(n.size())) return nullptr;
  return n[std::size_t(i)].c_str();
}

int klab_run(const char* name, const klab_config* c, klab_report** out) {
  return guarded([&] {
    need(name, "name");
    need(c, "config");
    need(out, "out");
    *out = wrap(klab::lab::run_experiment(name, c->cfg));
  });
}

int klab_sweep(const char* name, const char* key, const char* values, const klab_config* c, klab_report** out) {
  return guarded([&] {
    need(name, "name");
    need(key, "key");
    need(values, "values");
    need(c, "config");
    need(out, "out");
    std::vector<std::string> v;
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(item);
    *out = wrap(klab::lab::sweep_experiment(name, key, v, c->cfg));
  });
}

int klab_report_passed(const klab_report* r) { return r && r->r.passed() ? 1 : 0; }

const char* klab_report_json(const klab_report* r, int with_wall) {
  if (!r) return nullptr;
  return with_wall ? r->json.c_str() : r->json_nowall.c_str();
}

const char* klab_report_summary(const klab_report* r) { return r ? r->summary.c_str() : nullptr; }

int klab_report_write(const klab_report* r, const char* dir) {
  return guarded([&] {
    need(r, "report");
    need(dir, "dir");
    klab::lab::write_report(r->r, dir);
  });
}

void klab_report_free(klab_report* r) { delete r; }

int klab_field_random(int n, double Lx, double Lv, uint64_t seed, klab_field** out) {
  return guarded([&] {
    need(out, "out");
    klab::require(n >= 2 && (n & (n - 1)) == 0, klab::ErrorCode::InvalidArgument, "n must be a power of two >= 2");
    klab::GridSpec g = klab::GridSpec::make({n, n, n}, {n, n, n}, Lx, Lv);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.1, 0.1), w(0.1, 0.12), a(0.5, 1.5);
    klab::PhaseField f(g);
    for (int k = 0; k < 3; ++k) {
      klab::GaussianData d;
      for (int i = 0; i < 3; ++i) {
        d.centers[i] = u(rng) * Lx;
        d.centers[3 + i] = u(rng) * Lv;
        d.widths[i] = w(rng) * Lx;
        d.widths[3 + i] = w(rng) * Lv;
      }
      d.amplitude = a(rng);
      f = klab::axpy(1.0, klab::gaussian_oracle(g, d, 0), f);
    }
    *out = new klab_field{std::move(f)};
  });
}

int klab_field_load(const char* path, klab_field** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    *out = new klab_field{klab::read_klb1(path)};
  });
}

int klab_field_save(const klab_field* f, const char* path) {
  return guarded([&] {
    need(f, "field");
    need(path, "path");
    klab::write_klb1(path, f->f);
  });
}

int klab_field_info(const char* path, const char** json) {
  return guarded([&] {
    need(path, "path");
    need(json, "json");
    klab::Klb1Header h = klab::read_klb1_header(path);
    g_scratch = header_json(h.nx, h.nv, h.Lx, h.Lv, h.tag).dump();
    *json = g_scratch.c_str();
  });
}

int klab_field_describe(const klab_field* f, const char** json) {
  return guarded([&] {
    need(f, "field");
    need(json, "json");
    const klab::GridSpec& g = f->f.grid;
    nlohmann::json j = header_json(g.nx, g.nv, g.Lx, g.Lv, f->f.tag);
    j["l2"] = klab::l2_norm(f->f);
    g_scratch = j.dump();
    *json = g_scratch.c_str();
  });
}

int klab_field_checksum(const klab_field* f, uint64_t* out) {
  return guarded([&] {
    need(f, "field");
    need(out, "out");
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char b : klab::encode_klb1(f->f)) {
      h ^= b;
      h *= 1099511628211ull;
    }
    *out = h;
  });
}

int klab_field_equal(const klab_field* a, const klab_field* b, int* equal) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(equal, "equal");
    *equal = klab::encode_klb1(a->f) == klab::encode_klb1(b->f) ? 1 : 0;
  });
}

void klab_field_free(klab_field* f) { delete f; }

}  // extern "C"
