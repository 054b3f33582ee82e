#ifndef KLAB_KLAB_H
#define KLAB_KLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define KLAB_API __declspec(dllexport)
#else
#define KLAB_API __attribute__((visibility("default")))
#endif

/* Return codes: 0 ok, negative on error. */
enum {
  KLAB_OK = 0,
  KLAB_E_INTERNAL = -1,
  KLAB_E_INVALID_ARGUMENT = -2,
  KLAB_E_REDUNDANT_TRANSFORM = -3,
  KLAB_E_TAG_MISMATCH = -4,
  KLAB_E_BOX_TOO_SMALL = -5,
  KLAB_E_GRID_MISMATCH = -6,
  KLAB_E_STORAGE_MODE = -7,
  KLAB_E_RESOLUTION_GUARD = -8,
  KLAB_E_CONVERGENCE = -9,
  KLAB_E_STEP_TOO_LARGE = -10,
  KLAB_E_IO = -11,
  KLAB_E_FORMAT = -12,
  KLAB_E_CONFIG = -13,
  KLAB_E_BUDGET = -14,
  KLAB_E_REGIME = -15
};

typedef struct klab_config klab_config;
typedef struct klab_field klab_field;
typedef struct klab_report klab_report;

/* Message of the last failed call on this thread ("" if none). */
KLAB_API const char* klab_last_error(void);
KLAB_API void klab_set_threads(int n);

/* ---- configuration */
KLAB_API int klab_config_defaults(klab_config** out);
KLAB_API int klab_config_load(const char* path, klab_config** out);
KLAB_API int klab_config_parse(const char* text, const char* origin, klab_config** out);
KLAB_API int klab_config_set(klab_config* c, const char* key, const char* value);
/* Copies into buf (NUL-terminated); *needed gets the full length + 1. */
KLAB_API int klab_config_get(const klab_config* c, const char* key, char* buf, size_t cap, size_t* needed);
/* Effective configuration as config text; borrowed until the next call on this thread. */
KLAB_API int klab_config_dump(const klab_config* c, const char** text);
KLAB_API void klab_config_free(klab_config* c);

/* ---- experiments */
KLAB_API int klab_experiment_count(void);
KLAB_API const char* klab_experiment_name(int i);
KLAB_API int klab_run(const char* name, const klab_config* c, klab_report** out);
/* values: comma separated; at least three */
KLAB_API int klab_sweep(const char* name, const char* key, const char* values, const klab_config* c,
                        klab_report** out);
KLAB_API int klab_report_passed(const klab_report* r);
/* Borrowed strings, valid until klab_report_free. */
KLAB_API const char* klab_report_json(const klab_report* r, int with_wall);
KLAB_API const char* klab_report_summary(const klab_report* r);
/* Writes <dir>/<name>.json and one CSV per series. */
KLAB_API int klab_report_write(const klab_report* r, const char* dir);
KLAB_API void klab_report_free(klab_report* r);

/* ---- phase-space fields (KLB1 files) */
/* Seeded sum of Gaussians on an n^3 x n^3 grid with box half-widths Lx, Lv. */
KLAB_API int klab_field_random(int n, double Lx, double Lv, uint64_t seed, klab_field** out);
KLAB_API int klab_field_load(const char* path, klab_field** out);
KLAB_API int klab_field_save(const klab_field* f, const char* path);
/* Header only, as JSON; borrowed until the next call on this thread. */
KLAB_API int klab_field_info(const char* path, const char** json);
KLAB_API int klab_field_describe(const klab_field* f, const char** json);
/* FNV-1a over the encoded bytes. */
KLAB_API int klab_field_checksum(const klab_field* f, uint64_t* out);
KLAB_API int klab_field_equal(const klab_field* a, const klab_field* b, int* equal);
KLAB_API void klab_field_free(klab_field* f);

#ifdef __cplusplus
}
#endif

#endif
