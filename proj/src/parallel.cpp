#include "parallel.hpp"

#include <cstdlib>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace klab {

namespace {
int g_threads = -1;

int env_threads() {
  const char* s = std::getenv("LAB_THREADS");
  if (!s) return 0;
  int n = std::atoi(s);
  return n > 0 ? n : 0;
}
}  // namespace

void set_threads(int n) { g_threads = n > 0 ? n : 0; }

int threads() {
  if (g_threads < 0) g_threads = env_threads();
  if (g_threads > 0) return g_threads;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace klab
