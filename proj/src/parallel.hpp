#pragma once

#include <cstddef>
#include <vector>

namespace klab {

// Worker cap; 0 means "use the runtime default".
void set_threads(int n);
int threads();

// Runs body(i) for i in [0, n); iterations must be independent.
template <class F>
void parallel_for(std::size_t n, F&& body) {
#pragma omp parallel for schedule(static) num_threads(threads())
  for (long long i = 0; i < static_cast<long long>(n); ++i) body(static_cast<std::size_t>(i));
}

// Sum of term(i) over [0, n) with a fixed reduction order independent of
// the worker count: terms are stored, then added sequentially.
template <class T, class F>
T ordered_sum(std::size_t n, F&& term) {
  std::vector<T> parts(n);
  parallel_for(n, [&](std::size_t i) { parts[i] = term(i); });
  T acc{};
  for (const T& p : parts) acc += p;
  return acc;
}

}  // namespace klab
