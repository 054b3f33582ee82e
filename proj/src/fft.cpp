#include "fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace klab {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

void dft3_batch(cplx* data, Idx3 dims, std::size_t howmany, std::size_t stride, std::size_t dist, int sign) {
  if (howmany == 0) return;
  int n[3] = {dims[2], dims[1], dims[0]};
  auto* p = reinterpret_cast<fftw_complex*>(data);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_many_dft(3, n, static_cast<int>(howmany), p, nullptr, static_cast<int>(stride),
                              static_cast<int>(dist), p, nullptr, static_cast<int>(stride),
                              static_cast<int>(dist), sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  require(plan != nullptr, ErrorCode::InvalidArgument, "fftw planning failed");
  fftw_execute(plan);
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace klab
