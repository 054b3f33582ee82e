#pragma once

#include <complex>
#include <cstddef>

#include "spectral.hpp"

namespace klab {

// In-place batch of 3D DFTs. dims are per-axis sizes with axis 0 fastest;
// element (i0,i1,i2) of batch b sits at data[b*dist + stride*(i0 + n0*(i1 + n1*i2))].
// sign -1 computes sum f e^{-2 pi i m k / n}, +1 the conjugate kernel. Unnormalized.
void dft3_batch(cplx* data, Idx3 dims, std::size_t howmany, std::size_t stride, std::size_t dist, int sign);

}  // namespace klab
