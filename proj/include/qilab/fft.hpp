#pragma once
#include "qilab/field.hpp"

namespace qilab {

// Unitary discrete Fourier transforms tied to the physical coordinates of
// GridSpec.  Forward transform of a physical field:
//
//   fhat[k] = N_tot^{-1/2} * sum_nodes f(x) * exp(-i xi_k . x)          (space)
//   fhat[m,k] = N_tot^{-1/2} * sum f(t,x) * exp(-i(tau_m t + xi_k . x)) (space-time)
//
// and the inverse uses the conjugate phases, so a pure grid mode
// exp(i xi_k . x) maps to a single real positive coefficient and Parseval
// holds exactly: sum |f|^2 == sum |fhat|^2.  Because x starts at -L and t at
// -pad_before*dt, the implementation is an FFT plus per-axis phase fixups.
//
// Space-time transforms are defined on extended-support fields only; slab
// fields must be embedded first (the padding is what keeps window-global
// operations from wrapping into the slab).
//
// half_offset shifts every time frequency by dtau/2 (see GridSpec::tau); the
// same flag must be passed to both directions for the pair to invert.

enum class Direction { forward, inverse };

SpatialField transform_spatial(const SpatialField& f, Direction dir);
SpaceTimeField transform_spacetime(const SpaceTimeField& f, Direction dir,
                                   bool half_offset = false);

}  // namespace qilab
