#pragma once
#include <array>
#include <cstdint>
#include <vector>

#include "qilab/common.hpp"
#include "qilab/errors.hpp"

namespace qilab {

// Discretization of the space-time cylinder (0,T) x [-L,L)^n.
//
// Conventions (used consistently everywhere):
//   * spatial nodes      x_i = -L + i*dx,  dx = 2L/n_space,  i = 0..n_space-1
//   * spatial frequencies xi_k = pi*k/L,   k = -n_space/2 .. n_space/2 - 1
//   * slab time nodes    t_j = j*dt,       dt = T/(n_time-1), j = 0..n_time-1
//   * the extended window has time_pad_factor*n_time nodes at spacing dt; the
//     slab sits centered in it, so extended node j carries physical time
//     (j - pad_before())*dt and the padding absorbs the non-periodic tails of
//     window-global operations (space-time multipliers)
//   * time frequencies   tau_m = 2*pi*m/(n_time_ext*dt) with the signed index
//     m = -n_time_ext/2 .. n_time_ext/2 - 1; an optional half-bin offset
//     (m -> m + 1/2) is used by callers that must avoid tau = 0 exactly.
//
// n_dim = 1 is accepted so that the auxiliary two-dimensional (one time-like
// plus one space-like axis) multiplier can reuse the container; the phase /
// reconstruction machinery itself requires n_dim >= 2.
struct GridSpec {
  int n_dim = 2;
  double half_width = 2.0 * kPi;  // L
  int n_space = 64;               // nodes per spatial axis, power of two
  double horizon = 1.0;           // T
  int n_time = 129;               // slab nodes, including both endpoints
  int time_pad_factor = 4;

  void validate() const {
    if (n_dim < 1 || n_dim > 3) throw invalid_input("GridSpec: n_dim must be 1, 2 or 3");
    if (half_width <= 0.0) throw invalid_input("GridSpec: half_width must be positive");
    if (n_space < 2 || (n_space & (n_space - 1)) != 0)
      throw invalid_input("GridSpec: n_space must be a power of two >= 2");
    if (horizon <= 0.0) throw invalid_input("GridSpec: horizon must be positive");
    if (n_time < 2) throw invalid_input("GridSpec: n_time must be at least 2");
    if (time_pad_factor < 1) throw invalid_input("GridSpec: time_pad_factor must be >= 1");
  }

  double dx() const { return 2.0 * half_width / n_space; }
  double dt() const { return horizon / (n_time - 1); }

  std::int64_t space_points() const {
    std::int64_t p = 1;
    for (int a = 0; a < n_dim; ++a) p *= n_space;
    return p;
  }
  int n_time_ext() const { return time_pad_factor * n_time; }
  int pad_before() const { return (n_time_ext() - n_time) / 2; }
  double window_span() const { return n_time_ext() * dt(); }

  // Physical coordinates.
  double x(int i) const { return -half_width + i * dx(); }
  double t_slab(int j) const { return j * dt(); }
  double t_ext(int j) const { return (j - pad_before()) * dt(); }

  // Signed frequency index of bin b on an axis with nbins nodes.
  static int signed_index(int b, int nbins) { return b < nbins / 2 ? b : b - nbins; }

  // Spatial frequency of bin b: xi = pi*k/L with k the signed index.
  double xi(int b) const { return kPi * signed_index(b, n_space) / half_width; }

  double dtau() const { return 2.0 * kPi / window_span(); }
  // Time frequency of bin b on the extended window; half_offset shifts the
  // whole comb by dtau/2 so that no bin sits at tau = 0.
  double tau(int b, bool half_offset = false) const {
    return (signed_index(b, n_time_ext()) + (half_offset ? 0.5 : 0.0)) * dtau();
  }

  bool operator==(const GridSpec& o) const {
    return n_dim == o.n_dim && half_width == o.half_width && n_space == o.n_space &&
           horizon == o.horizon && n_time == o.n_time && time_pad_factor == o.time_pad_factor;
  }

  // Grid of the (n-1)-dimensional transverse hyperplane (same L and spacing).
  GridSpec transverse() const {
    if (n_dim < 2) throw invalid_input("GridSpec: no transverse grid in dimension < 2");
    GridSpec g = *this;
    g.n_dim -= 1;
    return g;
  }
};

}  // namespace qilab
