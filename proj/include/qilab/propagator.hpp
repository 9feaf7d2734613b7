#pragma once
#include <string>
#include <vector>

#include "qilab/fft.hpp"
#include "qilab/potential.hpp"

namespace qilab {

// Time stepping for  i du/dt = -Lap u + V u  on the periodic box.
//
// One step of the splitting scheme from t to t+h:
//   exp(-i V(t+3h/4) h/2) . exp(i h Lap) . exp(-i V(t+h/4) h/2)
// (kinetic factor applied exactly in frequency space).  Sampling the
// potential at the two quarter points keeps the scheme second order for
// time-dependent V and makes the discrete forward/backward steps exact
// adjoints of each other, so <u(t), v(t)> is conserved to rounding when v
// runs the final-value solve below.

struct Trajectory {
  GridSpec grid;
  std::string potential_id;
  std::vector<SpatialField> states;  // states[j] = u(t_j), j = 0..n_time-1

  const SpatialField& initial() const { return states.front(); }
  const SpatialField& final_state() const { return states.back(); }
};

// exp(i t Lap) f, evaluated spectrally (t of either sign).
SpatialField free_propagate(const SpatialField& f, double t);

// Forward solve with u(0) = f; all slab states stored.
Trajectory evolve(const SpatialField& f, const Potential& V);

// Forward solve keeping only u(T).
SpatialField initial_to_final(const SpatialField& f, const Potential& V);

// Solves  i dv/dt = -Lap v + conj(V) v  with v(T) = g, returned on the
// forward time axis (states[j] = v(t_j), states.back() == g bit-for-bit).
// Runs as a forward solve in reversed time on the conjugated state.
Trajectory solve_final_value(const SpatialField& g, const Potential& V);

// Solves  (i d/dt + Lap - V) u = F  with u(0) = 0; F given on slab nodes and
// sampled at step midpoints by linear interpolation.
Trajectory solve_duhamel(const SpaceTimeField& F, const Potential& V);

// Discrete inner product <a, b> = sum a conj(b) dx^n.
cplx inner(const SpatialField& a, const SpatialField& b);
double l2_norm(const SpatialField& a);

}  // namespace qilab
