#pragma once
#include <string>
#include <vector>

#include "qilab/dyadic.hpp"
#include "qilab/multiplier.hpp"
#include "qilab/potential.hpp"

namespace qilab {

// Complex-exponential solutions u = e^phi (u_sharp + u_flat) with the linear
// phase phi(t,x) = i|nu|^2 t + sign * nu.x.  All solving happens in the
// conjugated variables (the factor e^phi divided out): e^{nu.x} overflows
// doubles long before the interesting |nu| range ends, so only assemble()
// ever exponentiates, and residuals are defined on the weighted fields.

struct CGOPhase {
  std::vector<double> nu;        // nonzero direction, dimension n
  int sign = +1;                 // phi = i|nu|^2 t + sign*nu.x
  std::vector<double> rotation;  // n x n row-major Q, Q e_n = nu/|nu|
  bool reflection_composed = false;  // mirrored nu-axis frame realizes sign=-1
  double nu_mag = 0.0;

  int n_dim() const { return static_cast<int>(nu.size()); }
  double q(int row, int col) const { return rotation[static_cast<std::size_t>(row) * nu.size() + col]; }
  // phi(t,x); real part sign*nu.x, imaginary part |nu|^2 t.
  cplx phi(double t, const double* x) const;
  // Max |QtQ - I| entry and |Q e_n - nu/|nu|| (construction diagnostics).
  double orthogonality_defect() const;
  double axis_defect() const;
};

// Householder frame: Q = I - 2 v vt / |v|^2 with v = nu/|nu| - e_n (identity
// when nu is already along +e_n).  The linear-phase relation
// i*gamma + zeta.zeta = 0 (gamma = i|nu|^2, zeta = sign*nu) is checked at
// construction.  Requires n >= 2.
CGOPhase make_phase(const std::vector<double>& nu, int sign);

// Time window for amplitudes on the extended window: C-infinity, identically
// 1 on the plateau [-T/4, T + T/4] containing the slab, decaying to exactly 0
// on a few guard nodes before the periodic seam.  Smoothness of the window is
// what keeps the discrete spectral residual of windowed amplitudes tiny.
double plateau_window(const GridSpec& g, double t);

// Amplitude u_sharp(t,x) = w(t) * [free transverse evolution of psi](y(x)),
// y_a(x) = (Q e_a).x for a = 1..n-1: a free solution of the conjugated
// operator i d/dt + Lap + 2 sign*nu.grad, constant along nu, multiplied by the
// plateau time window w.  psi lives on grid.transverse() (physical or
// frequency domain).  Evaluation is by trigonometric interpolation: exact at
// the grid nodes for axis-aligned nu (index fast path), mode summation
// otherwise.  Transverse modes with |psi_hat| below 1e-14 * max|psi_hat| are
// dropped in the general path (far below every tolerance used downstream).
SpaceTimeField amplitude(const SpatialField& psi, const CGOPhase& phase, const GridSpec& grid);

// Spectral directional derivative dir.grad u per time slice (diagnostics).
SpaceTimeField directional_derivative(const SpaceTimeField& u, const std::vector<double>& dir);

// sup |V| over each dyadic strip (row-major (j,k), extended-window times).
std::vector<double> strip_sup(const Potential& V, const DyadicDecomposition& dec);

struct CGOSolveOptions {
  double theta = 0.25;      // strip-weight exponent, in (0, 1/2)
  double tol = 1e-8;        // stop when y(increment) <= tol * y(u_flat)
  int max_iter = 64;
  double delta = 1e-8;      // symbol division regularization
  bool half_offset = true;  // avoid the exact symbol zero at (tau,xi) = 0
};

struct CGOSolution {
  CGOPhase phase;
  SpatialField psi;          // transverse profile behind u_sharp (may be empty)
  SpaceTimeField u_sharp;    // windowed amplitude, extended window
  SpaceTimeField u_flat;     // correction, extended window
  CGOSolveOptions options;
  int iterations = 0;
  bool converged = false;
  std::vector<double> increment_history;  // y-norm of each Neumann increment
  std::vector<double> residual_history;   // ||V d_k||_2: residual after step k
  double y_norm_flat = 0.0;               // final ||u_flat||_Y
  double source_x_norm = 0.0;             // ||V u_sharp||_X
  double bound_constant = 0.0;            // y_norm_flat / source_x_norm
  double contraction_ratio = 0.0;         // geometric mean increment ratio
  double residual = 0.0;     // measured ||P u_flat - V(u_sharp+u_flat)||_2
  double source_l2 = 0.0;    // ||V u_sharp||_2 (the residual scale)
  double summability = 0.0;  // sum_j 2^{j(1/2+theta)} sup_{space strip j}|V|
};

// Neumann iteration for the correction: d_1 = S(V u_sharp),
// d_{k+1} = S(V d_k), u_flat = sum d_k, where S divides by the symbol of the
// conjugated operator (lambda = |nu|^2, zeta = sign*nu).  Stops when the
// y-norm of the latest increment falls to tol * y(u_flat); three consecutive
// increment growths raise a divergence error carrying the observed ratio
// (the operational "below threshold" signal for this V).  The returned
// residual is measured independently by applying the forward symbol.
CGOSolution solve_remainder(const Potential& V, const SpaceTimeField& u_sharp,
                            const CGOPhase& phase, const CGOSolveOptions& opts = {},
                            const SpatialField& psi = {});

// Pointwise e^phi (u_sharp + u_flat) on the slab.  Unconverged solutions are
// rejected; |nu.x| beyond the double exponent range is rejected as well.
SpaceTimeField assemble(const CGOSolution& sol);

// Residual of the assembled solution in conjugated variables, on interior
// slab nodes (both slab time endpoints excluded):
//   || (P - V)(u_sharp + u_flat) ||_{L2} / || u_sharp + u_flat ||_{L2}
// with P the conjugated free operator applied spectrally.  Equals the
// relative residual of (i d/dt + Lap - V) on the assembled field with the
// weight e^{-Re phi} applied, identically in exact arithmetic.
double conjugated_residual_slab(const CGOSolution& sol, const Potential& V);

}  // namespace qilab
