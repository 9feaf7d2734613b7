#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "qilab/dyadic.hpp"
#include "qilab/fft.hpp"

namespace qilab {

// Space-time Fourier multipliers for the conjugated operator
//   i d/dt + Lap + 2 zeta.grad + (zeta.zeta - lambda)
// whose symbol at frequency (tau, xi) is
//   p_{(lambda,zeta)}(tau, xi) = -lambda + zeta.zeta - tau - |xi|^2 + 2i zeta.xi
// (zeta.zeta without conjugation, so it is complex for complex zeta).
// apply_S divides by the symbol: exact division where |p| > delta * M with
// M = max_grid |p|, and the damped inverse conj(p)/(|p|^2 + (delta M)^2) at
// the few near-characteristic nodes at or below the threshold.  With
// delta = 0 an exact zero on the grid is a hard error.

struct SymbolParams {
  double lambda = 0.0;
  std::vector<cplx> zeta;
  double delta = 1e-8;

  void validate(int n_dim) const;
};

// Convenience: the parameters of the operator i d/dt + Lap + 2 s nu.grad,
// i.e. lambda = |nu|^2, zeta = s*nu (s = +-1).
SymbolParams remainder_symbol(const std::vector<double>& nu, int sign, double delta = 1e-8);

cplx symbol_eval(const SymbolParams& p, double tau, const std::vector<double>& xi);
// Normalized model symbol tau - |xi|^2 + i xi_n.
cplx symbol_normalized(double tau, const std::vector<double>& xi);

struct MultiplierOptions {
  bool half_offset = false;  // shift time frequencies by dtau/2
};

SpaceTimeField apply_S(const SpaceTimeField& f, const SymbolParams& p,
                       MultiplierOptions opts = {});
// Multiplication by the (unregularized) symbol: the forward operator.
SpaceTimeField apply_forward(const SpaceTimeField& f, const SymbolParams& p,
                             MultiplierOptions opts = {});

// Generic division by caller-supplied symbol values over the frequency grid
// (one value per extended node, time-major layout like the field).  Used to
// cross-check rescaled parametrizations of the same operator.
SpaceTimeField apply_inverse_symbol(const SpaceTimeField& f, const std::vector<cplx>& symbol,
                                    double delta, MultiplierOptions opts = {});
// Symbol values of p over the frequency grid.
std::vector<cplx> symbol_grid(const GridSpec& g, const SymbolParams& p, bool half_offset = false);

// Two-dimensional model multiplier on a (time-like, space-like) grid
// (n_dim == 1): divides by q(tau, xi) = tau - xi^2 + i xi.
SpaceTimeField apply_T_2d(const SpaceTimeField& f, double delta = 1e-8);

// Randomized estimate of the operator norm of apply_S from the
// sum-weighted strip norm (x_norm, exponent theta) to the sup-weighted strip
// norm (y_norm, exponent 1/2 - theta).  Inputs are smooth random fields
// localized in single dyadic strips; deterministic under the seed.
struct BenchRow {
  int trial = 0;
  double nu_mag = 0.0;
  double theta = 0.0;
  double x = 0.0;
  double y = 0.0;
  double ratio = 0.0;
};

struct BenchReport {
  std::vector<double> nu;
  double theta = 0.0;
  std::uint64_t seed = 0;
  std::vector<BenchRow> rows;
  double max_ratio = 0.0;
  double mean_ratio = 0.0;
};

BenchReport bench_multiplier_norm(const GridSpec& g, const std::vector<double>& nu, double theta,
                                  int trials, std::uint64_t seed, double delta = 1e-8);

}  // namespace qilab
