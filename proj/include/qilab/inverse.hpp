#pragma once
#include <memory>
#include <string>
#include <vector>

#include "qilab/dataset.hpp"
#include "qilab/propagator.hpp"

namespace qilab {

// Handle on a final-state map: either a potential (forward-solved on demand)
// or a recorded dataset column (looked up; unknown probes raise
// missing_sample).  Copyable; dataset storage is shared.
class EvolutionMap {
 public:
  static EvolutionMap from_potential(Potential V);
  static EvolutionMap from_dataset(std::shared_ptr<const Dataset> d);

  const GridSpec& grid() const;
  bool dataset_backed() const { return dataset_ != nullptr; }
  const Dataset* dataset() const { return dataset_.get(); }

  SpatialField apply(const SpatialField& f) const;
  // The map applied to the plane wave with integer frequency indices k.
  SpatialField apply_mode(const std::vector<int>& k) const;

 private:
  std::shared_ptr<const Potential> potential_;
  std::shared_ptr<const Dataset> dataset_;
};

// i <(U1 - U2) f, g> under the discrete spatial inner product.
cplx identity_lhs(const EvolutionMap& m1, const EvolutionMap& m2, const SpatialField& f,
                  const SpatialField& g);

// Slab quadrature of (V1 - V2) u1 conj(v2) with u1 = evolve(f, V1) and
// v2 = solve_final_value(g, V2): trapezoid in time, dx^n in space.  Agrees
// with identity_lhs up to the time-quadrature error, which shrinks at second
// order under time-step refinement.
cplx identity_rhs(const Potential& V1, const Potential& V2, const SpatialField& f,
                  const SpatialField& g);

// One extracted frequency datum.  value estimates the slab Fourier integral
//   F(tau, xi) = int_0^T int_box V(t,x) e^{-i(tau t + xi.x)} dx dt
// to first order in V (Born linearization around the free evolution), where
// tau = |kappa1|^2 - |kappa2|^2 and xi = kappa2 - kappa1 by construction.
// Calibration: constant V = c gives value(0,0) = c * T * (2L)^n.
struct FrequencySample {
  std::vector<int> k1, k2;             // integer lattice indices
  std::vector<double> kappa1, kappa2;  // frequencies pi*k/L
  double tau = 0.0;
  std::vector<double> xi;
  cplx value{0.0, 0.0};
  double weight = 1.0;  // |time factor| of tau: conditioning indicator
};

// Single-pair extraction: value = i e^{i|kappa2|^2 T} <(U_T - free) f1, f2>
// with f1, f2 the plane waves of k1, k2.  The frequency overloads accept
// physical wave vectors and reject anything off the grid lattice.
FrequencySample born_sample(const EvolutionMap& map, const std::vector<int>& k1,
                            const std::vector<int>& k2);
FrequencySample born_sample(const EvolutionMap& map, const std::vector<double>& kappa1,
                            const std::vector<double>& kappa2);

// int_0^T e^{-i tau t} dt.
cplx time_factor(double tau, double T);

struct BornOptions {
  int n_modes = 225;     // probe modes (spiral order) for potential-backed maps
  int xi_max = 8;        // reconstruct spatial frequencies with |index|_inf <= xi_max
  bool time_dependent = false;
  int mode_cap = 2;      // time-frequency modes m in [-cap, cap] (time_dependent)
  double svd_threshold = 1e-8;  // relative singular-value cutoff
  bool keep_samples = false;    // retain the sample table in the report
};

struct ReconstructionReport {
  Potential estimate;
  std::string method;            // "born" | "iterative"
  int samples_used = 0;
  double conditioning = 0.0;     // smallest singular value across per-xi systems
  int rank_deficient = 0;        // xi bins flagged and zeroed
  double relative_l2_error = -1.0;  // filled by callers who know the truth
  bool early_stop = false;          // iterative refinement stopped on misfit growth
  std::vector<double> misfit_history;
  std::vector<FrequencySample> samples;  // when keep_samples
};

// Direct Fourier inversion of the Born samples.  time-independent mode:
// per-xi weighted average of value / time_factor(tau); time-dependent mode:
// per-xi least squares for the coefficients of V_hat(t, xi) on the slab
// time-frequency modes e^{i 2 pi m t / T}.  Bins with no admissible samples
// are zeroed; rank-deficient least-squares systems take the minimum-norm
// solution.  Both are counted, never fatal.  Dataset-backed maps use every
// fourier entry as a probe (gaussian-basis datasets are rejected).
ReconstructionReport reconstruct_born(const EvolutionMap& map, const BornOptions& opt = {});

// Fixed-point refinement: re-extracts samples against the forward map of the
// current estimate and adds the Born inversion of the mismatch.  Returns the
// candidate with the smallest sample-table misfit; two consecutive misfit
// increases stop early with the flag set.
ReconstructionReport reconstruct_iterative(const EvolutionMap& map, const Potential& initial,
                                           int iters, const BornOptions& opt = {});

// Max over seeded random unit probes f of ||U1 f - U2 f||_2: an operator
// distance lower bound; 0 (to solver rounding) iff the maps agree on probes.
double uniqueness_gap(const Potential& V1, const Potential& V2, int probes, std::uint64_t seed);

// Relative slab L2 distance between two potentials (trapezoid in time).
double potential_rel_l2(const Potential& a, const Potential& b);

}  // namespace qilab
