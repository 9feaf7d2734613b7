#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "qilab/field.hpp"

namespace qilab {

// Dyadic strip geometry attached to a direction nu != 0:
//   time strata    j = 0: |t| <= 1,        j >= 1: 2^{j-1} < |t| <= 2^j
//   space strata   k = 0: |x.nu| <= |nu|,  k >= 1: 2^{k-1} < |x.nu|/|nu| <= 2^k
// A strip is the product of one stratum of each kind; on the truncated
// window/box the outermost strata are clipped and strata beyond the domain
// are simply absent.  |alpha| of strip (j,k) is j + k.

struct WeightedNormParams {
  std::vector<double> nu;
  double theta = 0.25;
};

struct DyadicDecomposition {
  GridSpec grid;
  std::vector<double> nu;
  std::vector<int> time_stratum;   // per extended time node
  std::vector<int> space_stratum;  // per spatial node
  int n_time_strata = 0;
  int n_space_strata = 0;
  std::vector<std::int64_t> counts;  // node count per strip, row-major (j,k)

  std::int64_t count(int j, int k) const {
    return counts[static_cast<std::size_t>(j) * n_space_strata + k];
  }
  bool nonempty(int j, int k) const { return count(j, k) > 0; }

  // Materialized indicator over the extended space-time grid.
  std::vector<std::uint8_t> mask(int j, int k) const;
};

// Dyadic stratum of a nonnegative coordinate value.
int dyadic_stratum(double a);

DyadicDecomposition build_dyadic(const GridSpec& grid, const std::vector<double>& nu);

// Indicator built from a predicate on physical coordinates (t, x[0..n-1]).
std::vector<std::uint8_t> mask_where(
    const GridSpec& grid, Support support,
    const std::function<bool(double, const double*)>& pred);

// L2 norm over a masked region with the grid measure: dx^n per node in
// space; in time, slab fields use the trapezoid weights (1/2 at the two slab
// endpoints) and extended fields plain dt per node.
double region_l2_norm(const SpaceTimeField& u, const std::vector<std::uint8_t>& mask);

// Squared region-L2 mass of every strip in one pass (extended fields).
std::vector<double> strip_masses(const SpaceTimeField& u, const DyadicDecomposition& d);

// x_norm: |nu|^{-1/4} * sum_strips 2^{|alpha| theta} ||u||_{L2(strip)}
// y_norm: |nu|^{+1/4} * max_strips 2^{-|alpha| theta} ||u||_{L2(strip)}
// Both act on physical extended-support fields.
double x_norm(const SpaceTimeField& f, const WeightedNormParams& p);
double x_norm(const SpaceTimeField& f, const WeightedNormParams& p, const DyadicDecomposition& d);
double y_norm(const SpaceTimeField& f, const WeightedNormParams& p);
double y_norm(const SpaceTimeField& f, const WeightedNormParams& p, const DyadicDecomposition& d);

}  // namespace qilab
