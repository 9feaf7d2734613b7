#include "qilab/dyadic.hpp"

#include <algorithm>
#include <cmath>

#include "qilab/errors.hpp"

namespace qilab {

int dyadic_stratum(double a) {
  int j = 0;
  double edge = 1.0;
  while (a > edge) {
    ++j;
    edge *= 2.0;
  }
  return j;
}

namespace {

std::vector<double> unit_direction(const GridSpec& grid, const std::vector<double>& nu) {
  if (static_cast<int>(nu.size()) != grid.n_dim)
    throw invalid_input("dyadic: nu dimension does not match grid");
  double m = std::sqrt(norm2(nu));
  if (m == 0.0) throw invalid_input("dyadic: nu must be nonzero");
  std::vector<double> d(nu);
  for (double& c : d) c /= m;
  return d;
}

// Time quadrature weight of node jt (see region_l2_norm contract).
inline double time_weight(const SpaceTimeField& u, int jt) {
  if (u.support == Support::extended) return u.grid.dt();
  return (jt == 0 || jt == u.grid.n_time - 1) ? 0.5 * u.grid.dt() : u.grid.dt();
}

}  // namespace

std::vector<std::uint8_t> DyadicDecomposition::mask(int j, int k) const {
  std::vector<std::uint8_t> m(time_stratum.size() * space_stratum.size(), 0);
  std::size_t idx = 0;
  for (int tj : time_stratum) {
    for (int sk : space_stratum) m[idx++] = (tj == j && sk == k) ? 1 : 0;
  }
  return m;
}

DyadicDecomposition build_dyadic(const GridSpec& grid, const std::vector<double>& nu) {
  grid.validate();
  std::vector<double> dir = unit_direction(grid, nu);

  DyadicDecomposition d;
  d.grid = grid;
  d.nu = nu;
  d.time_stratum.resize(grid.n_time_ext());
  for (int jt = 0; jt < grid.n_time_ext(); ++jt)
    d.time_stratum[jt] = dyadic_stratum(std::abs(grid.t_ext(jt)));

  d.space_stratum.resize(static_cast<std::size_t>(grid.space_points()));
  std::vector<int> ix(grid.n_dim);
  for (std::int64_t s = 0; s < grid.space_points(); ++s) {
    unflatten_space(grid, s, ix.data());
    double proj = 0.0;
    for (int a = 0; a < grid.n_dim; ++a) proj += grid.x(ix[a]) * dir[a];
    d.space_stratum[s] = dyadic_stratum(std::abs(proj));
  }

  d.n_time_strata = 1 + *std::max_element(d.time_stratum.begin(), d.time_stratum.end());
  d.n_space_strata = 1 + *std::max_element(d.space_stratum.begin(), d.space_stratum.end());
  d.counts.assign(static_cast<std::size_t>(d.n_time_strata) * d.n_space_strata, 0);
  std::vector<std::int64_t> space_counts(d.n_space_strata, 0);
  for (int sk : d.space_stratum) ++space_counts[sk];
  for (int tj : d.time_stratum)
    for (int k = 0; k < d.n_space_strata; ++k)
      d.counts[static_cast<std::size_t>(tj) * d.n_space_strata + k] += space_counts[k];
  return d;
}

std::vector<std::uint8_t> mask_where(const GridSpec& grid, Support support,
                                     const std::function<bool(double, const double*)>& pred) {
  const int nt = support == Support::slab ? grid.n_time : grid.n_time_ext();
  std::vector<std::uint8_t> m(static_cast<std::size_t>(nt) * grid.space_points());
  std::vector<int> ix(grid.n_dim);
  std::vector<double> x(grid.n_dim);
  std::size_t idx = 0;
  for (int jt = 0; jt < nt; ++jt) {
    double t = support == Support::slab ? grid.t_slab(jt) : grid.t_ext(jt);
    for (std::int64_t s = 0; s < grid.space_points(); ++s) {
      unflatten_space(grid, s, ix.data());
      for (int a = 0; a < grid.n_dim; ++a) x[a] = grid.x(ix[a]);
      m[idx++] = pred(t, x.data()) ? 1 : 0;
    }
  }
  return m;
}

double region_l2_norm(const SpaceTimeField& u, const std::vector<std::uint8_t>& mask) {
  if (mask.size() != u.size()) throw invalid_input("region_l2_norm: mask size mismatch");
  const double dv = std::pow(u.grid.dx(), u.grid.n_dim);
  double acc = 0.0;
  std::size_t idx = 0;
  for (int jt = 0; jt < u.n_times(); ++jt) {
    const double w = time_weight(u, jt) * dv;
    const cplx* slice = u.time_slice(jt);
    double slab_acc = 0.0;
    for (std::int64_t s = 0; s < u.grid.space_points(); ++s, ++idx)
      if (mask[idx]) slab_acc += std::norm(slice[s]);
    acc += w * slab_acc;
  }
  return std::sqrt(acc);
}

std::vector<double> strip_masses(const SpaceTimeField& u, const DyadicDecomposition& d) {
  if (u.support != Support::extended)
    throw invalid_input("strip_masses: field must be extended-supported");
  if (!(u.grid == d.grid)) throw invalid_input("strip_masses: grid mismatch");
  const double dv = std::pow(u.grid.dx(), u.grid.n_dim) * u.grid.dt();
  std::vector<double> masses(d.counts.size(), 0.0);
  std::vector<double> space_acc(d.n_space_strata);
  for (int jt = 0; jt < u.n_times(); ++jt) {
    std::fill(space_acc.begin(), space_acc.end(), 0.0);
    const cplx* slice = u.time_slice(jt);
    for (std::int64_t s = 0; s < u.grid.space_points(); ++s)
      space_acc[d.space_stratum[s]] += std::norm(slice[s]);
    const int tj = d.time_stratum[jt];
    for (int k = 0; k < d.n_space_strata; ++k)
      masses[static_cast<std::size_t>(tj) * d.n_space_strata + k] += dv * space_acc[k];
  }
  return masses;
}

namespace {

double weighted_reduce(const SpaceTimeField& f, const WeightedNormParams& p,
                       const DyadicDecomposition& d, bool sum_mode) {
  if (f.domain != Domain::physical)
    throw invalid_input("x_norm/y_norm: field must be in the physical domain");
  if (!(p.theta > 0.0 && p.theta < 0.5))
    throw invalid_input("x_norm/y_norm: theta must lie in (0, 1/2)");
  std::vector<double> masses = strip_masses(f, d);
  const double nu_quarter = std::pow(norm2(p.nu), 0.125);  // |nu|^{1/4}
  double acc = 0.0;
  for (int j = 0; j < d.n_time_strata; ++j) {
    for (int k = 0; k < d.n_space_strata; ++k) {
      if (!d.nonempty(j, k)) continue;
      double norm = std::sqrt(masses[static_cast<std::size_t>(j) * d.n_space_strata + k]);
      double w = std::exp2(sum_mode ? (j + k) * p.theta : -(j + k) * p.theta);
      double term = w * norm;
      acc = sum_mode ? acc + term : std::max(acc, term);
    }
  }
  return sum_mode ? acc / nu_quarter : acc * nu_quarter;
}

}  // namespace

double x_norm(const SpaceTimeField& f, const WeightedNormParams& p,
              const DyadicDecomposition& d) {
  return weighted_reduce(f, p, d, true);
}
double x_norm(const SpaceTimeField& f, const WeightedNormParams& p) {
  return x_norm(f, p, build_dyadic(f.grid, p.nu));
}
double y_norm(const SpaceTimeField& f, const WeightedNormParams& p,
              const DyadicDecomposition& d) {
  return weighted_reduce(f, p, d, false);
}
double y_norm(const SpaceTimeField& f, const WeightedNormParams& p) {
  return y_norm(f, p, build_dyadic(f.grid, p.nu));
}

}  // namespace qilab
