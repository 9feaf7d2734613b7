// Time-stepper checks against solutions obtained by entirely different
// routes: the periodized free Gaussian packet in closed form, and a dense
// spectral Hamiltonian exponentiated by eigendecomposition.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "qilab/propagator.hpp"
#include "qilab/rng.hpp"

using namespace qilab;

namespace {

GridSpec small_grid(int n_time = 33) {
  GridSpec g;
  g.n_space = 16;
  g.n_time = n_time;
  return g;
}

// Periodized free Gaussian: sum of images of (a/(a+it))^{n/2} e^{-|x|^2/(4(a+it))},
// which solves i du/dt = -Lap u with u(0) = e^{-|x|^2/(4a)}.
SpatialField gaussian_packet_exact(const GridSpec& g, double a, double t) {
  SpatialField f(g);
  const cplx b(a, t);
  const cplx amp = std::pow(a / b, 0.5 * g.n_dim);
  std::vector<int> ix(g.n_dim);
  const int reach = 3;
  for (std::int64_t s = 0; s < g.space_points(); ++s) {
    unflatten_space(g, s, ix.data());
    cplx acc = 0.0;
    if (g.n_dim == 2) {
      for (int mx = -reach; mx <= reach; ++mx)
        for (int my = -reach; my <= reach; ++my) {
          const double x0 = g.x(ix[0]) + 2.0 * g.half_width * mx;
          const double x1 = g.x(ix[1]) + 2.0 * g.half_width * my;
          acc += std::exp(-(x0 * x0 + x1 * x1) / (4.0 * b));
        }
    }
    f.v[static_cast<std::size_t>(s)] = amp * acc;
  }
  return f;
}

SpatialField packet_with_momentum(const GridSpec& g, double kx, double ky, double width) {
  SpatialField f(g);
  std::vector<int> ix(2);
  for (std::int64_t s = 0; s < g.space_points(); ++s) {
    unflatten_space(g, s, ix.data());
    const double x = g.x(ix[0]), y = g.x(ix[1]);
    f.v[static_cast<std::size_t>(s)] =
        std::polar(std::exp(-(x * x + y * y) / (2.0 * width * width)), kx * x + ky * y);
  }
  return f;
}

double rel_diff(const SpatialField& a, const SpatialField& b) {
  return rel_l2_diff(a.v, b.v);
}

}  // namespace

TEST_CASE("free evolution matches the periodized Gaussian packet") {
  GridSpec g = small_grid(65);
  // 32 nodes: the packet's largest on-grid frequency coefficient is e^{-64},
  // so sampling alias sits far below the 1e-10 oracle tolerance (16 nodes
  // leave it near 3e-9).
  g.n_space = 32;
  SpatialField f0 = gaussian_packet_exact(g, 1.0, 0.0);
  Trajectory tr = evolve(f0, Potential::zero(g));
  SpatialField exact = gaussian_packet_exact(g, 1.0, g.horizon);
  CHECK(rel_diff(tr.final_state(), exact) < 1e-10);
  // And the one-shot spectral propagator agrees with the step-by-step run.
  SpatialField oneshot = free_propagate(f0, g.horizon);
  CHECK(rel_diff(tr.final_state(), oneshot) < 1e-12);
}

TEST_CASE("dense spectral Hamiltonian oracle, time-independent real V") {
  GridSpec g = small_grid(257);
  const std::int64_t n = g.space_points();
  Potential V = make_gaussian(g, 0.8, {0.5, -0.4}, 1.0);

  // H = -Lap + V assembled densely from the analytic kernel
  //   (-Lap)_{ab} = N^{-1} sum_k |xi_k|^2 exp(i xi_k . (x_a - x_b)).
  Eigen::MatrixXcd H(n, n);
  std::vector<double> xs(static_cast<std::size_t>(g.n_space));
  for (int i = 0; i < g.n_space; ++i) xs[static_cast<std::size_t>(i)] = g.x(i);
  std::vector<cplx> vdiag;
  V.eval_into(0.0, vdiag);
  std::vector<int> ia(2), ib(2);
  for (std::int64_t aa = 0; aa < n; ++aa) {
    unflatten_space(g, aa, ia.data());
    for (std::int64_t bb = 0; bb < n; ++bb) {
      unflatten_space(g, bb, ib.data());
      cplx acc = 0.0;
      for (int k1 = 0; k1 < g.n_space; ++k1)
        for (int k2 = 0; k2 < g.n_space; ++k2) {
          const double xi1 = g.xi(k1), xi2 = g.xi(k2);
          acc += (xi1 * xi1 + xi2 * xi2) *
                 std::polar(1.0, xi1 * (xs[static_cast<std::size_t>(ia[0])] -
                                        xs[static_cast<std::size_t>(ib[0])]) +
                                 xi2 * (xs[static_cast<std::size_t>(ia[1])] -
                                        xs[static_cast<std::size_t>(ib[1])]));
        }
      H(aa, bb) = acc / static_cast<double>(n);
      if (aa == bb) H(aa, bb) += vdiag[static_cast<std::size_t>(aa)];
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  REQUIRE(es.info() == Eigen::Success);

  SpatialField f0 = packet_with_momentum(g, 1.0, -0.5, 1.2);
  Eigen::VectorXcd v0(n);
  for (std::int64_t i = 0; i < n; ++i) v0(i) = f0.v[static_cast<std::size_t>(i)];
  Eigen::VectorXcd coef = es.eigenvectors().adjoint() * v0;
  for (std::int64_t i = 0; i < n; ++i)
    coef(i) *= std::polar(1.0, -es.eigenvalues()(i) * g.horizon);
  Eigen::VectorXcd vT = es.eigenvectors() * coef;

  SpatialField num = initial_to_final(f0, V);
  double err2 = 0.0, ref2 = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    err2 += std::norm(num.v[static_cast<std::size_t>(i)] - vT(i));
    ref2 += std::norm(vT(i));
  }
  CHECK(std::sqrt(err2 / ref2) < 5e-4);  // residual splitting error at dt = 1/256
}

TEST_CASE("unitarity for real potentials") {
  GridSpec g = small_grid(65);
  Potential V = make_two_bumps(g, 0.9, 3.0, 0.8);
  SpatialField f0 = packet_with_momentum(g, 2.0, 1.0, 1.0);
  Trajectory tr = evolve(f0, V);
  const double n0 = l2_norm(tr.initial());
  double drift = 0.0;
  for (const SpatialField& s : tr.states)
    drift = std::max(drift, std::abs(l2_norm(s) - n0) / n0);
  CHECK(drift < 1e-12);
}

TEST_CASE("second-order self-convergence for smooth time-dependent V") {
  SpatialField u_coarse, u_mid, u_fine;
  for (int nt : {17, 33, 65}) {
    GridSpec g = small_grid(nt);
    Potential V = make_modulated_gaussian(g, 0.6, 1.0, 0.8, {0.0, 0.0}, 1.0);
    SpatialField f0 = packet_with_momentum(g, 1.0, 0.0, 1.1);
    SpatialField uT = initial_to_final(f0, V);
    if (nt == 17)
      u_coarse = uT;
    else if (nt == 33)
      u_mid = uT;
    else
      u_fine = uT;
  }
  const double e1 = rel_l2_diff(u_coarse.v, u_mid.v);
  const double e2 = rel_l2_diff(u_mid.v, u_fine.v);
  CHECK(e1 / e2 > 3.2);
  CHECK(e1 / e2 < 4.8);
}

TEST_CASE("forward/backward adjoint pairing is conserved, complex V") {
  GridSpec g = small_grid(33);
  SpatialField prof = gaussian_profile(g, 0.7, {1.0, -1.0}, 0.9);
  for (cplx& z : prof.v) z *= cplx(1.0, 0.45);
  Potential V = Potential::time_independent(std::move(prof), 1.0, "complex_bump");

  SpatialField f = packet_with_momentum(g, 1.0, 1.0, 1.0);
  SpatialField h = packet_with_momentum(g, -2.0, 0.5, 0.8);
  Trajectory u = evolve(f, V);
  Trajectory v = solve_final_value(h, V);
  const cplx ref = inner(u.final_state(), v.final_state());
  for (int j = 0; j < g.n_time; ++j) {
    const cplx q = inner(u.states[static_cast<std::size_t>(j)],
                         v.states[static_cast<std::size_t>(j)]);
    CHECK(std::abs(q - ref) < 1e-10 * std::abs(ref));
  }
  // The backward solve really ends on its data.
  CHECK(rel_l2_diff(v.final_state().v, h.v) == 0.0);
}

TEST_CASE("source solver agrees with the two-potential difference route") {
  GridSpec g = small_grid(65);
  Potential V1 = make_gaussian(g, 0.5, {0.0, 0.0}, 1.0);
  Potential V2 = make_two_bumps(g, 0.4, 2.5, 0.7);
  SpatialField f0 = packet_with_momentum(g, 0.5, -1.0, 1.0);

  Trajectory u1 = evolve(f0, V1);
  Trajectory u2 = evolve(f0, V2);

  // (i d/dt + Lap - V2)(u2 - u1) = (V2 - V1) u1 with zero initial data.
  SpaceTimeField F(g, Support::slab);
  std::vector<cplx> a, b;
  for (int j = 0; j < g.n_time; ++j) {
    V2.eval_into(g.t_slab(j), a);
    V1.eval_into(g.t_slab(j), b);
    const SpatialField& s = u1.states[static_cast<std::size_t>(j)];
    for (std::int64_t i = 0; i < g.space_points(); ++i)
      F.time_slice(j)[i] = (a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) *
                           s.v[static_cast<std::size_t>(i)];
  }
  Trajectory w = solve_duhamel(F, V2);

  SpatialField diff(g);
  for (std::int64_t i = 0; i < g.space_points(); ++i)
    diff.v[static_cast<std::size_t>(i)] =
        u2.final_state().v[static_cast<std::size_t>(i)] -
        u1.final_state().v[static_cast<std::size_t>(i)];
  CHECK(rel_l2_diff(w.final_state().v, diff.v) < 5e-3);
  CHECK(l2_norm(w.initial()) == 0.0);
}
