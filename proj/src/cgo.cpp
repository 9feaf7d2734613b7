#include "qilab/cgo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qilab/errors.hpp"
#include "qilab/fft.hpp"

namespace qilab {

cplx CGOPhase::phi(double t, const double* x) const {
  double nx = 0.0;
  for (std::size_t a = 0; a < nu.size(); ++a) nx += nu[a] * x[a];
  return cplx(sign * nx, nu_mag * nu_mag * t);
}

double CGOPhase::orthogonality_defect() const {
  const int n = n_dim();
  double worst = 0.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double e = 0.0;
      for (int k = 0; k < n; ++k) e += q(k, r) * q(k, c);
      worst = std::max(worst, std::abs(e - (r == c ? 1.0 : 0.0)));
    }
  return worst;
}

double CGOPhase::axis_defect() const {
  const int n = n_dim();
  double worst = 0.0;
  for (int r = 0; r < n; ++r) worst = std::max(worst, std::abs(q(r, n - 1) - nu[r] / nu_mag));
  return worst;
}

CGOPhase make_phase(const std::vector<double>& nu, int sign) {
  const int n = static_cast<int>(nu.size());
  if (n < 2) throw invalid_input("make_phase: need at least two spatial dimensions");
  if (sign != 1 && sign != -1) throw invalid_input("make_phase: sign must be +1 or -1");
  const double mag = std::sqrt(norm2(nu));
  if (mag == 0.0) throw invalid_input("make_phase: nu must be nonzero");

  CGOPhase ph;
  ph.nu = nu;
  ph.sign = sign;
  ph.nu_mag = mag;
  ph.reflection_composed = sign < 0;
  ph.rotation.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int r = 0; r < n; ++r) ph.rotation[static_cast<std::size_t>(r) * n + r] = 1.0;

  // Householder reflection swapping e_n and nu/|nu| (identity if coincident).
  std::vector<double> v(n);
  double vv = 0.0;
  for (int r = 0; r < n; ++r) {
    v[r] = nu[r] / mag - (r == n - 1 ? 1.0 : 0.0);
    vv += v[r] * v[r];
  }
  if (vv > 1e-30) {
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        ph.rotation[static_cast<std::size_t>(r) * n + c] -= 2.0 * v[r] * v[c] / vv;
  }

  if (ph.orthogonality_defect() > 1e-12 || ph.axis_defect() > 1e-12)
    throw invalid_state("make_phase: frame construction lost orthogonality");
  // Linear-phase relation i*gamma + zeta.zeta = 0, gamma = i|nu|^2, zeta = s*nu.
  const double eikonal = std::abs(-mag * mag + norm2(nu));
  if (eikonal > 1e-12 * std::max(1.0, mag * mag))
    throw invalid_state("make_phase: phase fails the linear eikonal relation");
  return ph;
}

namespace {

// C-infinity one-sided ramp: 0 for u <= 0, 1 for u >= 1.
double smooth_ramp(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

}  // namespace

double plateau_window(const GridSpec& g, double t) {
  const double T = g.horizon;
  const double margin = 0.25 * T;
  const double t_lo = g.t_ext(0);
  const double t_hi = g.t_ext(g.n_time_ext() - 1);
  const double guard = std::max(4.0 * g.dt(), 0.01 * T);
  const double rise_lo = t_lo + guard, rise_hi = -margin;   // 0 -> 1
  const double fall_lo = T + margin, fall_hi = t_hi - guard;  // 1 -> 0
  if (rise_hi <= rise_lo || fall_hi <= fall_lo)
    throw invalid_input("plateau_window: padding too small for the window transitions");
  if (t <= rise_lo || t >= fall_hi) return 0.0;
  if (t < rise_hi) return smooth_ramp((t - rise_lo) / (rise_hi - rise_lo));
  if (t > fall_lo) return smooth_ramp((fall_hi - t) / (fall_hi - fall_lo));
  return 1.0;
}

SpaceTimeField amplitude(const SpatialField& psi, const CGOPhase& phase, const GridSpec& grid) {
  grid.validate();
  if (phase.n_dim() != grid.n_dim) throw invalid_input("amplitude: phase dimension mismatch");
  const GridSpec tg = grid.transverse();
  if (!(psi.grid == tg))
    throw invalid_input("amplitude: psi must live on the transverse grid of the target grid");

  SpatialField psihat =
      psi.domain == Domain::frequency ? psi : transform_spatial(psi, Direction::forward);

  const int n = grid.n_dim;
  const std::int64_t sp = grid.space_points();
  const std::int64_t tsp = tg.space_points();
  SpaceTimeField out(grid, Support::extended, Domain::physical);

  // |xi'|^2 per transverse bin.
  std::vector<double> xi2(static_cast<std::size_t>(tsp));
  std::vector<int> tix(std::max(1, tg.n_dim));
  for (std::int64_t s = 0; s < tsp; ++s) {
    unflatten_space(tg, s, tix.data());
    double q = 0.0;
    for (int a = 0; a < tg.n_dim; ++a) {
      const double xi = tg.xi(tix[a]);
      q += xi * xi;
    }
    xi2[static_cast<std::size_t>(s)] = q;
  }

  // Fast path: every transverse frame vector is a signed coordinate axis, so
  // y(x) lands on transverse grid nodes and evaluation is a gather.
  bool aligned = true;
  std::vector<int> axis_of(n - 1, -1);
  std::vector<int> sign_of(n - 1, 1);
  for (int a = 0; a < n - 1 && aligned; ++a) {
    int hits = 0;
    for (int r = 0; r < n; ++r) {
      const double e = phase.q(r, a);
      if (std::abs(e) < 1e-14) continue;
      if (std::abs(std::abs(e) - 1.0) < 1e-14) {
        axis_of[a] = r;
        sign_of[a] = e > 0 ? 1 : -1;
        ++hits;
      } else {
        aligned = false;
      }
    }
    if (hits != 1) aligned = false;
  }

  if (aligned) {
    std::vector<std::int64_t> gather(static_cast<std::size_t>(sp));
    std::vector<int> ix(n);
    for (std::int64_t s = 0; s < sp; ++s) {
      unflatten_space(grid, s, ix.data());
      std::int64_t t = 0;
      for (int a = 0; a < n - 1; ++a) {
        int i = ix[axis_of[a]];
        if (sign_of[a] < 0) i = (grid.n_space - i) % grid.n_space;
        t = t * grid.n_space + i;
      }
      gather[static_cast<std::size_t>(s)] = t;
    }
    SpatialField ev(tg, Domain::frequency);
    for (int jt = 0; jt < grid.n_time_ext(); ++jt) {
      const double t = grid.t_ext(jt);
      const double w = plateau_window(grid, t);
      cplx* slice = out.time_slice(jt);
      if (w == 0.0) {
        std::fill(slice, slice + sp, cplx(0.0));
        continue;
      }
      for (std::int64_t s = 0; s < tsp; ++s) {
        const std::size_t i = static_cast<std::size_t>(s);
        ev.v[i] = psihat.v[i] * std::polar(1.0, -xi2[i] * t);
      }
      SpatialField evolved = transform_spatial(ev, Direction::inverse);
      for (std::int64_t s = 0; s < sp; ++s)
        slice[s] = w * evolved.v[static_cast<std::size_t>(gather[static_cast<std::size_t>(s)])];
    }
    return out;
  }

  // General path: trigonometric interpolation by explicit mode summation.
  double peak = 0.0;
  for (const cplx& c : psihat.v) peak = std::max(peak, std::abs(c));
  struct Mode {
    cplx coef;
    double xi2;
    std::vector<double> eta;  // full-space wave vector Q' xi'
  };
  std::vector<Mode> modes;
  for (std::int64_t s = 0; s < tsp; ++s) {
    const std::size_t i = static_cast<std::size_t>(s);
    if (std::abs(psihat.v[i]) <= 1e-14 * peak) continue;
    unflatten_space(tg, s, tix.data());
    Mode m;
    m.coef = psihat.v[i];
    m.xi2 = xi2[i];
    m.eta.assign(n, 0.0);
    for (int r = 0; r < n; ++r)
      for (int a = 0; a < n - 1; ++a) m.eta[r] += phase.q(r, a) * tg.xi(tix[a]);
    modes.push_back(std::move(m));
  }
  const double scale = std::pow(static_cast<double>(tsp), -0.5);

  // Per-axis phase tables make each spatial factor a product of n lookups.
  const std::size_t block = 16;
  std::vector<std::vector<cplx>> factors(block, std::vector<cplx>(static_cast<std::size_t>(sp)));
  std::vector<int> ix(n);
  std::fill(out.v.begin(), out.v.end(), cplx(0.0));
  for (std::size_t b0 = 0; b0 < modes.size(); b0 += block) {
    const std::size_t nb = std::min(block, modes.size() - b0);
    for (std::size_t r = 0; r < nb; ++r) {
      std::vector<std::vector<cplx>> axis_tab(n, std::vector<cplx>(grid.n_space));
      for (int d = 0; d < n; ++d)
        for (int i = 0; i < grid.n_space; ++i)
          axis_tab[d][i] = std::polar(1.0, modes[b0 + r].eta[d] * grid.x(i));
      for (std::int64_t s = 0; s < sp; ++s) {
        unflatten_space(grid, s, ix.data());
        cplx f = axis_tab[0][ix[0]];
        for (int d = 1; d < n; ++d) f *= axis_tab[d][ix[d]];
        factors[r][static_cast<std::size_t>(s)] = f;
      }
    }
    for (int jt = 0; jt < grid.n_time_ext(); ++jt) {
      const double t = grid.t_ext(jt);
      const double w = plateau_window(grid, t);
      if (w == 0.0) continue;
      cplx* slice = out.time_slice(jt);
      for (std::size_t r = 0; r < nb; ++r) {
        const cplx a = scale * w * modes[b0 + r].coef * std::polar(1.0, -modes[b0 + r].xi2 * t);
        const cplx* f = factors[r].data();
        for (std::int64_t s = 0; s < sp; ++s) slice[s] += a * f[s];
      }
    }
  }
  return out;
}

SpaceTimeField directional_derivative(const SpaceTimeField& u, const std::vector<double>& dir) {
  if (static_cast<int>(dir.size()) != u.grid.n_dim)
    throw invalid_input("directional_derivative: direction dimension mismatch");
  if (u.domain != Domain::physical)
    throw invalid_input("directional_derivative: field must be in the physical domain");
  const GridSpec& g = u.grid;
  const std::int64_t sp = g.space_points();
  std::vector<cplx> mult(static_cast<std::size_t>(sp));
  std::vector<int> ix(g.n_dim);
  for (std::int64_t s = 0; s < sp; ++s) {
    unflatten_space(g, s, ix.data());
    double dxi = 0.0;
    for (int a = 0; a < g.n_dim; ++a) dxi += dir[a] * g.xi(ix[a]);
    mult[static_cast<std::size_t>(s)] = kI * dxi;
  }
  SpaceTimeField out = u;
  SpatialField slice(g, Domain::physical);
  for (int jt = 0; jt < u.n_times(); ++jt) {
    std::copy(u.time_slice(jt), u.time_slice(jt) + sp, slice.v.begin());
    SpatialField hat = transform_spatial(slice, Direction::forward);
    for (std::int64_t s = 0; s < sp; ++s)
      hat.v[static_cast<std::size_t>(s)] *= mult[static_cast<std::size_t>(s)];
    SpatialField back = transform_spatial(hat, Direction::inverse);
    std::copy(back.v.begin(), back.v.end(), out.time_slice(jt));
  }
  return out;
}

std::vector<double> strip_sup(const Potential& V, const DyadicDecomposition& dec) {
  const GridSpec& g = dec.grid;
  std::vector<double> sup(static_cast<std::size_t>(dec.n_time_strata) * dec.n_space_strata, 0.0);
  // sup |V| per spatial stratum, refreshed per time node for time-dependent V.
  std::vector<double> space_sup(dec.n_space_strata, 0.0);
  std::vector<cplx> buf;
  const std::int64_t sp = g.space_points();
  for (int jt = 0; jt < g.n_time_ext(); ++jt) {
    if (jt == 0 || V.time_dependent()) {
      V.eval_into(g.t_ext(jt), buf);
      std::fill(space_sup.begin(), space_sup.end(), 0.0);
      for (std::int64_t s = 0; s < sp; ++s) {
        double& m = space_sup[dec.space_stratum[static_cast<std::size_t>(s)]];
        m = std::max(m, std::abs(buf[static_cast<std::size_t>(s)]));
      }
    }
    const int j = dec.time_stratum[jt];
    for (int k = 0; k < dec.n_space_strata; ++k) {
      double& cell = sup[static_cast<std::size_t>(j) * dec.n_space_strata + k];
      cell = std::max(cell, space_sup[k]);
    }
  }
  return sup;
}

namespace {

double full_l2(const SpaceTimeField& u) {
  const std::vector<std::uint8_t> all(u.size(), 1);
  return region_l2_norm(u, all);
}

}  // namespace

CGOSolution solve_remainder(const Potential& V, const SpaceTimeField& u_sharp,
                            const CGOPhase& phase, const CGOSolveOptions& opts,
                            const SpatialField& psi) {
  if (u_sharp.support != Support::extended || u_sharp.domain != Domain::physical)
    throw invalid_input("solve_remainder: u_sharp must be a physical extended-window field");
  if (!(V.grid() == u_sharp.grid)) throw invalid_input("solve_remainder: grid mismatch");
  if (phase.n_dim() != u_sharp.grid.n_dim)
    throw invalid_input("solve_remainder: phase dimension mismatch");
  if (!(opts.theta > 0.0 && opts.theta < 0.5))
    throw invalid_input("solve_remainder: theta must lie in (0, 1/2)");
  if (!(opts.tol > 0.0)) throw invalid_input("solve_remainder: tol must be positive");
  if (opts.max_iter < 1) throw invalid_input("solve_remainder: max_iter must be >= 1");

  const GridSpec& g = u_sharp.grid;
  DyadicDecomposition dec = build_dyadic(g, phase.nu);
  const WeightedNormParams px{phase.nu, opts.theta};
  const WeightedNormParams py{phase.nu, 0.5 - opts.theta};
  const SymbolParams sym = remainder_symbol(phase.nu, phase.sign, opts.delta);
  const MultiplierOptions mopt{opts.half_offset};

  CGOSolution sol;
  sol.phase = phase;
  sol.psi = psi;
  sol.u_sharp = u_sharp;
  sol.options = opts;

  // Summability diagnostic of the potential across the spatial strips.
  {
    std::vector<double> node_sup(static_cast<std::size_t>(g.space_points()), 0.0);
    std::vector<cplx> buf;
    for (int j = 0; j < g.n_time; ++j) {
      if (j > 0 && !V.time_dependent()) break;
      V.eval_into(g.t_slab(j), buf);
      for (std::size_t s = 0; s < node_sup.size(); ++s)
        node_sup[s] = std::max(node_sup[s], std::abs(buf[s]));
    }
    std::vector<double> stratum_sup(dec.n_space_strata, 0.0);
    for (std::size_t s = 0; s < node_sup.size(); ++s) {
      double& m = stratum_sup[dec.space_stratum[s]];
      m = std::max(m, node_sup[s]);
    }
    for (int k = 0; k < dec.n_space_strata; ++k)
      sol.summability += std::exp2(k * (0.5 + opts.theta)) * stratum_sup[k];
  }

  SpaceTimeField source = multiply_potential(V, u_sharp);
  sol.source_l2 = full_l2(source);
  sol.source_x_norm = x_norm(source, px, dec);

  SpaceTimeField d = apply_S(source, sym, mopt);
  sol.u_flat = d;
  double y_prev = y_norm(d, py, dec);
  sol.increment_history.push_back(y_prev);
  sol.iterations = 1;
  int growth_streak = 0;

  while (true) {
    const double y_flat = y_norm(sol.u_flat, py, dec);
    if (sol.increment_history.back() <= opts.tol * y_flat) {
      sol.converged = true;
      break;
    }
    if (sol.iterations >= opts.max_iter) break;

    SpaceTimeField vd = multiply_potential(V, d);
    sol.residual_history.push_back(full_l2(vd));
    d = apply_S(vd, sym, mopt);
    const double y_new = y_norm(d, py, dec);
    for (std::size_t i = 0; i < d.size(); ++i) sol.u_flat.v[i] += d.v[i];
    sol.increment_history.push_back(y_new);
    ++sol.iterations;

    if (y_new > y_prev) {
      if (++growth_streak >= 3) {
        std::ostringstream msg;
        msg << "solve_remainder: increment y-norms grew for 3 consecutive iterations (";
        const std::size_t h = sol.increment_history.size();
        msg << sol.increment_history[h - 4] << " -> " << sol.increment_history[h - 3] << " -> "
            << sol.increment_history[h - 2] << " -> " << sol.increment_history[h - 1]
            << "); estimated contraction factor "
            << y_new / sol.increment_history[h - 4] << " per three steps at |nu| = "
            << phase.nu_mag << " -- direction magnitude below the admissible threshold for this "
            << "potential";
        throw divergence_error(msg.str());
      }
    } else {
      growth_streak = 0;
    }
    y_prev = y_new;
  }

  sol.y_norm_flat = y_norm(sol.u_flat, py, dec);
  sol.bound_constant = sol.source_x_norm > 0.0 ? sol.y_norm_flat / sol.source_x_norm : 0.0;
  if (sol.increment_history.size() >= 2) {
    double logsum = 0.0;
    int cnt = 0;
    for (std::size_t i = 1; i < sol.increment_history.size(); ++i) {
      if (sol.increment_history[i] > 0.0 && sol.increment_history[i - 1] > 0.0) {
        logsum += std::log(sol.increment_history[i] / sol.increment_history[i - 1]);
        ++cnt;
      }
    }
    sol.contraction_ratio = cnt > 0 ? std::exp(logsum / cnt) : 0.0;
  }

  // Independent residual measurement: apply the forward symbol to u_flat and
  // compare against the accumulated source.
  {
    SpaceTimeField pu = apply_forward(sol.u_flat, sym, mopt);
    SpaceTimeField total = sol.u_sharp;
    for (std::size_t i = 0; i < total.size(); ++i) total.v[i] += sol.u_flat.v[i];
    SpaceTimeField vtotal = multiply_potential(V, total);
    for (std::size_t i = 0; i < pu.size(); ++i) pu.v[i] -= vtotal.v[i];
    sol.residual = full_l2(pu);
    sol.residual_history.push_back(sol.residual);
  }
  return sol;
}

SpaceTimeField assemble(const CGOSolution& sol) {
  if (!sol.converged)
    throw invalid_state("assemble: CGO solution did not converge; refusing to assemble");
  const GridSpec& g = sol.u_sharp.grid;
  double corner = 0.0;
  for (double c : sol.phase.nu) corner += std::abs(c) * g.half_width;
  if (corner > 690.0)
    throw invalid_input("assemble: |nu.x| exceeds the double exponent range on this box");

  SpaceTimeField out(g, Support::slab, Domain::physical);
  const std::int64_t sp = g.space_points();
  std::vector<int> ix(g.n_dim);
  std::vector<double> xv(g.n_dim);
  std::vector<cplx> expphi(static_cast<std::size_t>(sp));
  for (int j = 0; j < g.n_time; ++j) {
    const double t = g.t_slab(j);
    const int je = j + g.pad_before();
    const cplx* sharp = sol.u_sharp.time_slice(je);
    const cplx* flat = sol.u_flat.time_slice(je);
    cplx* dst = out.time_slice(j);
    for (std::int64_t s = 0; s < sp; ++s) {
      unflatten_space(g, s, ix.data());
      for (int a = 0; a < g.n_dim; ++a) xv[a] = g.x(ix[a]);
      const cplx ph = sol.phase.phi(t, xv.data());
      expphi[static_cast<std::size_t>(s)] = std::exp(ph.real()) * std::polar(1.0, ph.imag());
      dst[s] = expphi[static_cast<std::size_t>(s)] * (sharp[s] + flat[s]);
    }
  }
  return out;
}

double conjugated_residual_slab(const CGOSolution& sol, const Potential& V) {
  const GridSpec& g = sol.u_sharp.grid;
  SpaceTimeField w = sol.u_sharp;
  for (std::size_t i = 0; i < w.size(); ++i) w.v[i] += sol.u_flat.v[i];
  const SymbolParams sym = remainder_symbol(sol.phase.nu, sol.phase.sign, sol.options.delta);
  SpaceTimeField pw = apply_forward(w, sym, MultiplierOptions{sol.options.half_offset});
  SpaceTimeField vw = multiply_potential(V, w);
  for (std::size_t i = 0; i < pw.size(); ++i) pw.v[i] -= vw.v[i];

  SpaceTimeField r_slab = restrict_slab(pw);
  SpaceTimeField w_slab = restrict_slab(w);
  const double T = g.horizon, dt = g.dt();
  const auto interior = mask_where(g, Support::slab, [T, dt](double t, const double*) {
    return t > 0.5 * dt && t < T - 0.5 * dt;
  });
  const double den = region_l2_norm(w_slab, interior);
  return den > 0.0 ? region_l2_norm(r_slab, interior) / den : 0.0;
}

}  // namespace qilab
