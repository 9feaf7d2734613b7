#include "qilab/propagator.hpp"

#include <cmath>

#include "qilab/errors.hpp"

namespace qilab {
namespace {

// |xi|^2 per frequency-domain node.
std::vector<double> xi_sq_table(const GridSpec& g) {
  std::vector<double> tab(static_cast<std::size_t>(g.space_points()));
  std::vector<int> ix(g.n_dim);
  for (std::int64_t s = 0; s < g.space_points(); ++s) {
    unflatten_space(g, s, ix.data());
    double q = 0.0;
    for (int a = 0; a < g.n_dim; ++a) {
      double xi = g.xi(ix[a]);
      q += xi * xi;
    }
    tab[s] = q;
  }
  return tab;
}

class Stepper {
 public:
  Stepper(const GridSpec& g, const Potential& V) : grid_(g), V_(&V), xi_sq_(xi_sq_table(g)) {
    if (!(V.grid() == g)) throw invalid_input("propagator: potential grid mismatch");
  }

  // In-place splitting step state <- U(t+h, t) state.
  void step(SpatialField& state, double t, double h) {
    potential_phase(state, t + 0.25 * h, 0.5 * h);
    kinetic(state, h);
    potential_phase(state, t + 0.75 * h, 0.5 * h);
  }

  void kinetic(SpatialField& state, double h) {
    SpatialField hat = transform_spatial(state, Direction::forward);
    for (std::size_t s = 0; s < hat.v.size(); ++s)
      hat.v[s] *= std::exp(cplx(0.0, -xi_sq_[s] * h));
    state = transform_spatial(hat, Direction::inverse);
    state.domain = Domain::physical;
  }

  void potential_phase(SpatialField& state, double t, double h) {
    V_->eval_into(t, vbuf_);
    for (std::size_t s = 0; s < state.v.size(); ++s)
      state.v[s] *= std::exp(-kI * vbuf_[s] * h);
  }

 private:
  GridSpec grid_;
  const Potential* V_;
  std::vector<double> xi_sq_;
  std::vector<cplx> vbuf_;
};

}  // namespace

SpatialField free_propagate(const SpatialField& f, double t) {
  const GridSpec& g = f.grid;
  std::vector<double> xi_sq = xi_sq_table(g);
  SpatialField hat = transform_spatial(f, Direction::forward);
  for (std::size_t s = 0; s < hat.v.size(); ++s)
    hat.v[s] *= std::exp(cplx(0.0, -xi_sq[s] * t));
  SpatialField out = transform_spatial(hat, Direction::inverse);
  out.domain = Domain::physical;
  return out;
}

Trajectory evolve(const SpatialField& f, const Potential& V) {
  const GridSpec& g = f.grid;
  Stepper st(g, V);
  Trajectory tr;
  tr.grid = g;
  tr.potential_id = V.id();
  tr.states.reserve(g.n_time);
  tr.states.push_back(f);
  SpatialField state = f;
  const double h = g.dt();
  for (int j = 0; j + 1 < g.n_time; ++j) {
    st.step(state, g.t_slab(j), h);
    tr.states.push_back(state);
  }
  return tr;
}

SpatialField initial_to_final(const SpatialField& f, const Potential& V) {
  const GridSpec& g = f.grid;
  Stepper st(g, V);
  SpatialField state = f;
  const double h = g.dt();
  for (int j = 0; j + 1 < g.n_time; ++j) st.step(state, g.t_slab(j), h);
  return state;
}

Trajectory solve_final_value(const SpatialField& g_final, const Potential& V) {
  const GridSpec& g = g_final.grid;
  // With w(s,x) = conj(v(T-s,x)), the final-value problem for conj(V) turns
  // into the forward problem for V(T-s,x); undo the substitution at the end.
  SpatialField w0 = g_final;
  for (cplx& z : w0.v) z = std::conj(z);
  Trajectory wtr = evolve(w0, V.time_reversed());
  Trajectory out;
  out.grid = g;
  out.potential_id = V.id() + "~final_value";
  out.states.resize(g.n_time, SpatialField(g));
  for (int j = 0; j < g.n_time; ++j) {
    const SpatialField& w = wtr.states[g.n_time - 1 - j];
    for (std::size_t s = 0; s < w.v.size(); ++s) out.states[j].v[s] = std::conj(w.v[s]);
  }
  return out;
}

Trajectory solve_duhamel(const SpaceTimeField& F, const Potential& V) {
  if (F.support != Support::slab) throw invalid_input("solve_duhamel: F must be slab-supported");
  const GridSpec& g = F.grid;
  Stepper st(g, V);
  Trajectory tr;
  tr.grid = g;
  tr.potential_id = V.id() + "~duhamel";
  SpatialField state(g);  // u(0) = 0
  tr.states.reserve(g.n_time);
  tr.states.push_back(state);
  const double h = g.dt();
  SpatialField src(g);
  for (int j = 0; j + 1 < g.n_time; ++j) {
    const double t = g.t_slab(j);
    st.step(state, t, h);
    // Midpoint source, transported over the remaining half interval:
    //   u(t+h) += -i h U(t+h, t+h/2) F(t+h/2)
    const cplx* a = F.time_slice(j);
    const cplx* b = F.time_slice(j + 1);
    for (std::int64_t s = 0; s < g.space_points(); ++s) src.v[s] = 0.5 * (a[s] + b[s]);
    st.step(src, t + 0.5 * h, 0.5 * h);
    for (std::int64_t s = 0; s < g.space_points(); ++s) state.v[s] -= kI * h * src.v[s];
    tr.states.push_back(state);
  }
  return tr;
}

cplx inner(const SpatialField& a, const SpatialField& b) {
  if (!(a.grid == b.grid)) throw invalid_input("inner: grid mismatch");
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) s += a.v[i] * std::conj(b.v[i]);
  return s * std::pow(a.grid.dx(), a.grid.n_dim);
}

double l2_norm(const SpatialField& a) {
  return l2(a.v) * std::pow(std::pow(a.grid.dx(), a.grid.n_dim), 0.5);
}

}  // namespace qilab
