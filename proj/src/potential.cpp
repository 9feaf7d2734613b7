#include "qilab/potential.hpp"

#include <algorithm>
#include <cmath>

#include "qilab/errors.hpp"

namespace qilab {

Potential Potential::zero(const GridSpec& g) {
  Potential p;
  p.kind_ = Kind::static_profile;
  p.grid_ = g;
  p.profile_ = SpatialField(g);
  p.decay_rate_ = 1.0;
  p.id_ = "zero";
  return p;
}

Potential Potential::time_independent(SpatialField profile, double decay_rate, std::string id) {
  Potential p;
  p.kind_ = Kind::static_profile;
  p.grid_ = profile.grid;
  p.profile_ = std::move(profile);
  p.decay_rate_ = decay_rate;
  p.id_ = std::move(id);
  return p;
}

Potential Potential::separable(SpatialField profile, std::function<cplx(double)> modulation,
                               double decay_rate, std::string id) {
  Potential p;
  p.kind_ = Kind::separable;
  p.grid_ = profile.grid;
  p.profile_ = std::move(profile);
  p.modulation_ = std::move(modulation);
  p.decay_rate_ = decay_rate;
  p.id_ = std::move(id);
  return p;
}

Potential Potential::sampled(SpaceTimeField slab_values, double decay_rate, std::string id) {
  if (slab_values.support != Support::slab)
    throw invalid_input("Potential::sampled: values must be slab-supported");
  Potential p;
  p.kind_ = Kind::sampled;
  p.grid_ = slab_values.grid;
  p.samples_ = std::move(slab_values);
  p.decay_rate_ = decay_rate;
  p.id_ = std::move(id);
  return p;
}

void Potential::eval_into(double t, std::vector<cplx>& out) const {
  const std::size_t n = static_cast<std::size_t>(grid_.space_points());
  out.resize(n);
  switch (kind_) {
    case Kind::static_profile:
      std::copy(profile_.v.begin(), profile_.v.end(), out.begin());
      return;
    case Kind::separable: {
      const cplx m = modulation_(t);
      for (std::size_t i = 0; i < n; ++i) out[i] = m * profile_.v[i];
      return;
    }
    case Kind::sampled: {
      const double dt = grid_.dt();
      double pos = t / dt;
      int j0 = static_cast<int>(std::floor(pos));
      j0 = std::clamp(j0, 0, grid_.n_time - 2);
      double w = std::clamp(pos - j0, 0.0, 1.0);
      const cplx* a = samples_.time_slice(j0);
      const cplx* b = samples_.time_slice(j0 + 1);
      for (std::size_t i = 0; i < n; ++i) out[i] = (1.0 - w) * a[i] + w * b[i];
      return;
    }
  }
}

SpatialField Potential::at_time(double t) const {
  SpatialField f(grid_);
  eval_into(t, f.v);
  return f;
}

SpaceTimeField Potential::on_slab() const {
  SpaceTimeField out(grid_, Support::slab);
  std::vector<cplx> buf;
  for (int j = 0; j < grid_.n_time; ++j) {
    eval_into(grid_.t_slab(j), buf);
    std::copy(buf.begin(), buf.end(), out.time_slice(j));
  }
  return out;
}

Potential Potential::conjugate() const {
  Potential p = *this;
  p.id_ = id_ + "~conj";
  for (cplx& z : p.profile_.v) z = std::conj(z);
  for (cplx& z : p.samples_.v) z = std::conj(z);
  if (kind_ == Kind::separable) {
    auto m = modulation_;
    p.modulation_ = [m](double t) { return std::conj(m(t)); };
  }
  return p;
}

Potential Potential::time_reversed() const {
  Potential p = *this;
  p.id_ = id_ + "~rev";
  const double T = grid_.horizon;
  if (kind_ == Kind::separable) {
    auto m = modulation_;
    p.modulation_ = [m, T](double t) { return m(T - t); };
  } else if (kind_ == Kind::sampled) {
    for (int j = 0; j < grid_.n_time; ++j) {
      const cplx* src = samples_.time_slice(grid_.n_time - 1 - j);
      std::copy(src, src + grid_.space_points(), p.samples_.time_slice(j));
    }
  }
  return p;
}

double Potential::sup_norm() const {
  double m = 0.0;
  std::vector<cplx> buf;
  for (int j = 0; j < grid_.n_time; ++j) {
    eval_into(grid_.t_slab(j), buf);
    for (const cplx& z : buf) m = std::max(m, std::abs(z));
  }
  return m;
}

void Potential::check_decay(double bound) const {
  // Outermost shell: nodes whose max-norm coordinate is within one cell of
  // the box edge.
  const double edge = grid_.half_width - 1.5 * grid_.dx();
  std::vector<int> ix(grid_.n_dim);
  std::vector<cplx> buf;
  for (int j = 0; j < grid_.n_time; ++j) {
    eval_into(grid_.t_slab(j), buf);
    for (std::int64_t s = 0; s < grid_.space_points(); ++s) {
      unflatten_space(grid_, s, ix.data());
      double linf = 0.0, r2 = 0.0;
      for (int a = 0; a < grid_.n_dim; ++a) {
        double c = grid_.x(ix[a]);
        linf = std::max(linf, std::abs(c));
        r2 += c * c;
      }
      if (linf < edge) continue;
      double w = std::abs(buf[s]) * std::exp(decay_rate_ * std::sqrt(r2));
      if (w > bound)
        throw invalid_input("Potential: insufficient decay at the box edge (|V|e^{c|x|} = " +
                            std::to_string(w) + ")");
    }
    if (kind_ == Kind::static_profile) break;  // time nodes identical
  }
}

SpatialField gaussian_profile(const GridSpec& g, double amplitude,
                              const std::vector<double>& center, double sigma) {
  if (static_cast<int>(center.size()) != g.n_dim)
    throw invalid_input("gaussian_profile: center dimension mismatch");
  SpatialField f(g);
  std::vector<int> ix(g.n_dim);
  for (std::int64_t s = 0; s < g.space_points(); ++s) {
    unflatten_space(g, s, ix.data());
    double r2 = 0.0;
    for (int a = 0; a < g.n_dim; ++a) {
      double d = g.x(ix[a]) - center[a];
      r2 += d * d;
    }
    f.v[s] = amplitude * std::exp(-r2 / (sigma * sigma));
  }
  return f;
}

Potential make_gaussian(const GridSpec& g, double amplitude, const std::vector<double>& center,
                        double sigma) {
  Potential p = Potential::time_independent(gaussian_profile(g, amplitude, center, sigma), 1.0,
                                            "gaussian");
  p.check_decay(1e-6);
  return p;
}

SpaceTimeField multiply_potential(const Potential& V, const SpaceTimeField& u) {
  if (!(V.grid() == u.grid)) throw invalid_input("multiply_potential: grid mismatch");
  if (u.domain != Domain::physical)
    throw invalid_input("multiply_potential: field must be in the physical domain");
  SpaceTimeField out = u;
  const std::int64_t sp = u.grid.space_points();
  std::vector<cplx> buf;
  const bool slab = u.support == Support::slab;
  for (int j = 0; j < u.n_times(); ++j) {
    if (j == 0 || V.time_dependent())
      V.eval_into(slab ? u.grid.t_slab(j) : u.grid.t_ext(j), buf);
    cplx* slice = out.time_slice(j);
    for (std::int64_t s = 0; s < sp; ++s) slice[s] *= buf[static_cast<std::size_t>(s)];
  }
  return out;
}

Potential make_two_bumps(const GridSpec& g, double amplitude, double separation, double sigma) {
  std::vector<double> c1(g.n_dim, 0.0), c2(g.n_dim, 0.0);
  c1[0] = -0.5 * separation;
  c2[0] = 0.5 * separation;
  SpatialField f = gaussian_profile(g, amplitude, c1, sigma);
  SpatialField f2 = gaussian_profile(g, amplitude, c2, sigma);
  for (std::size_t i = 0; i < f.size(); ++i) f.v[i] += f2.v[i];
  Potential p = Potential::time_independent(std::move(f), 1.0, "two_bumps");
  p.check_decay(1e-6);
  return p;
}

Potential make_constant(const GridSpec& g, cplx value) {
  SpatialField f(g, Domain::physical);
  std::fill(f.v.begin(), f.v.end(), value);
  return Potential::time_independent(std::move(f), 0.0, "constant");
}

Potential make_modulated_gaussian(const GridSpec& g, double amplitude, double base,
                                  double cos_weight, const std::vector<double>& center,
                                  double sigma) {
  const double T = g.horizon;
  Potential p = Potential::separable(
      gaussian_profile(g, amplitude, center, sigma),
      [base, cos_weight, T](double t) {
        return cplx(base + cos_weight * std::cos(2.0 * kPi * t / T), 0.0);
      },
      1.0, "modulated_gaussian");
  p.check_decay(1e-6);
  return p;
}

}  // namespace qilab
