#include "qilab/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace qilab {
namespace {

// Process-wide FFTW plan cache.  Planning is not thread-safe, execution via
// fftw_execute_dft on fresh arrays is; plans are created UNALIGNED so they
// can be replayed on any buffer.
class PlanCache {
 public:
  fftw_plan get(const std::vector<int>& dims, int sign) {
    std::scoped_lock lk(mu_);
    auto key = std::make_pair(dims, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int d : dims) total *= d;
    std::vector<fftw_complex> a(total), b(total);
    fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(), a.data(), b.data(),
                                sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

PlanCache g_plans;

void run_fft(const std::vector<int>& dims, int sign, const cplx* in, cplx* out) {
  fftw_plan p = g_plans.get(dims, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

// The spatial phase fixup: nodes start at -L, so bin k picks up (-1)^k per
// axis relative to the plain DFT.  Parity of the signed and stored index
// agree because n_space is even.
inline int spatial_parity(const GridSpec& g, std::int64_t sidx) {
  int par = 0;
  for (int a = 0; a < g.n_dim; ++a) {
    par ^= static_cast<int>(sidx % g.n_space) & 1;
    sidx /= g.n_space;
  }
  return par;
}

}  // namespace

SpatialField transform_spatial(const SpatialField& f, Direction dir) {
  const GridSpec& g = f.grid;
  std::vector<int> dims(g.n_dim, g.n_space);
  SpatialField out(g, dir == Direction::forward ? Domain::frequency : Domain::physical);
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.space_points()));

  if (dir == Direction::forward) {
    run_fft(dims, FFTW_FORWARD, f.v.data(), out.v.data());
    for (std::size_t i = 0; i < out.v.size(); ++i)
      out.v[i] *= spatial_parity(g, static_cast<std::int64_t>(i)) ? -scale : scale;
  } else {
    std::vector<cplx> tmp(f.v.size());
    for (std::size_t i = 0; i < tmp.size(); ++i)
      tmp[i] = spatial_parity(g, static_cast<std::int64_t>(i)) ? -f.v[i] : f.v[i];
    run_fft(dims, FFTW_BACKWARD, tmp.data(), out.v.data());
    for (cplx& z : out.v) z *= scale;
  }
  return out;
}

SpaceTimeField transform_spacetime(const SpaceTimeField& f, Direction dir, bool half_offset) {
  if (f.support != Support::extended)
    throw invalid_input("transform_spacetime: field must be extended-supported");
  const GridSpec& g = f.grid;
  const int nt = g.n_time_ext();
  const std::int64_t sp = g.space_points();
  std::vector<int> dims;
  dims.push_back(nt);
  for (int a = 0; a < g.n_dim; ++a) dims.push_back(g.n_space);
  const double scale = 1.0 / std::sqrt(static_cast<double>(nt) * sp);
  const double t0 = g.t_ext(0);

  SpaceTimeField out(g, Support::extended,
                     dir == Direction::forward ? Domain::frequency : Domain::physical);

  if (dir == Direction::forward) {
    if (!half_offset && t0 == 0.0) {
      run_fft(dims, FFTW_FORWARD, f.v.data(), out.v.data());
    } else {
      std::vector<cplx> tmp(f.v.size());
      for (int jt = 0; jt < nt; ++jt) {
        // half-bin shift in frequency == modulation exp(-i*pi*jt/nt) in time
        cplx mod = half_offset ? std::exp(cplx(0.0, -kPi * jt / nt)) : cplx(1.0);
        const cplx* src = f.time_slice(jt);
        cplx* dst = tmp.data() + static_cast<std::size_t>(jt) * sp;
        for (std::int64_t i = 0; i < sp; ++i) dst[i] = src[i] * mod;
      }
      run_fft(dims, FFTW_FORWARD, tmp.data(), out.v.data());
    }
    for (int bt = 0; bt < nt; ++bt) {
      cplx ph = std::exp(cplx(0.0, -g.tau(bt, half_offset) * t0)) * scale;
      cplx* dst = out.time_slice(bt);
      for (std::int64_t i = 0; i < sp; ++i)
        dst[i] *= spatial_parity(g, i) ? -ph : ph;
    }
  } else {
    std::vector<cplx> tmp(f.v.size());
    for (int bt = 0; bt < nt; ++bt) {
      cplx ph = std::exp(cplx(0.0, g.tau(bt, half_offset) * t0));
      const cplx* src = f.time_slice(bt);
      cplx* dst = tmp.data() + static_cast<std::size_t>(bt) * sp;
      for (std::int64_t i = 0; i < sp; ++i)
        dst[i] = src[i] * (spatial_parity(g, i) ? -ph : ph);
    }
    run_fft(dims, FFTW_BACKWARD, tmp.data(), out.v.data());
    for (int jt = 0; jt < nt; ++jt) {
      cplx mod = half_offset ? std::exp(cplx(0.0, kPi * jt / nt)) * scale : cplx(scale);
      cplx* dst = out.time_slice(jt);
      for (std::int64_t i = 0; i < sp; ++i) dst[i] *= mod;
    }
  }
  return out;
}

}  // namespace qilab
