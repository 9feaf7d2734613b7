#pragma once
#include <cstdint>
#include <vector>

#include "qilab/grid.hpp"

namespace qilab {

enum class Domain { physical, frequency };
enum class Support { slab, extended };

// Complex scalar field on the spatial grid.  Row-major storage, axis x1
// slowest: index = (..(i1*N + i2)*N + ..) + i_n.
struct SpatialField {
  GridSpec grid;
  Domain domain = Domain::physical;
  std::vector<cplx> v;

  SpatialField() = default;
  SpatialField(const GridSpec& g, Domain d = Domain::physical)
      : grid(g), domain(d), v(static_cast<std::size_t>(g.space_points())) {
    g.validate();
  }

  std::size_t size() const { return v.size(); }
  cplx& operator[](std::size_t i) { return v[i]; }
  const cplx& operator[](std::size_t i) const { return v[i]; }
};

// Complex scalar field on the time x space grid, time axis outermost:
// index = jt * space_points + spatial_index.  Slab fields hold n_time
// temporal nodes, extended fields hold time_pad_factor*n_time.
struct SpaceTimeField {
  GridSpec grid;
  Domain domain = Domain::physical;
  Support support = Support::slab;
  std::vector<cplx> v;

  SpaceTimeField() = default;
  SpaceTimeField(const GridSpec& g, Support s, Domain d = Domain::physical)
      : grid(g), domain(d), support(s) {
    g.validate();
    v.resize(static_cast<std::size_t>(n_times()) * g.space_points());
  }

  int n_times() const { return support == Support::slab ? grid.n_time : grid.n_time_ext(); }
  std::size_t size() const { return v.size(); }
  cplx& operator[](std::size_t i) { return v[i]; }
  const cplx& operator[](std::size_t i) const { return v[i]; }

  cplx* time_slice(int jt) { return v.data() + static_cast<std::size_t>(jt) * grid.space_points(); }
  const cplx* time_slice(int jt) const {
    return v.data() + static_cast<std::size_t>(jt) * grid.space_points();
  }
};

// Decode a flat spatial index into per-axis node indices.
inline void unflatten_space(const GridSpec& g, std::int64_t idx, int* out) {
  for (int a = g.n_dim - 1; a >= 0; --a) {
    out[a] = static_cast<int>(idx % g.n_space);
    idx /= g.n_space;
  }
}

// Zero-pad a slab field into the extended window (slab block sits at
// pad_before()); restriction takes the same block back.  The two maps are
// exact inverses on the slab samples.
SpaceTimeField embed_extended(const SpaceTimeField& slab);
SpaceTimeField restrict_slab(const SpaceTimeField& ext);

// Plain l2 norm of the raw coefficient/sample vector (no measure weights).
double l2(const std::vector<cplx>& v);
double rel_l2_diff(const std::vector<cplx>& a, const std::vector<cplx>& b);

}  // namespace qilab
