#include "qilab/field.hpp"

#include <cmath>
#include <cstring>

#include "qilab/errors.hpp"

namespace qilab {

SpaceTimeField embed_extended(const SpaceTimeField& slab) {
  if (slab.support != Support::slab) throw invalid_input("embed_extended: field is not slab-supported");
  SpaceTimeField out(slab.grid, Support::extended, slab.domain);
  const std::size_t sp = slab.grid.space_points();
  std::memcpy(out.time_slice(slab.grid.pad_before()), slab.v.data(),
              slab.v.size() * sizeof(cplx));
  (void)sp;
  return out;
}

SpaceTimeField restrict_slab(const SpaceTimeField& ext) {
  if (ext.support != Support::extended)
    throw invalid_input("restrict_slab: field is not extended-supported");
  SpaceTimeField out(ext.grid, Support::slab, ext.domain);
  std::memcpy(out.v.data(), ext.time_slice(ext.grid.pad_before()),
              out.v.size() * sizeof(cplx));
  return out;
}

double l2(const std::vector<cplx>& v) {
  double s = 0.0;
  for (const cplx& z : v) s += std::norm(z);
  return std::sqrt(s);
}

double rel_l2_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  if (a.size() != b.size()) throw invalid_input("rel_l2_diff: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a[i] - b[i]);
    den += std::norm(b[i]);
  }
  return std::sqrt(num) / std::max(std::sqrt(den), kEpsFloor);
}

}  // namespace qilab
