#pragma once
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qilab/field.hpp"

namespace qilab {

// Potential V(t,x) on the slab.  Three storage kinds:
//   * static_profile      V(t,x) = W(x)
//   * separable           V(t,x) = m(t) * W(x) with an analytic modulation
//                         (evaluable at arbitrary t, which keeps midpoint
//                         sampling exact under time-step refinement)
//   * sampled             V given on the slab nodes, linear interpolation
//                         between neighbouring time nodes
// Values may be complex; conjugate() / time_reversed() exist because the
// final-value solver runs the adjoint dynamics through them.
class Potential {
 public:
  Potential() = default;

  static Potential zero(const GridSpec& g);
  static Potential time_independent(SpatialField profile, double decay_rate,
                                    std::string id = "static");
  static Potential separable(SpatialField profile, std::function<cplx(double)> modulation,
                             double decay_rate, std::string id = "separable");
  static Potential sampled(SpaceTimeField slab_values, double decay_rate,
                           std::string id = "sampled");

  const GridSpec& grid() const { return grid_; }
  bool time_dependent() const { return kind_ != Kind::static_profile; }
  const std::string& id() const { return id_; }
  double decay_rate() const { return decay_rate_; }

  // V(t, .) evaluated on the spatial grid; out is resized to space_points().
  void eval_into(double t, std::vector<cplx>& out) const;
  SpatialField at_time(double t) const;
  SpaceTimeField on_slab() const;

  Potential conjugate() const;
  Potential time_reversed() const;  // t -> horizon - t

  double sup_norm() const;  // max |V| over slab nodes

  // Enforces |V(x)| * exp(c|x|) <= bound on the outermost spatial shell of
  // every slab time node; throws invalid_input when violated.  Builders of
  // localized potentials call this so box truncation stays honest.
  void check_decay(double bound) const;

 private:
  enum class Kind { static_profile, separable, sampled };
  Kind kind_ = Kind::static_profile;
  GridSpec grid_;
  SpatialField profile_;
  std::function<cplx(double)> modulation_;
  SpaceTimeField samples_;
  double decay_rate_ = 1.0;
  std::string id_ = "zero";
};

// V(t,.) * u(t,.) slice-wise.  Extended fields evaluate V at the extended
// physical times (sampled potentials clamp to the slab endpoints there).
SpaceTimeField multiply_potential(const Potential& V, const SpaceTimeField& u);

// Built-in localized potentials (decay checked at construction).
SpatialField gaussian_profile(const GridSpec& g, double amplitude,
                              const std::vector<double>& center, double sigma);
Potential make_gaussian(const GridSpec& g, double amplitude, const std::vector<double>& center,
                        double sigma);
Potential make_two_bumps(const GridSpec& g, double amplitude, double separation, double sigma);
// Spatially constant V = value: calibration aid (no decay enforcement).
Potential make_constant(const GridSpec& g, cplx value);
// amplitude * (base + cos_weight*cos(2 pi t / T)) * gaussian bump
Potential make_modulated_gaussian(const GridSpec& g, double amplitude, double base,
                                  double cos_weight, const std::vector<double>& center,
                                  double sigma);

}  // namespace qilab
