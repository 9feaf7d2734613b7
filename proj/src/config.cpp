#include "qilab/config.hpp"

#include <fstream>

#include "qilab/dataset.hpp"
#include "qilab/errors.hpp"

namespace qilab {

using nlohmann::json;

json grid_to_json(const GridSpec& g) {
  return json{{"n_dim", g.n_dim},     {"half_width", g.half_width},
              {"n_space", g.n_space}, {"horizon", g.horizon},
              {"n_time", g.n_time},   {"time_pad_factor", g.time_pad_factor}};
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  try {
    g.n_dim = j.at("n_dim").get<int>();
    g.half_width = j.at("half_width").get<double>();
    g.n_space = j.at("n_space").get<int>();
    g.horizon = j.at("horizon").get<double>();
    g.n_time = j.at("n_time").get<int>();
    g.time_pad_factor = j.value("time_pad_factor", 4);
  } catch (const json::exception& e) {
    throw invalid_input(std::string("grid description: ") + e.what());
  }
  g.validate();
  return g;
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    if (j.contains("grid")) c.grid = grid_from_json(j.at("grid"));
    c.theta = j.value("theta", c.theta);
    c.tol = j.value("tol", c.tol);
    c.delta = j.value("delta", c.delta);
    c.seed = j.value("seed", c.seed);
    c.out = j.value("out", c.out);
    if (j.contains("potential")) c.potential = j.at("potential");
    if (j.contains("potential2")) c.potential2 = j.at("potential2");
  } catch (const json::exception& e) {
    throw invalid_input(std::string("config: ") + e.what());
  }
  if (!(c.theta > 0.0 && c.theta < 0.5)) throw invalid_input("config: theta must lie in (0,1/2)");
  if (!(c.tol > 0.0)) throw invalid_input("config: tol must be positive");
  if (!(c.delta >= 0.0 && c.delta <= 1e-2))
    throw invalid_input("config: delta must lie in [0, 1e-2]");
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw invalid_input(std::string("config: ") + e.what());
  }
  return parse_config(j);
}

Potential make_potential(const json& desc, const GridSpec& g) {
  if (desc.is_null()) return Potential::zero(g);
  std::string kind;
  try {
    kind = desc.at("kind").get<std::string>();
    if (kind == "zero") return Potential::zero(g);
    if (kind == "constant") {
      cplx v;
      const auto& jv = desc.at("value");
      if (jv.is_array())
        v = cplx(jv.at(0).get<double>(), jv.at(1).get<double>());
      else
        v = cplx(jv.get<double>(), 0.0);
      return make_constant(g, v);
    }
    std::vector<double> center(g.n_dim, 0.0);
    if (desc.contains("center")) {
      center = desc.at("center").get<std::vector<double>>();
      if (static_cast<int>(center.size()) != g.n_dim)
        throw invalid_input("potential: center dimension mismatch");
    }
    if (kind == "gaussian")
      return make_gaussian(g, desc.value("amplitude", 0.5), center, desc.value("sigma", 1.0));
    if (kind == "two_bumps")
      return make_two_bumps(g, desc.value("amplitude", 0.5), desc.value("separation", 3.0),
                            desc.value("sigma", 0.8));
    if (kind == "modulated_gaussian")
      return make_modulated_gaussian(g, desc.value("amplitude", 0.5), desc.value("base", 1.0),
                                     desc.value("cos_weight", 0.5), center,
                                     desc.value("sigma", 1.0));
    if (kind == "file") {
      SpaceTimeField f = load_spacetime_field(desc.at("path").get<std::string>());
      if (!(f.grid == g)) throw invalid_input("potential: field grid mismatch");
      if (f.support != Support::slab) throw invalid_input("potential: expected a slab field");
      return Potential::sampled(std::move(f), 1.0, "file");
    }
  } catch (const json::exception& e) {
    throw invalid_input(std::string("potential description: ") + e.what());
  }
  throw invalid_input("potential: unknown kind '" + kind + "'");
}

}  // namespace qilab
