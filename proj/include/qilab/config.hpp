#pragma once
#include <cstdint>
#include <string>

#include "json.hpp"
#include "qilab/grid.hpp"
#include "qilab/potential.hpp"

namespace qilab {

nlohmann::json grid_to_json(const GridSpec& g);
GridSpec grid_from_json(const nlohmann::json& j);

struct RunConfig {
  GridSpec grid;
  double theta = 0.25;
  double tol = 1e-8;
  double delta = 1e-8;
  std::uint64_t seed = 1;
  nlohmann::json potential;   // description for make_potential; null => zero
  nlohmann::json potential2;  // second map for comparison commands; null => zero
  std::string out = "qilab_out";
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// Potential factory from a JSON description:
//   {"kind":"zero"}
//   {"kind":"constant","value":0.1}            (value may be [re,im])
//   {"kind":"gaussian","amplitude":a,"center":[..],"sigma":s}
//   {"kind":"two_bumps","amplitude":a,"separation":d,"sigma":s}
//   {"kind":"modulated_gaussian","amplitude":a,"base":b,"cos_weight":w,
//    "center":[..],"sigma":s}
//   {"kind":"file","path":"slab-field container"}   (sampled potential)
Potential make_potential(const nlohmann::json& desc, const GridSpec& g);

}  // namespace qilab
