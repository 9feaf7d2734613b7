#include "qilab/dataset.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <thread>

#include "json.hpp"
#include "qilab/config.hpp"
#include "qilab/errors.hpp"
#include "qilab/propagator.hpp"
#include "qilab/rng.hpp"

static_assert(std::endian::native == std::endian::little,
              "containers are written as little-endian memory dumps");

namespace qilab {

using nlohmann::json;

namespace {

const std::array<std::uint32_t, 256>& crc_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

}  // namespace

std::uint32_t crc32(const void* data, std::size_t nbytes, std::uint32_t seed) {
  const auto& tab = crc_table();
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint32_t c = seed ^ 0xFFFFFFFFu;
  for (std::size_t i = 0; i < nbytes; ++i) c = tab[(c ^ p[i]) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

const DatasetEntry* Dataset::find_mode(const std::vector<int>& k) const {
  for (const DatasetEntry& e : entries)
    if (e.mode == k) return &e;
  return nullptr;
}

const DatasetEntry* Dataset::find_field(const SpatialField& f) const {
  for (const DatasetEntry& e : entries)
    if (e.f.v.size() == f.v.size() && rel_l2_diff(e.f.v, f.v) <= 1e-12) return &e;
  return nullptr;
}

std::vector<std::vector<int>> fourier_spiral(const GridSpec& g, int n) {
  g.validate();
  if (n < 1) throw invalid_input("fourier_spiral: n must be >= 1");
  if (static_cast<std::int64_t>(n) > g.space_points())
    throw invalid_input("fourier_spiral: more modes requested than the grid carries");
  std::vector<std::vector<int>> all;
  all.reserve(static_cast<std::size_t>(g.space_points()));
  std::vector<int> ix(g.n_dim);
  for (std::int64_t s = 0; s < g.space_points(); ++s) {
    unflatten_space(g, s, ix.data());
    std::vector<int> k(g.n_dim);
    for (int a = 0; a < g.n_dim; ++a) k[a] = GridSpec::signed_index(ix[a], g.n_space);
    all.push_back(std::move(k));
  }
  std::sort(all.begin(), all.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
    long ra = 0, rb = 0;
    for (int c : a) ra += static_cast<long>(c) * c;
    for (int c : b) rb += static_cast<long>(c) * c;
    if (ra != rb) return ra < rb;
    return a < b;
  });
  all.resize(static_cast<std::size_t>(n));
  return all;
}

SpatialField mode_field(const GridSpec& g, const std::vector<int>& k) {
  if (static_cast<int>(k.size()) != g.n_dim) throw invalid_input("mode_field: dimension mismatch");
  for (int c : k)
    if (c < -g.n_space / 2 || c >= g.n_space / 2)
      throw invalid_input("mode_field: frequency index outside the grid range");
  std::vector<std::vector<cplx>> tab(g.n_dim, std::vector<cplx>(g.n_space));
  for (int a = 0; a < g.n_dim; ++a) {
    const double kap = kPi * k[a] / g.half_width;
    for (int i = 0; i < g.n_space; ++i) tab[a][i] = std::polar(1.0, kap * g.x(i));
  }
  SpatialField f(g, Domain::physical);
  std::vector<int> ix(g.n_dim);
  for (std::int64_t s = 0; s < g.space_points(); ++s) {
    unflatten_space(g, s, ix.data());
    cplx v = tab[0][ix[0]];
    for (int a = 1; a < g.n_dim; ++a) v *= tab[a][ix[a]];
    f.v[static_cast<std::size_t>(s)] = v;
  }
  return f;
}

std::string potential_digest(const Potential& V) {
  SpatialField s0 = V.at_time(0.0);
  std::uint32_t c = crc32(s0.v.data(), s0.v.size() * sizeof(cplx));
  if (V.time_dependent()) {
    SpatialField s1 = V.at_time(0.5 * V.grid().horizon);
    c = crc32(s1.v.data(), s1.v.size() * sizeof(cplx), c);
  }
  c = crc32(V.id().data(), V.id().size(), c);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08x", c);
  return buf;
}

Dataset gen_dataset(const Potential& V, const std::string& basis, int n, std::uint64_t seed,
                    double noise_sigma) {
  const GridSpec& g = V.grid();
  if (basis != "fourier" && basis != "gaussian")
    throw invalid_input("gen_dataset: basis must be 'fourier' or 'gaussian'");
  if (n < 1) throw invalid_input("gen_dataset: n must be >= 1");
  if (noise_sigma < 0.0) throw invalid_input("gen_dataset: noise_sigma must be >= 0");

  Dataset d;
  d.grid = g;
  d.basis = basis;
  d.potential_digest = potential_digest(V);
  d.seed = seed;
  d.noise_sigma = noise_sigma;
  d.entries.resize(static_cast<std::size_t>(n));

  if (basis == "fourier") {
    std::vector<std::vector<int>> modes = fourier_spiral(g, n);
    for (int i = 0; i < n; ++i) {
      d.entries[static_cast<std::size_t>(i)].mode = modes[static_cast<std::size_t>(i)];
      d.entries[static_cast<std::size_t>(i)].f = mode_field(g, modes[static_cast<std::size_t>(i)]);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i) | (1ull << 32)));
      std::vector<double> center(g.n_dim);
      std::vector<int> k0(g.n_dim);
      for (int a = 0; a < g.n_dim; ++a) {
        center[a] = rng.uniform(-0.5 * g.half_width, 0.5 * g.half_width);
        k0[a] = rng.uniform_int(-4, 4);
      }
      const double sig = rng.uniform(0.6, 1.2);
      SpatialField f = mode_field(g, k0);
      std::vector<int> ix(g.n_dim);
      for (std::int64_t s = 0; s < g.space_points(); ++s) {
        unflatten_space(g, s, ix.data());
        double q = 0.0;
        for (int a = 0; a < g.n_dim; ++a) {
          const double dxa = g.x(ix[a]) - center[a];
          q += dxa * dxa;
        }
        f.v[static_cast<std::size_t>(s)] *= std::exp(-q / (2.0 * sig * sig));
      }
      const double nrm = l2_norm(f);
      for (cplx& z : f.v) z /= nrm;
      d.entries[static_cast<std::size_t>(i)].f = std::move(f);
    }
  }

  // Forward solves are independent; noise is tied to the entry index, so the
  // result does not depend on how the work is scheduled.
  const unsigned nthreads = std::min(8u, std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::future<void>> work;
  for (unsigned w = 0; w < nthreads; ++w) {
    work.push_back(std::async(std::launch::async, [&, w] {
      for (int i = static_cast<int>(w); i < n; i += static_cast<int>(nthreads)) {
        DatasetEntry& e = d.entries[static_cast<std::size_t>(i)];
        e.uf = initial_to_final(e.f, V);
        if (noise_sigma > 0.0) {
          Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
          for (cplx& z : e.uf.v) z += noise_sigma * rng.cnormal();
        }
      }
    }));
  }
  for (auto& f : work) f.get();
  return d;
}

// ---- containers ---------------------------------------------------------

namespace {

void write_container(const std::string& path, json manifest, const cplx* payload,
                     std::size_t count) {
  manifest["crc32"] = crc32(payload, count * sizeof(cplx));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw invalid_input("save: cannot open " + path);
  out << manifest.dump() << '\n';
  out.write(reinterpret_cast<const char*>(payload), static_cast<std::streamsize>(count * sizeof(cplx)));
  if (!out) throw invalid_input("save: short write to " + path);
}

json read_manifest(std::ifstream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) throw corrupt_file(path + ": missing manifest line");
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw corrupt_file(path + ": unreadable manifest: " + e.what());
  }
}

GridSpec manifest_grid(const json& m, const std::string& path) {
  try {
    return grid_from_json(m.at("grid"));
  } catch (const std::exception& e) {
    throw corrupt_file(path + ": bad grid in manifest: " + e.what());
  }
}

void read_payload(std::ifstream& in, const std::string& path, cplx* dst, std::size_t count,
                  std::uint32_t& crc) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count * sizeof(cplx)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(cplx))
    throw corrupt_file(path + ": truncated payload");
  crc = crc32(dst, count * sizeof(cplx), crc);
}

std::vector<std::int64_t> manifest_shape(const json& m, const std::string& path) {
  try {
    return m.at("shape").get<std::vector<std::int64_t>>();
  } catch (const json::exception& e) {
    throw corrupt_file(path + ": bad shape in manifest: " + e.what());
  }
}

}  // namespace

void save_field(const SpatialField& f, const std::string& path) {
  json m{{"kind", "spatial"},
         {"domain", f.domain == Domain::physical ? "physical" : "frequency"},
         {"grid", grid_to_json(f.grid)}};
  std::vector<std::int64_t> shape(f.grid.n_dim, f.grid.n_space);
  m["shape"] = shape;
  write_container(path, std::move(m), f.v.data(), f.v.size());
}

void save_field(const SpaceTimeField& f, const std::string& path) {
  json m{{"kind", "spacetime"},
         {"domain", f.domain == Domain::physical ? "physical" : "frequency"},
         {"support", f.support == Support::slab ? "slab" : "extended"},
         {"grid", grid_to_json(f.grid)}};
  std::vector<std::int64_t> shape{f.n_times()};
  for (int a = 0; a < f.grid.n_dim; ++a) shape.push_back(f.grid.n_space);
  m["shape"] = shape;
  write_container(path, std::move(m), f.v.data(), f.v.size());
}

SpatialField load_spatial_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input("load: cannot open " + path);
  json m = read_manifest(in, path);
  if (m.value("kind", "") != "spatial") throw corrupt_file(path + ": not a spatial field");
  GridSpec g = manifest_grid(m, path);
  SpatialField f(g, m.value("domain", "physical") == "frequency" ? Domain::frequency
                                                                 : Domain::physical);
  const std::vector<std::int64_t> shape = manifest_shape(m, path);
  if (shape != std::vector<std::int64_t>(g.n_dim, g.n_space))
    throw corrupt_file(path + ": shape disagrees with the grid");
  std::uint32_t crc = 0;
  read_payload(in, path, f.v.data(), f.v.size(), crc);
  if (crc != m.value("crc32", 0u)) throw corrupt_file(path + ": payload digest mismatch");
  return f;
}

SpaceTimeField load_spacetime_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input("load: cannot open " + path);
  json m = read_manifest(in, path);
  if (m.value("kind", "") != "spacetime") throw corrupt_file(path + ": not a space-time field");
  GridSpec g = manifest_grid(m, path);
  SpaceTimeField f(g, m.value("support", "slab") == "extended" ? Support::extended : Support::slab,
                   m.value("domain", "physical") == "frequency" ? Domain::frequency
                                                                : Domain::physical);
  std::vector<std::int64_t> want{f.n_times()};
  for (int a = 0; a < g.n_dim; ++a) want.push_back(g.n_space);
  if (manifest_shape(m, path) != want) throw corrupt_file(path + ": shape disagrees with the grid");
  std::uint32_t crc = 0;
  read_payload(in, path, f.v.data(), f.v.size(), crc);
  if (crc != m.value("crc32", 0u)) throw corrupt_file(path + ": payload digest mismatch");
  return f;
}

void save_dataset(const Dataset& d, const std::string& path) {
  json m{{"kind", "dataset"},
         {"basis", d.basis},
         {"potential_digest", d.potential_digest},
         {"seed", d.seed},
         {"noise_sigma", d.noise_sigma},
         {"n", d.entries.size()},
         {"grid", grid_to_json(d.grid)}};
  json modes = json::array();
  for (const DatasetEntry& e : d.entries) modes.push_back(e.mode);
  m["modes"] = std::move(modes);
  std::uint32_t crc = 0;
  for (const DatasetEntry& e : d.entries) {
    crc = crc32(e.f.v.data(), e.f.v.size() * sizeof(cplx), crc);
    crc = crc32(e.uf.v.data(), e.uf.v.size() * sizeof(cplx), crc);
  }
  m["crc32"] = crc;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw invalid_input("save: cannot open " + path);
  out << m.dump() << '\n';
  for (const DatasetEntry& e : d.entries) {
    out.write(reinterpret_cast<const char*>(e.f.v.data()),
              static_cast<std::streamsize>(e.f.v.size() * sizeof(cplx)));
    out.write(reinterpret_cast<const char*>(e.uf.v.data()),
              static_cast<std::streamsize>(e.uf.v.size() * sizeof(cplx)));
  }
  if (!out) throw invalid_input("save: short write to " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw invalid_input("load: cannot open " + path);
  json m = read_manifest(in, path);
  if (m.value("kind", "") != "dataset") throw corrupt_file(path + ": not a dataset");
  Dataset d;
  d.grid = manifest_grid(m, path);
  try {
    d.basis = m.at("basis").get<std::string>();
    d.potential_digest = m.value("potential_digest", "");
    d.seed = m.at("seed").get<std::uint64_t>();
    d.noise_sigma = m.at("noise_sigma").get<double>();
    const std::size_t n = m.at("n").get<std::size_t>();
    d.entries.resize(n);
    const json& modes = m.at("modes");
    if (modes.size() != n) throw corrupt_file(path + ": mode table size mismatch");
    for (std::size_t i = 0; i < n; ++i)
      d.entries[i].mode = modes.at(i).get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw corrupt_file(path + ": bad manifest: " + e.what());
  }
  std::uint32_t crc = 0;
  for (DatasetEntry& e : d.entries) {
    e.f = SpatialField(d.grid);
    e.uf = SpatialField(d.grid);
    read_payload(in, path, e.f.v.data(), e.f.v.size(), crc);
    read_payload(in, path, e.uf.v.data(), e.uf.v.size(), crc);
  }
  if (crc != m.value("crc32", 0u)) throw corrupt_file(path + ": payload digest mismatch");
  return d;
}

}  // namespace qilab
