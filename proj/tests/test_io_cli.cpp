// Container format, dataset generation, digests, and configuration parsing.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "qilab/config.hpp"
#include "qilab/dataset.hpp"
#include "qilab/propagator.hpp"
#include "qilab/rng.hpp"

using namespace qilab;

namespace {

GridSpec small_grid(int n_space = 16, int n_time = 17) {
  GridSpec g;
  g.n_space = n_space;
  g.n_time = n_time;
  return g;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

struct TempDir {
  std::string base;
  TempDir() {
    char tmpl[] = "/tmp/qilab_test_XXXXXX";
    base = mkdtemp(tmpl);
  }
  std::string path(const std::string& name) const { return base + "/" + name; }
};

}  // namespace

TEST_CASE("crc32 reproduces the standard check value") {
  const char* s = "123456789";
  CHECK(crc32(s, 9) == 0xCBF43926u);
  // Chained updates equal one pass.
  const std::uint32_t part = crc32(s, 4);
  CHECK(crc32(s + 4, 5, part) == 0xCBF43926u);
}

TEST_CASE("derive_seed separates items and stays put") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(9, 7) == derive_seed(9, 7));
}

TEST_CASE("spiral mode order is radial with lexicographic ties") {
  GridSpec g = small_grid();
  std::vector<std::vector<int>> ks = fourier_spiral(g, 9);
  const std::vector<std::vector<int>> expect = {
      {0, 0}, {-1, 0}, {0, -1}, {0, 1}, {1, 0}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  CHECK(ks == expect);
  CHECK_THROWS_AS(fourier_spiral(g, static_cast<int>(g.space_points()) + 1), invalid_input);
}

TEST_CASE("plane-wave probes: unit amplitude, lattice frequency, range checks") {
  GridSpec g = small_grid();
  SpatialField f = mode_field(g, {3, -5});
  CHECK(l2_norm(f) == doctest::Approx(2.0 * g.half_width).epsilon(1e-13));  // (2L)^{n/2}, n=2
  std::vector<int> ix(2);
  for (std::int64_t s = 0; s < g.space_points(); s += 37) {
    unflatten_space(g, s, ix.data());
    const cplx expect = std::polar(1.0, 1.5 * g.x(ix[0]) - 2.5 * g.x(ix[1]));
    CHECK(std::abs(f.v[static_cast<std::size_t>(s)] - expect) < 1e-13);
  }
  CHECK_THROWS_AS(mode_field(g, {8, 0}), invalid_input);   // beyond +N/2-1
  CHECK_THROWS_AS(mode_field(g, {0, -9}), invalid_input);  // beyond -N/2
}

TEST_CASE("field containers round-trip bit exactly") {
  TempDir td;
  GridSpec g = small_grid();
  Rng rng(41);

  SpatialField f(g);
  for (cplx& z : f.v) z = rng.cnormal();
  save_field(f, td.path("spatial.qf"));
  SpatialField f2 = load_spatial_field(td.path("spatial.qf"));
  CHECK(f2.grid == g);
  CHECK(std::memcmp(f.v.data(), f2.v.data(), f.v.size() * sizeof(cplx)) == 0);

  SpaceTimeField u(g, Support::extended);
  for (cplx& z : u.v) z = rng.cnormal();
  save_field(u, td.path("ext.qf"));
  SpaceTimeField u2 = load_spacetime_field(td.path("ext.qf"));
  CHECK(u2.support == Support::extended);
  CHECK(std::memcmp(u.v.data(), u2.v.data(), u.v.size() * sizeof(cplx)) == 0);

  // Round-trip again: identical bytes on disk.
  save_field(f2, td.path("spatial2.qf"));
  CHECK(slurp(td.path("spatial.qf")) == slurp(td.path("spatial2.qf")));
}

TEST_CASE("payload corruption and truncation are detected") {
  TempDir td;
  GridSpec g = small_grid();
  SpatialField f(g);
  Rng rng(17);
  for (cplx& z : f.v) z = rng.cnormal();
  save_field(f, td.path("x.qf"));

  std::vector<char> bytes = slurp(td.path("x.qf"));
  std::vector<char> flipped = bytes;
  flipped[flipped.size() - 3] ^= 0x40;
  spit(td.path("bad.qf"), flipped);
  CHECK_THROWS_AS(load_spatial_field(td.path("bad.qf")), corrupt_file);

  std::vector<char> cut(bytes.begin(), bytes.end() - 16);
  spit(td.path("cut.qf"), cut);
  CHECK_THROWS_AS(load_spatial_field(td.path("cut.qf")), corrupt_file);

  // The space-time loader refuses a spatial container.
  CHECK_THROWS_AS(load_spacetime_field(td.path("x.qf")), corrupt_file);
  CHECK_THROWS_AS(load_spatial_field(td.path("missing.qf")), invalid_input);
}

TEST_CASE("dataset generation is deterministic and serializes losslessly") {
  TempDir td;
  GridSpec g = small_grid(16, 9);
  Potential V = make_gaussian(g, 0.3, {0.0, 0.0}, 1.0);

  Dataset d1 = gen_dataset(V, "fourier", 7, 2024, 0.0);
  Dataset d2 = gen_dataset(V, "fourier", 7, 2024, 0.0);
  REQUIRE(d1.entries.size() == 7);
  for (std::size_t i = 0; i < d1.entries.size(); ++i) {
    CHECK(d1.entries[i].mode == d2.entries[i].mode);
    CHECK(std::memcmp(d1.entries[i].uf.v.data(), d2.entries[i].uf.v.data(),
                      d1.entries[i].uf.v.size() * sizeof(cplx)) == 0);
  }

  save_dataset(d1, td.path("d.qd"));
  Dataset d3 = load_dataset(td.path("d.qd"));
  CHECK(d3.basis == "fourier");
  CHECK(d3.seed == 2024);
  CHECK(d3.grid == g);
  CHECK(d3.potential_digest == d1.potential_digest);
  for (std::size_t i = 0; i < d1.entries.size(); ++i) {
    CHECK(d3.entries[i].mode == d1.entries[i].mode);
    CHECK(std::memcmp(d3.entries[i].f.v.data(), d1.entries[i].f.v.data(),
                      d1.entries[i].f.v.size() * sizeof(cplx)) == 0);
    CHECK(std::memcmp(d3.entries[i].uf.v.data(), d1.entries[i].uf.v.data(),
                      d1.entries[i].uf.v.size() * sizeof(cplx)) == 0);
  }

  // Re-saving the loaded object reproduces the file byte for byte.
  save_dataset(d3, td.path("d2.qd"));
  CHECK(slurp(td.path("d.qd")) == slurp(td.path("d2.qd")));

  // Corruption in any entry payload is caught.
  std::vector<char> bytes = slurp(td.path("d.qd"));
  bytes[bytes.size() - 11] ^= 0x01;
  spit(td.path("dbad.qd"), bytes);
  CHECK_THROWS_AS(load_dataset(td.path("dbad.qd")), corrupt_file);
}

TEST_CASE("gaussian-basis entries and noise statistics") {
  GridSpec g = small_grid(16, 9);
  Potential V = Potential::zero(g);
  const double sigma = 0.05;
  Dataset clean = gen_dataset(V, "gaussian", 6, 31, 0.0);
  Dataset noisy = gen_dataset(V, "gaussian", 6, 31, sigma);
  REQUIRE(clean.entries.size() == noisy.entries.size());
  CHECK(clean.entries[0].mode.empty());
  // Same seed => identical probe states; the noise only touches uf.
  CHECK(std::memcmp(clean.entries[2].f.v.data(), noisy.entries[2].f.v.data(),
                    clean.entries[2].f.v.size() * sizeof(cplx)) == 0);
  CHECK(l2_norm(clean.entries[0].f) == doctest::Approx(1.0).epsilon(1e-12));

  double acc = 0.0;
  std::int64_t cnt = 0;
  for (std::size_t i = 0; i < clean.entries.size(); ++i) {
    const auto& a = clean.entries[i].uf.v;
    const auto& b = noisy.entries[i].uf.v;
    for (std::size_t s = 0; s < a.size(); ++s) {
      acc += std::norm(b[s] - a[s]);
      ++cnt;
    }
  }
  const double emp = acc / static_cast<double>(cnt);
  CHECK(emp == doctest::Approx(sigma * sigma).epsilon(0.2));
}

TEST_CASE("potential digests separate potentials and track time dependence") {
  GridSpec g = small_grid();
  Potential a = make_gaussian(g, 0.5, {0.0, 0.0}, 1.0);
  Potential b = make_gaussian(g, 0.5, {1.0, 0.0}, 1.0);
  Potential c = make_modulated_gaussian(g, 0.5, 1.0, 0.5, {0.0, 0.0}, 1.0);
  CHECK(potential_digest(a) == potential_digest(a));
  CHECK(potential_digest(a) != potential_digest(b));
  CHECK(potential_digest(a) != potential_digest(c));
  CHECK(potential_digest(a).size() == 8);
}

TEST_CASE("configuration parsing, defaults, and rejection") {
  nlohmann::json j = {{"seed", 99},
                      {"theta", 0.3},
                      {"grid", {{"n_dim", 2},
                                {"half_width", 6.283185307179586},
                                {"n_space", 16},
                                {"horizon", 1.0},
                                {"n_time", 17}}},
                      {"potential", {{"kind", "gaussian"}, {"amplitude", 0.4}, {"sigma", 1.0}}}};
  RunConfig c = parse_config(j);
  CHECK(c.seed == 99);
  CHECK(c.theta == doctest::Approx(0.3));
  CHECK(c.tol == doctest::Approx(1e-8));  // default
  CHECK(c.grid.n_space == 16);
  Potential V = make_potential(c.potential, c.grid);
  CHECK(V.sup_norm() == doctest::Approx(0.4).epsilon(1e-6));

  j["theta"] = 0.5;
  CHECK_THROWS_AS(parse_config(j), invalid_input);
  j["theta"] = 0.3;
  j["delta"] = 0.5;
  CHECK_THROWS_AS(parse_config(j), invalid_input);

  CHECK_THROWS_AS(make_potential(nlohmann::json{{"kind", "perlin"}}, c.grid), invalid_input);

  // Grid round trip through its JSON form.
  GridSpec g2 = grid_from_json(grid_to_json(c.grid));
  CHECK(g2 == c.grid);
}

TEST_CASE("file-backed potentials load from a slab container") {
  TempDir td;
  GridSpec g = small_grid();
  Potential src = make_modulated_gaussian(g, 0.2, 1.0, 1.0, {0.0, 0.0}, 0.8);
  save_field(src.on_slab(), td.path("pot.qf"));
  Potential back = make_potential(nlohmann::json{{"kind", "file"}, {"path", td.path("pot.qf")}}, g);
  CHECK(back.time_dependent());
  std::vector<cplx> a, b;
  src.eval_into(0.5, a);
  back.eval_into(0.5, b);
  CHECK(rel_l2_diff(a, b) < 1e-12);
}
