// Command-line front end: forward simulation, dataset generation, CGO
// construction, identity verification, multiplier norm benching,
// reconstruction, and uniqueness-gap probing.
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical or data failure
// (iteration divergence, corrupt container, missing sample, ...).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qilab/cgo.hpp"
#include "qilab/config.hpp"
#include "qilab/dataset.hpp"
#include "qilab/errors.hpp"
#include "qilab/inverse.hpp"
#include "qilab/multiplier.hpp"
#include "qilab/propagator.hpp"
#include "qilab/rng.hpp"

using namespace qilab;
using nlohmann::json;

namespace {

std::vector<double> parse_doubles(const std::string& s, const char* who) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw invalid_input(std::string(who) + ": cannot parse '" + tok + "' as a number");
    }
  }
  if (out.empty()) throw invalid_input(std::string(who) + ": empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& s, const char* who) {
  std::vector<int> out;
  for (double v : parse_doubles(s, who)) {
    const int k = static_cast<int>(std::llround(v));
    if (std::abs(v - k) > 1e-9) throw invalid_input(std::string(who) + ": expected integers");
    out.push_back(k);
  }
  return out;
}

RunConfig config_of(const std::string& path) {
  return path.empty() ? RunConfig{} : load_config(path);
}

SpaceTimeField trajectory_field(const Trajectory& tr) {
  SpaceTimeField f(tr.grid, Support::slab, Domain::physical);
  for (int j = 0; j < tr.grid.n_time; ++j)
    std::copy(tr.states[static_cast<std::size_t>(j)].v.begin(),
              tr.states[static_cast<std::size_t>(j)].v.end(), f.time_slice(j));
  return f;
}

// Random smooth unit field: seeded coefficients on the low spatial modes.
SpatialField smooth_probe(const GridSpec& g, std::uint64_t seed) {
  Rng rng(seed);
  SpatialField hat(g, Domain::frequency);
  std::vector<int> ix(g.n_dim);
  for (std::int64_t s = 0; s < g.space_points(); ++s) {
    unflatten_space(g, s, ix.data());
    bool low = true;
    for (int a = 0; a < g.n_dim; ++a)
      if (std::abs(GridSpec::signed_index(ix[a], g.n_space)) > 2) low = false;
    if (low) hat.v[static_cast<std::size_t>(s)] = rng.cnormal();
  }
  SpatialField f = transform_spatial(hat, Direction::inverse);
  const double nrm = l2_norm(f);
  for (cplx& z : f.v) z /= nrm;
  return f;
}

int run(int argc, char** argv) {
  CLI::App app{"space-time scattering laboratory"};
  app.require_subcommand(1);
  argv = app.ensure_utf8(argv);

  std::string config_path, out_path, nu_str, mode_str = "1,0", psi_str, basis = "fourier";
  std::string method = "born", dataset_path, in_path;
  std::uint64_t seed = 0;
  bool seed_set = false, have_out = false;
  double theta = -1.0, tol = -1.0, noise = 0.0;
  int n_entries = 64, trials = 24, probes = 8, iters = 4, sign = 1;
  int xi_max = 8, n_modes = 225, mode_cap = 2;
  bool time_dep = false, time_indep = false;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "JSON run configuration");
    c->add_option("--out", out_path, "output path")->each([&](const std::string&) {
      have_out = true;
    });
    c->add_option("--seed", seed, "override the config seed")->each([&](const std::string&) {
      seed_set = true;
    });
    c->add_option("--theta", theta, "strip-weight exponent in (0,1/2)");
    c->add_option("--tol", tol, "tolerance");
  };

  CLI::App* sim = app.add_subcommand("simulate", "forward solve; writes the trajectory");
  add_common(sim);
  sim->add_option("--mode", mode_str, "integer frequency indices of the initial plane wave");
  sim->add_option("--in", in_path, "initial state container (overrides --mode)");

  CLI::App* gen = app.add_subcommand("gen-data", "generate an initial-to-final dataset");
  add_common(gen);
  gen->add_option("--basis", basis, "fourier | gaussian");
  gen->add_option("--n", n_entries, "number of entries");
  gen->add_option("--noise", noise, "complex noise deviation per grid point");

  CLI::App* cgo = app.add_subcommand("cgo", "construct a CGO solution; writes diagnostics CSV");
  add_common(cgo);
  cgo->add_option("--nu", nu_str, "direction vector, e.g. \"4,0\"")->required();
  cgo->add_option("--sign", sign, "+1 or -1 phase sign");
  cgo->add_option("--psi-mode", psi_str, "transverse profile mode indices (default: 1,0,...)");

  CLI::App* ver = app.add_subcommand("verify-identity", "LHS vs RHS table over probe pairs");
  add_common(ver);
  ver->add_option("--pairs", probes, "number of probe pairs");

  CLI::App* ben = app.add_subcommand("bench-multiplier", "strip-norm bench of the inverse symbol");
  add_common(ben);
  ben->add_option("--nu", nu_str, "direction vector")->required();
  ben->add_option("--trials", trials, "number of random strip inputs");

  CLI::App* rec = app.add_subcommand("reconstruct", "linearized reconstruction of the potential");
  add_common(rec);
  rec->add_option("--dataset", dataset_path, "dataset container (default: config potential)");
  rec->add_option("--method", method, "born | iterative");
  rec->add_option("--iters", iters, "refinement iterations (iterative)");
  rec->add_flag("--time-dependent", time_dep, "recover time dependence");
  rec->add_flag("--time-independent", time_indep, "force the time-independent path (default)");
  rec->add_option("--xi-max", xi_max, "max |spatial frequency index| reconstructed");
  rec->add_option("--modes", n_modes, "probe modes for potential-backed maps");
  rec->add_option("--mode-cap", mode_cap, "time-frequency modes (time-dependent)");

  CLI::App* uni = app.add_subcommand("uniqueness-gap", "operator distance of two final-state maps");
  add_common(uni);
  uni->add_option("--probes", probes, "number of random unit probes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints help or the usage error
    return rc == 0 ? 0 : 1;
  }

  RunConfig cfg = config_of(config_path);
  if (seed_set) cfg.seed = seed;
  if (theta > 0.0) cfg.theta = theta;
  if (tol > 0.0) cfg.tol = tol;
  if (have_out) cfg.out = out_path;
  const GridSpec& g = cfg.grid;
  const Potential V = make_potential(cfg.potential, g);

  if (*sim) {
    SpatialField f0 = in_path.empty() ? mode_field(g, parse_ints(mode_str, "--mode"))
                                      : load_spatial_field(in_path);
    if (!(f0.grid == g)) throw invalid_input("simulate: initial state grid mismatch");
    Trajectory tr = evolve(f0, V);
    save_field(trajectory_field(tr), cfg.out);
    std::printf("simulate: wrote %d states to %s (final-state norm %.12g)\n", g.n_time,
                cfg.out.c_str(), l2_norm(tr.final_state()));
    return 0;
  }

  if (*gen) {
    Dataset d = gen_dataset(V, basis, n_entries, cfg.seed, noise);
    save_dataset(d, cfg.out);
    std::printf("gen-data: wrote %zu entries (basis %s, digest %s) to %s\n", d.entries.size(),
                d.basis.c_str(), d.potential_digest.c_str(), cfg.out.c_str());
    return 0;
  }

  if (*cgo) {
    const std::vector<double> nu = parse_doubles(nu_str, "--nu");
    if (static_cast<int>(nu.size()) != g.n_dim)
      throw invalid_input("--nu: dimension disagrees with the grid");
    CGOPhase phase = make_phase(nu, sign);
    const GridSpec tg = g.transverse();
    std::vector<int> pk(tg.n_dim, 0);
    if (!psi_str.empty()) pk = parse_ints(psi_str, "--psi-mode");
    else if (!pk.empty()) pk[0] = 1;
    SpatialField psi = mode_field(tg, pk);
    SpaceTimeField usharp = amplitude(psi, phase, g);
    CGOSolveOptions opts;
    opts.theta = cfg.theta;
    opts.tol = cfg.tol;
    opts.delta = cfg.delta;
    CGOSolution sol = solve_remainder(V, usharp, phase, opts, psi);

    std::ofstream csv(cfg.out);
    if (!csv) throw invalid_input("cgo: cannot open " + cfg.out);
    csv << "iter,increment_y_norm,residual\n";
    for (std::size_t i = 0; i < sol.increment_history.size(); ++i)
      csv << i + 1 << ',' << sol.increment_history[i] << ','
          << (i < sol.residual_history.size() ? sol.residual_history[i] : 0.0) << '\n';
    std::printf(
        "cgo: converged=%d iterations=%d y_norm_flat=%.6g residual=%.6g (|V u_sharp|=%.6g) -> "
        "%s\n",
        sol.converged ? 1 : 0, sol.iterations, sol.y_norm_flat, sol.residual, sol.source_l2,
        cfg.out.c_str());
    return 0;
  }

  if (*ver) {
    Potential V2 = make_potential(cfg.potential2, g);
    EvolutionMap m1 = EvolutionMap::from_potential(V);
    EvolutionMap m2 = EvolutionMap::from_potential(V2);
    std::ofstream csv(cfg.out);
    if (!csv) throw invalid_input("verify-identity: cannot open " + cfg.out);
    csv << "pair,lhs_re,lhs_im,rhs_re,rhs_im,abs_diff,rel_diff\n";
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
      SpatialField f = smooth_probe(g, derive_seed(cfg.seed, 2 * p));
      SpatialField h = smooth_probe(g, derive_seed(cfg.seed, 2 * p + 1));
      const cplx lhs = identity_lhs(m1, m2, f, h);
      const cplx rhs = identity_rhs(V, V2, f, h);
      const double ad = std::abs(lhs - rhs);
      const double rd = ad / std::max({std::abs(lhs), std::abs(rhs), kEpsFloor});
      worst = std::max(worst, rd);
      csv << p << ',' << lhs.real() << ',' << lhs.imag() << ',' << rhs.real() << ','
          << rhs.imag() << ',' << ad << ',' << rd << '\n';
    }
    const double lim = tol > 0.0 ? tol : 1e-3;
    std::printf("verify-identity: %d pairs, worst relative gap %.3g (limit %.3g) -> %s\n", probes,
                worst, lim, cfg.out.c_str());
    if (worst > lim) {
      std::fprintf(stderr, "verify-identity: gap above limit\n");
      return 2;
    }
    return 0;
  }

  if (*ben) {
    const std::vector<double> nu = parse_doubles(nu_str, "--nu");
    if (static_cast<int>(nu.size()) != g.n_dim)
      throw invalid_input("--nu: dimension disagrees with the grid");
    BenchReport rep = bench_multiplier_norm(g, nu, cfg.theta, trials, cfg.seed, cfg.delta);
    std::ofstream csv(cfg.out);
    if (!csv) throw invalid_input("bench-multiplier: cannot open " + cfg.out);
    csv << "trial,nu_mag,theta,x_norm,y_norm,ratio\n";
    for (const BenchRow& r : rep.rows)
      csv << r.trial << ',' << r.nu_mag << ',' << r.theta << ',' << r.x << ',' << r.y << ','
          << r.ratio << '\n';
    std::printf("bench-multiplier: %d trials, max ratio %.6g, mean ratio %.6g -> %s\n", trials,
                rep.max_ratio, rep.mean_ratio, cfg.out.c_str());
    return 0;
  }

  if (*rec) {
    EvolutionMap map = dataset_path.empty()
                           ? EvolutionMap::from_potential(V)
                           : EvolutionMap::from_dataset(
                                 std::make_shared<Dataset>(load_dataset(dataset_path)));
    BornOptions opt;
    opt.n_modes = n_modes;
    opt.xi_max = xi_max;
    opt.mode_cap = mode_cap;
    opt.time_dependent = time_dep && !time_indep;
    opt.keep_samples = true;
    ReconstructionReport rep;
    if (method == "born")
      rep = reconstruct_born(map, opt);
    else if (method == "iterative")
      rep = reconstruct_iterative(map, Potential::zero(g), iters, opt);
    else
      throw invalid_input("--method must be born or iterative");
    if (dataset_path.empty()) rep.relative_l2_error = potential_rel_l2(rep.estimate, V);

    save_field(rep.estimate.on_slab(), cfg.out + ".field");
    json jr{{"method", rep.method},
            {"samples_used", rep.samples_used},
            {"conditioning", rep.conditioning},
            {"rank_deficient", rep.rank_deficient},
            {"early_stop", rep.early_stop},
            {"misfit_history", rep.misfit_history}};
    if (rep.relative_l2_error >= 0.0) jr["relative_l2_error"] = rep.relative_l2_error;
    std::ofstream jf(cfg.out + ".json");
    jf << jr.dump(2) << '\n';
    std::ofstream csv(cfg.out + "_samples.csv");
    csv << "tau";
    for (int a = 0; a < g.n_dim; ++a) csv << ",xi" << a + 1;
    csv << ",re,im,weight\n";
    for (const FrequencySample& s : rep.samples) {
      csv << s.tau;
      for (double c : s.xi) csv << ',' << c;
      csv << ',' << s.value.real() << ',' << s.value.imag() << ',' << s.weight << '\n';
    }
    std::printf("reconstruct: method=%s samples=%d conditioning=%.3g rank_deficient=%d",
                rep.method.c_str(), rep.samples_used, rep.conditioning, rep.rank_deficient);
    if (rep.relative_l2_error >= 0.0) std::printf(" rel_l2_error=%.6g", rep.relative_l2_error);
    std::printf(" -> %s.{field,json,_samples.csv}\n", cfg.out.c_str());
    return 0;
  }

  if (*uni) {
    Potential V2 = make_potential(cfg.potential2, g);
    const double gap = uniqueness_gap(V, V2, probes, cfg.seed);
    std::printf("uniqueness-gap: %.12g over %d probes\n", gap, probes);
    return 0;
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const invalid_input& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
