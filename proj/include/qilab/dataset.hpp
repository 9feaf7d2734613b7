#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "qilab/potential.hpp"

namespace qilab {

// CRC-32 (IEEE 802.3 polynomial) of a byte range; payload digest of every
// container written by this project.
std::uint32_t crc32(const void* data, std::size_t nbytes, std::uint32_t seed = 0);

// One initial-to-final pair.  mode holds the signed integer frequency indices
// of f = e^{i kappa.x} for the fourier basis; empty for gaussian packets.
struct DatasetEntry {
  std::vector<int> mode;
  SpatialField f;
  SpatialField uf;
};

struct Dataset {
  GridSpec grid;
  std::string basis = "fourier";  // "fourier" | "gaussian"
  std::string potential_digest;   // provenance tag of the hidden potential
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::vector<DatasetEntry> entries;

  const DatasetEntry* find_mode(const std::vector<int>& k) const;  // nullptr if absent
  // Entry whose initial state matches f to relative 1e-12; nullptr if none.
  const DatasetEntry* find_field(const SpatialField& f) const;
};

// First n signed integer frequency vectors ordered by (|k|^2, lexicographic);
// throws when n exceeds the number of distinct modes on the grid.
std::vector<std::vector<int>> fourier_spiral(const GridSpec& g, int n);
// Plane wave e^{i kappa.x} with kappa_a = pi*k_a/L; k validated against the
// grid's frequency range.
SpatialField mode_field(const GridSpec& g, const std::vector<int>& k);

std::string potential_digest(const Potential& V);

// Forward-solves the basis through V.  Entries are generated under
// per-entry derived seeds, so the result is independent of scheduling;
// noise_sigma adds i.i.d. complex Gaussian noise of standard deviation sigma
// per grid point to the final states.
Dataset gen_dataset(const Potential& V, const std::string& basis, int n, std::uint64_t seed,
                    double noise_sigma);

// ---- containers ---------------------------------------------------------
// One UTF-8 JSON manifest line ('\n'-terminated) followed by raw
// little-endian IEEE-754 float64 interleaved (re, im) samples, time axis
// outermost, then x1..xn row-major.  The manifest records shape and payload
// crc32; a load validates both and throws corrupt_file on any mismatch, so
// load-after-save is bit-exact or fails loudly.

void save_field(const SpatialField& f, const std::string& path);
void save_field(const SpaceTimeField& f, const std::string& path);
SpatialField load_spatial_field(const std::string& path);
SpaceTimeField load_spacetime_field(const std::string& path);

void save_dataset(const Dataset& d, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace qilab
