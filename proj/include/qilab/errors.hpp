#pragma once
#include <stdexcept>
#include <string>

namespace qilab {

// Error taxonomy.  The CLI maps invalid_input (bad arguments / malformed
// configuration) to exit code 1 and everything else here (runtime numerical
// failures, bad files, missing data) to exit code 2.

struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Operation requested on an object in the wrong state (e.g. assembling an
// unconverged solution).
struct invalid_state : std::logic_error {
  using std::logic_error::logic_error;
};

// Fixed-point iteration diverged: thrown after the increment norm grows for
// three consecutive sweeps; message carries the observed growth ratios.
struct divergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// On-disk container failed validation (bad manifest, truncation, checksum).
struct corrupt_file : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact symbol zero hit with regularization disabled; message names the
// offending frequency node.
struct singular_symbol : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dataset-backed map asked to act on a state it does not contain.
struct missing_sample : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace qilab
