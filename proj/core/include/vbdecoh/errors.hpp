#pragma once

#include <stdexcept>
#include <string>

namespace vbdecoh {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad parameters, out-of-range indices, schema violations.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Hilbert space of a cluster (or the full system) exceeds the configured cap.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Irreducible contribution requested before all of its sub-clusters were evaluated.
class DependencyError : public Error {
 public:
  using Error::Error;
};

/// Hyperfine dataset problems: coverage gaps, unparsable rows, off-lattice entries.
class DatasetError : public Error {
 public:
  using Error::Error;
};

/// Requested an effective coupling too close to the ground-state level anticrossing.
class GslacVicinityError : public Error {
 public:
  using Error::Error;
};

/// Time grid cannot resolve the requested spectral range.
class NyquistError : public Error {
 public:
  using Error::Error;
};

}  // namespace vbdecoh
