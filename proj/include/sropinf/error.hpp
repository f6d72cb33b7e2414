#pragma once

#include <stdexcept>
#include <string>

namespace sropinf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live on different grids or have inconsistent sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A full-order state became non-finite.
class BlowUpError : public Error {
 public:
  using Error::Error;
};

/// The denominator of the reconstruction equation vanished: the state left
/// the chart of the slice.
class SliceSingularityError : public Error {
 public:
  using Error::Error;
};

/// The correlation with the template is flat, so no shift maximizes it.
class NoUniqueShiftError : public Error {
 public:
  using Error::Error;
};

/// Requested more POD modes than the snapshot ensemble supports.
class RankError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sropinf
