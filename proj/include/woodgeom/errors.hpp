#pragma once

#include <stdexcept>
#include <string>

namespace woodgeom {

/// Input lies outside the valid domain of a mapping (e.g. an incident angle
/// beyond the lens' maximum angle, or a fit range the model cannot represent).
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, double limit)
      : std::domain_error(what), limit_(limit) {}

  /// The domain boundary that was violated (radians for angles).
  double limit() const noexcept { return limit_; }

 private:
  double limit_;
};

/// A pixel or radius that does not correspond to any ray of the lens.
class OutOfImageError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A metric whose value is mathematically undefined for the given inputs
/// (no common valid pixels, no ground truth, ...).
class UndefinedResultError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file or rejected calibration.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace woodgeom
