#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace omit {

/// The S21 denominator 1 +/- g0^2 n chi_c chi_m fell below the guard, or the
/// pumped mode has no damped steady state.
/// Under blue pumping this marks operation at or past the parametric
/// instability.
class SingularDenominator : public std::runtime_error {
 public:
  SingularDenominator(double probe_offset, double delta, double magnitude);

  double probe_offset() const { return probe_offset_; }
  double delta() const { return delta_; }
  double magnitude() const { return magnitude_; }

 private:
  double probe_offset_;
  double delta_;
  double magnitude_;
};

class FeatureNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnderResolved : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration, binding or parameter set.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed dataset file. line() is 1-based; 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace omit
