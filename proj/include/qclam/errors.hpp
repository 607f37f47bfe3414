#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace qclam {

/// Input violates a documented precondition.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method failed to reach its target.
class NumericalError : public std::runtime_error {
public:
  NumericalError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

private:
  double last_residual_;
};

/// A point lies outside the region where an object is defined
/// (e.g. a fiber point on no leaf of a non-global motion).
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// A derivative vanished where a quotient by it was required.
class DegeneratePointError : public std::runtime_error {
public:
  DegeneratePointError(const std::string& what, std::complex<double> where)
      : std::runtime_error(what), where_(where) {}
  std::complex<double> where() const noexcept { return where_; }

private:
  std::complex<double> where_;
};

}  // namespace qclam
