#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qclam/errors.hpp"

namespace qclam {

/// Syntax error, unknown identifier or bad exponent, with a 0-based offset
/// into the source text.
class ParseError : public ValidationError {
public:
  ParseError(const std::string& what, std::size_t offset)
      : ValidationError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// Division by zero (or a zero base raised to a negative power) during eval.
class EvaluationError : public std::runtime_error {
public:
  EvaluationError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// Immutable expression tree in two complex variables alpha and z.
///
///   expr  := term (('+' | '-') term)*
///   term  := unary (('*' | '/') unary)*
///   unary := '-' unary | power
///   power := atom ('^' ['+' | '-'] digits)*
///   atom  := number | '(' number ',' number ')' | '(' expr ')'
///          | alpha | z | conj '(' expr ')' | exp '(' expr ')'
class Expr {
public:
  enum class Kind { Literal, Alpha, Z, Neg, Conj, Exp, Add, Sub, Mul, Div, Pow };

  struct Node {
    Kind kind;
    std::size_t offset;  ///< where the node starts (operators: the operator symbol)
    std::complex<double> value{};  ///< Literal
    long exponent = 0;             ///< Pow
    std::shared_ptr<const Node> lhs, rhs;
  };

  explicit Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {}

  const Node& root() const noexcept { return *root_; }

  /// Offsets of nodes that can divide by zero (quotients, negative powers).
  std::vector<std::size_t> singular_offsets() const;

  /// Structural equality, ignoring source offsets.
  friend bool operator==(const Expr& a, const Expr& b);

private:
  std::shared_ptr<const Node> root_;
};

Expr parse(std::string_view src);

/// Fully parenthesized text that parses back to an identical tree.
std::string print(const Expr& e);

std::complex<double> eval(const Expr& e, std::complex<double> alpha, std::complex<double> z);

using LeafFn = std::function<std::complex<double>(std::complex<double> alpha, std::complex<double> z)>;

struct HolomorphyReport {
  bool passes = true;
  double max_dzbar = 0.0;
  std::complex<double> worst_alpha{}, worst_z{};
};

/// Central-difference estimate of d/dzbar at every (alpha, z) sample pair,
/// step 1e-5; passes iff the largest magnitude is at most 1e-6.
HolomorphyReport check_leaf_holomorphy(const LeafFn& phi, std::span<const std::complex<double>> alphas,
                                       std::span<const std::complex<double>> zs);
HolomorphyReport check_leaf_holomorphy(const Expr& e, std::span<const std::complex<double>> alphas,
                                       std::span<const std::complex<double>> zs);

}  // namespace qclam
