#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>

#include "qclam/errors.hpp"

namespace qclam {

using cplx = std::complex<double>;
using Eigen::Index;

/// Uniform periodic N x N grid on the square [-L, L]^2.
///
/// Node (row, col) sits at w = (-L + col*h) + i(-L + row*h), so rows run
/// along the imaginary axis and w = 0 is node (N/2, N/2).
class GridSpec {
public:
  GridSpec(double half_width, Index resolution);

  double half_width() const noexcept { return half_width_; }
  Index resolution() const noexcept { return resolution_; }
  double spacing() const noexcept { return 2.0 * half_width_ / static_cast<double>(resolution_); }
  double cell_area() const noexcept { return spacing() * spacing(); }

  cplx node(Index row, Index col) const noexcept {
    const double h = spacing();
    return {-half_width_ + static_cast<double>(col) * h, -half_width_ + static_cast<double>(row) * h};
  }

  /// Fractional (row, col) position of a point in grid units.
  std::pair<double, double> locate(cplx w) const noexcept {
    const double h = spacing();
    return {(w.imag() + half_width_) / h, (w.real() + half_width_) / h};
  }

  bool operator==(const GridSpec&) const = default;

private:
  double half_width_;
  Index resolution_;
};

/// Immutable scalar field sampled on a GridSpec.
template <typename Scalar>
class GridField {
public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  GridField(GridSpec spec, Array values) : spec_(spec), values_(std::move(values)) {
    if (values_.rows() != spec_.resolution() || values_.cols() != spec_.resolution())
      throw ValidationError("field shape does not match grid resolution");
    if (!values_.allFinite()) throw ValidationError("field contains non-finite values");
  }

  static GridField zeros(const GridSpec& spec) {
    return GridField(spec, Array::Zero(spec.resolution(), spec.resolution()));
  }

  template <typename Fn>
  static GridField sample(const GridSpec& spec, Fn&& fn) {
    const Index n = spec.resolution();
    Array a(n, n);
    for (Index c = 0; c < n; ++c)
      for (Index r = 0; r < n; ++r) a(r, c) = static_cast<Scalar>(fn(spec.node(r, c)));
    return GridField(spec, std::move(a));
  }

  const GridSpec& spec() const noexcept { return spec_; }
  const Array& values() const noexcept { return values_; }
  Scalar operator()(Index row, Index col) const { return values_(row, col); }

private:
  GridSpec spec_;
  Array values_;
};

using ComplexField = GridField<cplx>;
using RealField = GridField<double>;

/// Disk D(center, radius) used to restrict quadratures.
struct Disk {
  cplx center{0.0, 0.0};
  double radius = 1.0;
  bool contains(cplx w) const noexcept { return std::abs(w - center) < radius; }
};

/// Coordinates w of every node.
Eigen::ArrayXXcd node_coordinates(const GridSpec& spec);

/// Midpoint-rule approximation of (integral over region of |f|^p dA)^(1/p).
double lp_norm(const ComplexField& f, double p, const Disk& region);

/// L2 norm over the whole periodic cell.
double l2_norm(const ComplexField& f);
double l2_norm(const GridSpec& spec, const Eigen::ArrayXXcd& values);

double sup_norm(const ComplexField& f);

/// Largest |w| among nodes where |f| exceeds the threshold (0 for a null field).
double support_radius(const ComplexField& f, double threshold = 1e-12);

/// Second-order central differences of the Wirtinger derivatives, periodic wrap.
ComplexField central_d_dw(const ComplexField& f);
ComplexField central_d_dwbar(const ComplexField& f);

/// Cubic-convolution interpolation (Keys, a = -1/2) with periodic indexing.
cplx interpolate(const ComplexField& f, cplx w);

/// Deterministic pairwise summation.
double pairwise_sum(std::span<const double> xs);
cplx pairwise_sum(std::span<const cplx> xs);

/// CSV form: one grid row per line, each node written as "re,im".
void write_csv(std::ostream& os, const ComplexField& f);
/// Throws ValidationError naming the offending 1-based line.
ComplexField read_csv(std::istream& is, const GridSpec& spec);

}  // namespace qclam
