#pragma once

#include <limits>
#include <vector>

#include "qclam/grid.hpp"

namespace qclam {

/// 2D discrete Fourier transform on an N x N array (inverse is normalized).
Eigen::ArrayXXcd fft2(const Eigen::ArrayXXcd& a);
Eigen::ArrayXXcd ifft2(const Eigen::ArrayXXcd& a);

/// Eisenstein series G_{2k} of the square lattice with periods 2L and 2iL,
/// for k = 0..kmax (entries with k < 2 are zero). Only G_{4m} is nonzero.
std::vector<double> square_lattice_eisenstein(double half_width, int kmax);

/// Free-space Cauchy and Beurling transforms of fields supported in a disk
/// D(0, support_radius) inside the periodic cell.
///
/// The periodic part is the Fourier multiplier -2i/xi (Cauchy) or
/// conj(xi)/xi (Beurling) with the zero frequency set to 0. The periodic
/// images and the mean removed by that convention are restored exactly
/// through the Weierstrass zeta expansion of the lattice, written as a
/// polynomial in w whose coefficients are holomorphic moments of f. Outside
/// the inner radius the transforms are evaluated by their multipole series,
/// which is exact off the support.
class FreeSpaceTransforms {
public:
  explicit FreeSpaceTransforms(GridSpec spec);

  const GridSpec& spec() const noexcept { return spec_; }

  struct Result {
    Eigen::ArrayXXcd cauchy;
    Eigen::ArrayXXcd beurling;
  };

  /// Both transforms from one forward FFT. Nodes with |w| > eval_radius are
  /// left at zero.
  Result apply(const Eigen::ArrayXXcd& f, double support_radius,
               double eval_radius = std::numeric_limits<double>::infinity()) const;

  /// Beurling transform only, on nodes with |w| <= eval_radius.
  Eigen::ArrayXXcd beurling(const Eigen::ArrayXXcd& f, double support_radius,
                            double eval_radius = std::numeric_limits<double>::infinity()) const;

  /// Throws ValidationError unless |f| <= 1e-12 outside support_radius + 2h
  /// and the disk fits the cell.
  void check_support(const Eigen::ArrayXXcd& f, double support_radius) const;

private:
  Eigen::ArrayXXcd apply_periodic(const Eigen::ArrayXXcd& fhat, const Eigen::ArrayXXcd& multiplier) const;

  void add_corrections(const Eigen::ArrayXXcd& f, double support_radius, double eval_radius,
                       Eigen::ArrayXXcd* cauchy, Eigen::ArrayXXcd* beurling) const;

  GridSpec spec_;
  Eigen::ArrayXXcd w_;
  Eigen::ArrayXXcd cauchy_multiplier_;
  Eigen::ArrayXXcd beurling_multiplier_;
  std::vector<double> eisenstein_;
};

ComplexField cauchy_transform(const ComplexField& f, double support_radius = 1.0);
ComplexField beurling_transform(const ComplexField& f, double support_radius = 1.0);

/// The bare periodic Beurling multiplier conj(xi)/xi, zero at xi = 0.
/// It is unitary on fields of zero mean.
ComplexField periodic_beurling(const ComplexField& f);

}  // namespace qclam
