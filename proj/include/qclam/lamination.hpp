#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "qclam/motion.hpp"

namespace qclam {

/// The lamination by the graphs of a holomorphic motion.
struct Lamination {
  HolomorphicMotion motion;
};

/// Phi(z, w) = (z, alpha) with w = phi_alpha(z), and its inverse. Both are
/// evaluated by leaf-following rather than interpolated.
class StraighteningChart {
public:
  explicit StraighteningChart(const Lamination& lam);

  /// alpha of the leaf through (z, w). DomainError if Newton fails.
  cplx forward(cplx z, cplx w) const { return motion_.leaf_through(z, w); }
  /// w = phi_alpha(z).
  cplx inverse(cplx z, cplx alpha) const { return motion_(alpha, z); }

  /// max |Phi(Phi^{-1}(z, alpha)) - alpha| over the sample pairs.
  double round_trip_error(const std::vector<cplx>& zs, const std::vector<cplx>& alphas) const;

private:
  HolomorphicMotion motion_;
};

/// Throws DomainError for non-global motions.
StraighteningChart straighten(const Lamination& lam);

/// dl = dw - phi'_alpha(z) dz, stored as its (dz, dw) coefficients.
struct DirectedForm {
  cplx dz;
  cplx dw = 1.0;
  /// dl applied to a (1,0) vector (v_z, v_w).
  cplx operator()(cplx vz, cplx vw) const { return dz * vz + dw * vw; }
};

DirectedForm directed_form(const Lamination& lam, cplx z, cplx alpha);

/// Square sample grid [-radius, radius]^2 in the base variable z.
struct ZGrid {
  double radius = 1.0;
  int n = 101;
  double spacing() const { return 2.0 * radius / (n - 1); }
  cplx point(int row, int col) const { return {-radius + col * spacing(), -radius + row * spacing()}; }
};

enum class Smoothness { C1, W1p };

/// Real function on the lamination, tabulated leaf by leaf over a z grid,
/// with its leafwise gradient stored as f_x + i f_y.
class LeafFunction {
public:
  LeafFunction(ZGrid grid, std::vector<cplx> tau, std::vector<Eigen::ArrayXXd> values,
               std::vector<Eigen::ArrayXXcd> gradients, Smoothness tag = Smoothness::C1);

  /// Samples f(z, alpha) on every leaf; gradients by central differences of f.
  static LeafFunction sample(const ZGrid& grid, std::vector<cplx> tau, const std::function<double(cplx, cplx)>& f,
                             Smoothness tag = Smoothness::C1);

  const ZGrid& grid() const noexcept { return grid_; }
  const std::vector<cplx>& tau() const noexcept { return tau_; }
  const Eigen::ArrayXXd& values(std::size_t leaf) const { return values_.at(leaf); }
  const Eigen::ArrayXXcd& gradients(std::size_t leaf) const { return gradients_.at(leaf); }
  Smoothness smoothness() const noexcept { return tag_; }

  /// Cubic interpolation of the values of one leaf at z.
  double value(std::size_t leaf, cplx z) const;

  LeafFunction scaled(double s) const;
  friend LeafFunction operator+(const LeafFunction& a, const LeafFunction& b);

private:
  ZGrid grid_;
  std::vector<cplx> tau_;
  std::vector<Eigen::ArrayXXd> values_;
  std::vector<Eigen::ArrayXXcd> gradients_;
  Smoothness tag_;
};

/// CSV table, one row per (leaf, z node): alpha_re,alpha_im,z_re,z_im,value,grad_x,grad_y.
void write_csv(std::ostream& os, const LeafFunction& f);

/// sup |f| + sup over leaves of || grad_L f ||_{L^p(D(0, 1 - delta))}, both over
/// grid nodes with |z| < 1 - delta; the L^p norm uses the z-plane area.
double w1p_norm(const LeafFunction& f, double p, double delta);

/// f(z, alpha) = chi(alpha_i) on leaf i; zero gradient.
LeafFunction extend_constant_along_leaves(const std::vector<double>& chi, const Lamination& lam, const ZGrid& grid);

/// A function of (z, alpha) defined off the lamination as well.
using AmbientFunction = std::function<double(cplx z, cplx alpha)>;

/// Extension of a leaf function to all alpha: inverse-distance (Shepard,
/// power 2) blend of the leaf values, which reproduces f on tau exactly, then
/// averaged in alpha over a disk of radius `smoothing` with the bump
/// (1 - |b/s|^2)^2 (fixed polar quadrature). Values in z are interpolated.
AmbientFunction c1_extend(const LeafFunction& f, double smoothing);

/// The blend alone, before averaging in alpha.
AmbientFunction blend_extend(const LeafFunction& f);

}  // namespace qclam
