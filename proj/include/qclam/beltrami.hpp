#pragma once

#include "qclam/grid.hpp"
#include "qclam/transforms.hpp"

namespace qclam {

/// Complex dilatation mu on the grid with a declared bound sup|mu| <= kappa < 1
/// and a declared support disk D(0, support_radius).
class BeltramiField {
public:
  BeltramiField(ComplexField mu, double kappa_bound, double support_radius = 1.0);

  static BeltramiField zero(const GridSpec& spec);

  /// mu(w) = k w / wbar on |w| < 1 with k = (K-1)/(K+1); the principal
  /// solution is w |w|^{K-1} inside the disk and w outside.
  static BeltramiField radial_stretch(const GridSpec& spec, double K);

  const ComplexField& mu() const noexcept { return mu_; }
  const GridSpec& spec() const noexcept { return mu_.spec(); }
  double kappa_bound() const noexcept { return kappa_bound_; }
  double support_radius() const noexcept { return support_radius_; }

private:
  ComplexField mu_;
  double kappa_bound_;
  double support_radius_;
};

/// Principal solution h(w) = w + C(phi) of dh/dwbar = mu dh/dw.
struct QCMap {
  ComplexField h;
  ComplexField phi;  ///< dh/dwbar
  BeltramiField mu_source;
  int iterations = 0;
  double residual = 0.0;  ///< || phi - mu (1 + B phi) ||_{L2}
};

/// Compactly supported polynomial bump (1 - |w/eps|^2)^2, unit mass on the grid.
struct MollifierSpec {
  double epsilon = 0.1;

  /// Kernel sampled with its center at node (0, 0) and periodic wrap, scaled
  /// so that sum(kernel) * h^2 == 1.
  Eigen::ArrayXXd kernel(const GridSpec& spec) const;
};

/// Maximum number of fixed-point sweeps allowed for a given tolerance.
int max_iterations(double kappa_bound, double tol);

/// Solves phi = mu (1 + B phi) by fixed-point iteration until successive
/// iterates differ by at most tol in L2. Throws NumericalError on failure.
QCMap principal_solution(const BeltramiField& mu, double tol = 1e-10);

/// Convolution in w with the bump; support grows by eps, sup|mu| does not grow.
BeltramiField mollify(const BeltramiField& mu, const MollifierSpec& spec);

/// |dh/dwbar / dh/dw| by central differences at the node nearest to w.
double dilatation_at(const QCMap& map, cplx w);

/// Integrability exponent convention p(kappa) = 1 + 1/kappa.
double p_max(double kappa);

}  // namespace qclam
