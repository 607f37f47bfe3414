#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qclam/beltrami.hpp"
#include "qclam/lamination.hpp"

namespace qclam {

/// phi_alpha(r z): the motion restricted to D(0, r) and rescaled to the unit
/// disk. Holonomies between fibers of the unit disk then have dilatation at
/// most kappa = 2r / (1 + r^2).
struct LocalizedMotion {
  HolomorphicMotion motion;
  double r;
  double kappa;
};

LocalizedMotion localize(const HolomorphicMotion& m, double r);
double localization_kappa(double r);

struct PipelineConfig {
  GridSpec grid{2.0, 256};
  double tol = 1e-10;
  /// Dilatation bound of the lamination; the measured sup over the unit disk if empty.
  std::optional<double> kappa;
  /// Number of fibers on the sampling circle; 0 picks it from the aliasing bound.
  int fibers = 0;
  double alias_target = 1e-10;
};

/// The lamination L_eps whose holonomy h_eps^{0,z} is the principal solution
/// for mu^z * theta_eps.
///
/// mu^z and hence h_eps^{0,z}(a) are holomorphic in z, so fibers are solved
/// only on a circle |z| = R > 1 and the Taylor coefficients in z are recovered
/// by a discrete Fourier transform; leaves and chart are then evaluated for
/// |z| <= 1 by summing the series.
class MollifiedLamination {
public:
  double epsilon() const noexcept { return epsilon_; }
  double kappa() const noexcept { return kappa_; }
  const HolomorphicMotion& motion() const noexcept { return motion_; }
  const GridSpec& grid() const noexcept { return grid_; }

  /// Leaf L_eps(alpha) at z: h_eps^{0,z}(alpha). DomainError for |z| > 1.
  cplx leaf(cplx alpha, cplx z) const;
  /// d/dz of the leaf (exact derivative of the series).
  cplx leaf_derivative(cplx alpha, cplx z) const;
  /// Chart Phi_eps: the alpha with leaf(alpha, z) = w. DomainError if Newton fails.
  cplx chart(cplx z, cplx w) const;

  /// Fibers solved on the sampling circle (0 when mu vanishes identically).
  int fibers() const noexcept { return fibers_; }
  double circle_radius() const noexcept { return radius_; }
  /// sup |mu^z| and sup |mu_eps^z| over fibers on |z| = 1 (the sup over the
  /// disk, by the maximum principle).
  double sup_mu() const noexcept { return sup_mu_; }
  double sup_mu_eps() const noexcept { return sup_mu_eps_; }
  /// Largest per-fiber excess sup|mu_eps| - sup|mu| (convolution bound; <= 0 up to rounding).
  double mollification_excess() const noexcept { return moll_excess_; }
  int max_iterations() const noexcept { return max_iterations_; }
  double max_residual() const noexcept { return max_residual_; }
  /// Size of the top half of the Taylor series on |z| <= 1 (aliasing proxy).
  double series_tail() const noexcept { return tail_; }

  friend MollifiedLamination mollified_lamination(const Lamination& lam, double epsilon, const PipelineConfig& cfg);

private:
  MollifiedLamination(HolomorphicMotion m, GridSpec g) : motion_(std::move(m)), grid_(g) {}
  cplx displacement(cplx alpha, cplx z, cplx* dz) const;

  HolomorphicMotion motion_;
  GridSpec grid_;
  double epsilon_ = 0, kappa_ = 0, radius_ = 1;
  double sup_mu_ = 0, sup_mu_eps_ = 0, moll_excess_ = 0, max_residual_ = 0, tail_ = 0;
  int max_iterations_ = 0, fibers_ = 0, terms_ = 1;
  // Taylor coefficients in z of the displacement h - a, node-major: coef_[node * terms_ + k]
  std::vector<cplx> coef_;
};

/// Throws ValidationError for non-global motions, epsilon outside (0, L - 1),
/// or a sampling circle too close to the unit circle (localize first);
/// NumericalError if a fiber solve fails.
MollifiedLamination mollified_lamination(const Lamination& lam, double epsilon, const PipelineConfig& cfg = {});

/// sup over alphas and z samples of |L_eps(alpha)(z) - L_alpha(z)|.
double leaf_deviation(const MollifiedLamination& moll, const std::vector<cplx>& alphas,
                      const std::vector<cplx>& z_samples = default_z_samples());

/// f_eps(z, w) = F(z, alpha_eps(z, w)) for F = f o Phi^{-1} in straightened coordinates.
AmbientFunction approximate(const AmbientFunction& f_straight, const MollifiedLamination& moll);
/// Leaf function version: F is c1_extend(f, smoothing).
AmbientFunction approximate(const LeafFunction& f, const MollifiedLamination& moll, double smoothing);

struct ApproximationError {
  double sup_error = 0;                 ///< sup |f - f_eps| over the leaves, |z| < 1 - delta
  double w1p_error = 0;                 ///< W^{1,p} norm of f - f_eps
  std::vector<double> w1p_error_per_leaf;
  double p = 0, p_max = 0;
  bool in_regime = true;                ///< p < p_max(kappa)
  LeafFunction difference;              ///< f - f_eps on the leaves of L
};

/// f - f_eps along the leaves tau of L, with leafwise gradients by central
/// differences in z (step 1e-6). p >= p_max(kappa) is tagged, not rejected.
ApproximationError w1p_error(const AmbientFunction& f_straight, const MollifiedLamination& moll, double p,
                             double delta, const ZGrid& grid = ZGrid{1.0, 91});

/// pi_eps(z) = alpha_eps(z, phi_beta(z)) - beta along the leaf L_beta (which the
/// holomorphic change w -> w - phi_beta(z) straightens to w = 0).
struct ProjectionTrace {
  cplx beta;
  ZGrid grid;
  Eigen::ArrayXXcd pi{}, d_pi{}, dbar_pi{}, nu{};
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> inside{}, flagged{};
  double radius = 0.9;       ///< samples with |z| < radius
  double nu_sup = 0;         ///< over non-flagged samples
  std::size_t samples = 0, flagged_count = 0;

  /// Fraction of non-flagged samples with |nu| <= bound.
  double fraction_within(double bound) const;
  /// || grad pi ||_{L^p(D(0, radius))}, |grad pi|^2 = |pi_x|^2 + |pi_y|^2.
  double gradient_lp(double p) const;
};

/// Samples with |d pi / dz| < 1e-9 are flagged and excluded from nu statistics.
ProjectionTrace projection_trace(const MollifiedLamination& moll, cplx beta, const ZGrid& grid = ZGrid{1.0, 91},
                                 double radius = 0.9);

/// A vertical line z = z0 (parametrized by w) or a holomorphic graph w = g(z)
/// (parametrized by z).
struct Transversal {
  enum class Kind { Vertical, Graph };
  Kind kind = Kind::Vertical;
  cplx z0{};
  std::function<cplx(cplx)> g, dg;
  std::string label;

  static Transversal vertical(cplx z0);
  static Transversal graph(std::function<cplx(cplx)> g, std::function<cplx(cplx)> dg, std::string label);
};

struct DilatationReport {
  double sup = 0;
  cplx worst_alpha{};
  std::size_t samples = 0;
};

/// Holonomy of L_eps from d1 to d2 along the leaves through `alphas`, with its
/// dilatation |dbar T / d T| by central differences (step 1e-6) in the
/// parameter of d1. DegeneratePointError if a leaf is tangent to a graph
/// transversal; DomainError if a leaf misses it inside the unit disk.
DilatationReport transversal_dilatation(const MollifiedLamination& moll, const Transversal& d1, const Transversal& d2,
                                        const std::vector<cplx>& alphas);
/// Leaf labels on a grid of spacing 0.15 in |alpha| <= 0.6 (49 points).
std::vector<cplx> default_transversal_alphas();

}  // namespace qclam
