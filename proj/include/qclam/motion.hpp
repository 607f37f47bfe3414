#pragma once

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qclam/beltrami.hpp"
#include "qclam/expr.hpp"
#include "qclam/grid.hpp"

namespace qclam {

/// A family of disjoint holomorphic graphs w = phi_alpha(z) over the unit
/// disk in z, for alpha in a finite transversal set tau.
///
/// Construction only checks the schema; the motion invariants (disjointness,
/// holomorphy, boundedness) are measured by check_motion and friends so that
/// failing inputs can still be reported on.
class HolomorphicMotion {
public:
  HolomorphicMotion(std::string description, LeafFn phi, std::vector<cplx> tau, double epsilon_bound, bool global,
                    double base_radius = 1.0);

  static HolomorphicMotion from_formula(std::string_view formula, std::vector<cplx> tau, double epsilon_bound,
                                        bool global);

  /// Leaves given by (z, w) samples, one list per tau point. Each leaf is
  /// replaced by its least-squares polynomial fit in z (degree <= 12), which is
  /// holomorphic by construction; the fit residual is what check_motion
  /// reports for holomorphy. Tabulated motions are never global.
  static HolomorphicMotion from_leaves(const std::vector<std::vector<std::pair<cplx, cplx>>>& leaves,
                                       std::vector<cplx> tau, double epsilon_bound);

  /// "horizontal" (alpha), "affine" (alpha (1 + z/2)), "shear" (alpha + z conj(alpha)).
  static HolomorphicMotion builtin(std::string_view name, std::vector<cplx> tau, double epsilon_bound = 0.1);
  static std::vector<std::string> builtin_names();
  /// Four points with |alpha| <= 0.3, admissible for every built-in family.
  static std::vector<cplx> default_tau();

  /// phi_alpha(z). Non-global motions are defined only for alpha in tau.
  cplx operator()(cplx alpha, cplx z) const;

  /// d/dz phi_alpha(z) by a fourth-order holomorphic stencil (exact
  /// derivative for tabulated leaves).
  cplx leaf_derivative(cplx alpha, cplx z) const;

  /// Fiber inverse: the alpha with phi_alpha(z) = w (global motions only
  /// beyond tau). Damped Newton; DomainError if w is on no leaf.
  cplx leaf_through(cplx z, cplx w) const;

  const std::string& description() const noexcept { return description_; }
  const std::vector<cplx>& tau() const noexcept { return tau_; }
  double epsilon_bound() const noexcept { return epsilon_bound_; }
  bool global() const noexcept { return global_; }
  /// The leaves are holomorphic for |z| < base_radius (1, or 1/r after localization).
  double base_radius() const noexcept { return base_radius_; }
  /// Largest least-squares residual of tabulated leaves (0 for formulas).
  double fit_residual() const noexcept { return fit_residual_; }
  bool tabulated() const noexcept { return tabulated_; }
  /// phi_alpha(0) == alpha was verified on samples, so h_{0,z}(alpha) = phi_alpha(z).
  bool normalized() const noexcept { return normalized_; }

  const LeafFn& leaf_fn() const noexcept { return phi_; }

private:
  std::string description_;
  LeafFn phi_;
  std::vector<cplx> tau_;
  double epsilon_bound_;
  bool global_;
  double base_radius_;
  double fit_residual_ = 0.0;
  bool tabulated_ = false;
  bool normalized_ = false;
  std::vector<std::vector<cplx>> coefficients_;  // tabulated leaves only
};

/// Extension making leaves horizontal for |alpha| >= 2 r0 + 1.5 width:
///   phi_ext_alpha(z) = alpha + psi(|alpha|) (phi_alpha(z) - alpha),
/// where t psi(t) = t on [0, r0], has slope in [-1, 1] and vanishes beyond the
/// outer radius. For families alpha + z g(alpha) with g 1-Lipschitz the result
/// is again a holomorphic motion of the plane over the unit disk.
HolomorphicMotion taper(const HolomorphicMotion& m, double r0 = 0.3, double width = 0.1);
double taper_outer_radius(double r0, double width);
/// psi(t) from taper; exposed for tests.
double taper_profile(double t, double r0, double width);

/// Default z samples: rings of radius 0 .. 0.95.
std::vector<cplx> default_z_samples();

struct FiberGrid {
  double radius = 1.0;  ///< square [-radius, radius]^2
  int n = 41;
  cplx point(int row, int col) const;
  double spacing() const { return 2.0 * radius / (n - 1); }
};

/// Correspondence phi_alpha(z) -> phi_alpha(z') between two fibers.
class HolonomyMap {
public:
  HolonomyMap(cplx source, cplx target, std::vector<std::pair<cplx, cplx>> tau_pairs,
              std::optional<FiberGrid> grid, Eigen::ArrayXXcd table);

  cplx source() const noexcept { return source_; }
  cplx target() const noexcept { return target_; }
  const std::vector<std::pair<cplx, cplx>>& tau_pairs() const noexcept { return tau_pairs_; }
  const std::optional<FiberGrid>& grid() const noexcept { return grid_; }
  const Eigen::ArrayXXcd& table() const noexcept { return table_; }

  /// Exact on tau images, cubic interpolation on the fiber grid otherwise.
  /// DomainError off tau for maps without a grid or outside the grid square.
  cplx operator()(cplx w) const;

private:
  cplx source_, target_;
  std::vector<std::pair<cplx, cplx>> tau_pairs_;
  std::optional<FiberGrid> grid_;
  Eigen::ArrayXXcd table_;
};

/// h_{z,z'}. Tabulated on the fiber grid for global motions, tau only otherwise.
HolonomyMap holonomy(const HolomorphicMotion& m, cplx z, cplx zp, std::optional<FiberGrid> grid = FiberGrid{});

/// mu^z(w) of h_{0,z} at one point by central differences (step 1e-6).
cplx holonomy_dilatation(const HolomorphicMotion& m, cplx z, cplx w);

enum class SupportPolicy {
  ClipToDisk,         ///< evaluate on the closed unit disk, zero outside
  RequireDiskSupport  ///< evaluate everywhere, reject if nonzero outside the disk
};

/// mu^z of h_{0,z} on the grid; kappa_bound is the measured sup. Values below
/// 1e-10 (the difference-quotient noise floor) are set to zero.
BeltramiField beltrami_of_holonomy(const HolomorphicMotion& m, cplx z, const GridSpec& spec,
                                   SupportPolicy policy = SupportPolicy::ClipToDisk);

struct HarnackReport {
  double d0 = 0, dz = 0;        ///< |phi_alpha - phi_beta| at 0 and z
  double lower = 0, upper = 0;  ///< the two bounds on dz
  double margin_lower = 0, margin_upper = 0;
  double exponent = 1, exponent_min = 1, exponent_max = 1;
  bool in_regime = true;        ///< both distances < 2, so -log(d/2) > 0
  bool passes = true;
};

HarnackReport check_harnack_hoelder(const HolomorphicMotion& m, cplx alpha, cplx beta, cplx z);

struct DisjointnessReport {
  double min_gap = std::numeric_limits<double>::infinity();
  cplx alpha{}, beta{}, z{};
  bool passes = true;
};

DisjointnessReport check_disjointness(const HolomorphicMotion& m, const std::vector<cplx>& z_samples);

struct BoundednessReport {
  double max_modulus = 0.0;
  double limit = 1.0;
  bool passes = true;
};

BoundednessReport check_boundedness(const HolomorphicMotion& m, const std::vector<cplx>& z_samples);

struct SchwarzReport {
  struct Row {
    cplx z;
    double sup_mu;
    double margin;  ///< |z| - sup_mu
  };
  std::vector<Row> rows;
  double worst_excess = 0.0;  ///< max(0, sup_mu - |z|)
  bool passes = true;         ///< worst_excess <= 5e-2
};

/// sup |mu^z| over w samples in the unit disk, for each z.
SchwarzReport check_schwarz(const HolomorphicMotion& m, const std::vector<cplx>& zs, int w_samples_per_axis = 21);

struct MotionReport {
  DisjointnessReport disjointness;
  HolomorphyReport holomorphy;
  BoundednessReport boundedness;
  std::optional<SchwarzReport> schwarz;  ///< global motions only
  std::string schwarz_failure;           ///< why the holonomy could not be estimated
  int harnack_checks = 0;
  int harnack_violations = 0;
  int harnack_out_of_regime = 0;
  double harnack_worst_margin = std::numeric_limits<double>::infinity();
  bool passes() const;
};

/// All four checks on default samples; Harnack over every tau pair and the
/// given z points.
MotionReport check_motion(const HolomorphicMotion& m, const std::vector<cplx>& harnack_z);

/// Throws ValidationError naming the first failing invariant.
void require_admissible(const HolomorphicMotion& m);

}  // namespace qclam
