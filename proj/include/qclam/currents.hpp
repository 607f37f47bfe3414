#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qclam/lamination.hpp"

namespace qclam {

/// A graph w = phi(z) over the unit disk that is not a leaf of the lamination.
struct GraphLeaf {
  std::string label;
  std::function<cplx(cplx)> phi;
  std::function<cplx(cplx)> dphi;
  double weight = 1.0;
};

/// T = sum_i m_i [L_{alpha_i}] over the leaves through tau, plus optional
/// rogue graphs (used to exhibit non-directed currents).
class LaminarCurrent {
public:
  LaminarCurrent(Lamination lam, std::vector<double> weights, std::vector<GraphLeaf> rogue = {});

  const Lamination& lamination() const noexcept { return lam_; }
  const std::vector<cplx>& tau() const noexcept { return lam_.motion.tau(); }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const std::vector<GraphLeaf>& rogue() const noexcept { return rogue_; }

private:
  Lamination lam_;
  std::vector<double> weights_;
  std::vector<GraphLeaf> rogue_;
};

/// S = f T with a nonnegative density f(z, alpha) on the leaves of T
/// (rogue graphs carry density 1). An empty density means f = 1.
class WeightedCurrent {
public:
  WeightedCurrent(LaminarCurrent base, AmbientFunction density = {}, double p = 2.0);  // NOLINT: implicit on purpose

  const LaminarCurrent& base() const noexcept { return base_; }
  bool has_density() const noexcept { return static_cast<bool>(density_); }
  double density(cplx z, cplx alpha) const { return density_ ? density_(z, alpha) : 1.0; }
  const AmbientFunction& density_fn() const noexcept { return density_; }
  /// Integrability exponent 1 + epsilon of the density.
  double p() const noexcept { return p_; }

private:
  LaminarCurrent base_;
  AmbientFunction density_;
  double p_;
};

/// Test forms with coefficients supported in |z| < support, |w| < support.
///   Two: c1 (i/2) dz^dzbar + c2 (i/2) dw^dwbar (real parts of c1, c2 are used)
///   One: c1 dz + c2 dw + conjugates
struct TestForm {
  enum class Kind { Two, One };
  Kind kind = Kind::Two;
  std::function<cplx(cplx z, cplx w)> c1, c2;
  double support = 0.9;

  static TestForm two(std::function<cplx(cplx, cplx)> c_z, std::function<cplx(cplx, cplx)> c_w = {},
                      double support = 0.9);
  static TestForm one(std::function<cplx(cplx, cplx)> c_z, std::function<cplx(cplx, cplx)> c_w, double support = 0.9);
};

/// 1 for t <= inner, 0 for t >= outer, smooth (C-infinity) in between.
double plateau(double t, double inner, double outer);

/// Polynomial one-forms z^a w^b (a, b in {0, 1}) times plateau(|z|) plateau(|w|),
/// placed in the dz or dw slot with coefficient 1 or i: 16 forms.
std::vector<TestForm> default_form_dictionary();

/// sum_i m_i int_region f (1 + |phi_i'|^2) dA, by polar Gauss quadrature.
double mass(const WeightedCurrent& s, const Disk& region = Disk{});

/// <S, form> for a two-form. ValidationError if the form is a one-form or
/// does not vanish outside its declared support on the leaves of S.
double pair(const WeightedCurrent& s, const TestForm& form);

/// max over the one-forms of |<S, d beta>|. d beta is pulled back to each leaf
/// and differentiated by central differences on a z grid (n x n over [-1, 1]^2).
double closedness_residual(const WeightedCurrent& s, const std::vector<TestForm>& forms, int n = 201);

/// sup over leaves (and rogue graphs) with positive weight and z samples of
/// |dl(1, phi'(z))|, dl being the directed form of the lamination at that point.
double directedness_residual(const WeightedCurrent& s, const std::vector<cplx>& z_samples = default_z_samples());

/// Densities f_i = s_i / t_i kept as exact ratios (0 where t_i = 0).
struct LeafDensity {
  std::vector<double> numerator, denominator;
  std::size_t size() const noexcept { return numerator.size(); }
  double operator[](std::size_t i) const { return denominator[i] > 0.0 ? numerator[i] / denominator[i] : 0.0; }
};

class DominationError : public ValidationError {
public:
  DominationError(const std::string& what, std::size_t leaf, cplx alpha)
      : ValidationError(what), leaf_(leaf), alpha_(alpha) {}
  std::size_t leaf() const noexcept { return leaf_; }
  cplx alpha() const noexcept { return alpha_; }

private:
  std::size_t leaf_;
  cplx alpha_;
};

/// f with S = f T for S <= T leafwise. DominationError names the first leaf
/// with s_i > t_i.
LeafDensity radon_nikodym(const LaminarCurrent& s, const LaminarCurrent& t);

/// f T.
LaminarCurrent reconstruct(const LeafDensity& f, const LaminarCurrent& t);

/// Raised when no piece of the partition pairs positively with the form.
class ContradictionError : public ValidationError {
public:
  ContradictionError(const std::string& what, std::vector<double> pairings)
      : ValidationError(what), pairings_(std::move(pairings)) {}
  const std::vector<double>& pairings() const noexcept { return pairings_; }

private:
  std::vector<double> pairings_;
};

struct RefinementStep {
  int k = 0;
  cplx center;                   ///< center of the selected ball
  double ball_diameter = 0;      ///< diameter of every ball of the cover
  double support_diameter = 0;   ///< diameter of the support of S_k in tau
  double mass = 0;               ///< M(S_k)
  double pairing = 0;            ///< <theta_i S_{k-1}, form> of the selected piece
  double partition_defect = 0;   ///< max over tau of |sum_i theta_i - 1|
  double pairing_defect = 0;     ///< |sum_i <theta_i S_{k-1}, form> - <S_{k-1}, form>|
  std::size_t pieces = 0;
  WeightedCurrent current;
};

/// S_1, ..., S_depth: at step k tau is covered by balls of diameter < 10^-k,
/// a continuous partition of unity theta_i (constant along leaves) is built,
/// the piece maximizing <theta_i S_{k-1}, form> is kept and renormalized to
/// unit mass.
std::vector<RefinementStep> refine_subdivide(const WeightedCurrent& s, const TestForm& form, int depth);

/// k,center_re,center_im,ball_diameter,support_diameter,mass,pairing
void write_refinement_csv(std::ostream& os, const std::vector<RefinementStep>& steps);

}  // namespace qclam
