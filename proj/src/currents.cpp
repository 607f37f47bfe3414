#include "qclam/currents.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

namespace qclam {

namespace {

constexpr double kSupportTol = 1e-12;

// one graph of the current with its weight; alpha is meaningful for leaves only
struct Sheet {
  double weight;
  bool leaf;
  cplx alpha;
  std::function<cplx(cplx)> phi, dphi;
};

std::vector<Sheet> sheets(const WeightedCurrent& s) {
  const auto& cur = s.base();
  const HolomorphicMotion& m = cur.lamination().motion;
  std::vector<Sheet> out;
  for (std::size_t i = 0; i < cur.tau().size(); ++i) {
    const cplx a = cur.tau()[i];
    out.push_back({cur.weights()[i], true, a, [&m, a](cplx z) { return m(a, z); },
                   [&m, a](cplx z) { return m.leaf_derivative(a, z); }});
  }
  for (const auto& g : cur.rogue()) out.push_back({g.weight, false, cplx(0.0), g.phi, g.dphi});
  return out;
}

double density_at(const WeightedCurrent& s, const Sheet& sh, cplx z) {
  if (!sh.leaf) return 1.0;
  const double f = s.density(z, sh.alpha);
  if (!(f >= 0.0) || !std::isfinite(f)) throw ValidationError("density must be finite and nonnegative");
  return f;
}

// Gauss-Legendre nodes and weights on [-1, 1] (Golub-Welsch)
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = k / std::sqrt(4.0 * k * k - 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  return {es.eigenvalues(), 2.0 * es.eigenvectors().row(0).transpose().array().square().matrix()};
}

struct QuadPoint {
  cplx z;
  double weight;
};

// polar rule on a disk: Gauss in r (with the r dr Jacobian), midpoint in angle
std::vector<QuadPoint> disk_rule(const Disk& d, int nr = 48, int nt = 96) {
  static const auto gl = gauss_legendre(48);
  const auto& [x, w] = nr == 48 ? gl : gauss_legendre(nr);
  std::vector<QuadPoint> pts;
  pts.reserve(static_cast<std::size_t>(nr) * nt);
  for (int i = 0; i < nr; ++i) {
    const double r = 0.5 * d.radius * (1.0 + x[i]);
    const double wr = 0.5 * d.radius * w[i] * r * 2.0 * std::numbers::pi / nt;
    for (int j = 0; j < nt; ++j) pts.push_back({d.center + std::polar(r, 2.0 * std::numbers::pi * (j + 0.5) / nt), wr});
  }
  return pts;
}

double leaf_mass(const WeightedCurrent& s, const Sheet& sh, const std::vector<QuadPoint>& rule) {
  std::vector<double> terms;
  terms.reserve(rule.size());
  for (const auto& q : rule) terms.push_back(density_at(s, sh, q.z) * (1.0 + std::norm(sh.dphi(q.z))) * q.weight);
  return pairwise_sum(terms);
}

cplx coeff(const std::function<cplx(cplx, cplx)>& c, cplx z, cplx w) { return c ? c(z, w) : cplx(0.0); }

void check_support(const TestForm& f, cplx z, cplx w) {
  if (std::abs(z) < f.support && std::abs(w) < f.support) return;
  if (std::abs(coeff(f.c1, z, w)) > kSupportTol || std::abs(coeff(f.c2, z, w)) > kSupportTol) {
    std::ostringstream os;
    os << "test form does not vanish outside its support radius " << f.support << " (at z=" << z << ", w=" << w << ")";
    throw ValidationError(os.str());
  }
}

void validate_form(const TestForm& f, TestForm::Kind kind) {
  if (f.kind != kind)
    throw ValidationError(kind == TestForm::Kind::Two ? "pairing needs a two-form" : "closedness needs one-forms");
  if (!(f.support > 0.0 && f.support < 1.0)) throw ValidationError("test form support radius must lie in (0, 1)");
}

// int_L f * (pullback of the two-form), per sheet, without the sheet weight
std::vector<double> leaf_pairings(const WeightedCurrent& s, const std::vector<Sheet>& sh, const TestForm& form) {
  validate_form(form, TestForm::Kind::Two);
  const auto rule = disk_rule(Disk{0.0, form.support});
  std::vector<double> out;
  for (const auto& g : sh) {
    // support audit on the part of the leaf over support <= |z| < 1
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 64; ++j) {
        const cplx z = std::polar(form.support + (1.0 - form.support) * i / 8.0, 2.0 * std::numbers::pi * j / 64);
        check_support(form, z, g.phi(z));
      }
    std::vector<double> terms;
    terms.reserve(rule.size());
    for (const auto& q : rule) {
      const cplx w = g.phi(q.z);
      check_support(form, q.z, w);
      const double pull = coeff(form.c1, q.z, w).real() + coeff(form.c2, q.z, w).real() * std::norm(g.dphi(q.z));
      terms.push_back(pull == 0.0 ? 0.0 : density_at(s, g, q.z) * pull * q.weight);
    }
    out.push_back(pairwise_sum(terms));
  }
  return out;
}

double weighted_total(const std::vector<double>& weights, const std::vector<double>& per_leaf) {
  std::vector<double> t(per_leaf.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = weights[i] * per_leaf[i];
  return pairwise_sum(t);
}

std::vector<double> all_weights(const std::vector<Sheet>& sh) {
  std::vector<double> w;
  for (const auto& g : sh) w.push_back(g.weight);
  return w;
}

void require_same_lamination(const LaminarCurrent& a, const LaminarCurrent& b) {
  if (a.tau() != b.tau() || a.lamination().motion.description() != b.lamination().motion.description())
    throw ValidationError("currents live on different laminations");
  if (!a.rogue().empty() || !b.rogue().empty()) throw ValidationError("domination is defined for laminar currents only");
}

double support_diameter(const std::vector<cplx>& tau, const std::vector<double>& w) {
  double d = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (w[i] > 0.0 && w[j] > 0.0) d = std::max(d, std::abs(tau[i] - tau[j]));
  return d;
}

}  // namespace

LaminarCurrent::LaminarCurrent(Lamination lam, std::vector<double> weights, std::vector<GraphLeaf> rogue)
    : lam_(std::move(lam)), weights_(std::move(weights)), rogue_(std::move(rogue)) {
  if (weights_.size() != lam_.motion.tau().size()) throw ValidationError("current needs one weight per tau point");
  for (double w : weights_)
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("current weights must be finite and nonnegative");
  for (const auto& g : rogue_) {
    if (!g.phi || !g.dphi) throw ValidationError("rogue graph '" + g.label + "' needs phi and its derivative");
    if (!(g.weight >= 0.0) || !std::isfinite(g.weight)) throw ValidationError("rogue graph weights must be nonnegative");
  }
}

WeightedCurrent::WeightedCurrent(LaminarCurrent base, AmbientFunction density, double p)
    : base_(std::move(base)), density_(std::move(density)), p_(p) {
  if (!(p_ > 1.0) || !std::isfinite(p_)) throw ValidationError("density exponent must be finite and > 1");
}

TestForm TestForm::two(std::function<cplx(cplx, cplx)> c_z, std::function<cplx(cplx, cplx)> c_w, double support) {
  return TestForm{Kind::Two, std::move(c_z), std::move(c_w), support};
}

TestForm TestForm::one(std::function<cplx(cplx, cplx)> c_z, std::function<cplx(cplx, cplx)> c_w, double support) {
  return TestForm{Kind::One, std::move(c_z), std::move(c_w), support};
}

double plateau(double t, double inner, double outer) {
  if (t <= inner) return 1.0;
  if (t >= outer) return 0.0;
  const double x = (t - inner) / (outer - inner);
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return b / (a + b);
}

std::vector<TestForm> default_form_dictionary() {
  std::vector<TestForm> out;
  for (int slot = 0; slot < 2; ++slot)
    for (cplx c : {cplx(1.0), cplx(0.0, 1.0)})
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          auto psi = [=](cplx z, cplx w) {
            const double cut = plateau(std::abs(z), 0.5, 0.85) * plateau(std::abs(w), 0.5, 0.85);
            if (cut == 0.0) return cplx(0.0);
            return c * (a ? z : cplx(1.0)) * (b ? w : cplx(1.0)) * cut;
          };
          out.push_back(slot == 0 ? TestForm::one(psi, {}) : TestForm::one({}, psi));
        }
  return out;
}

double mass(const WeightedCurrent& s, const Disk& region) {
  if (!(region.radius > 0.0) || std::abs(region.center) + region.radius > 1.0 + 1e-12)
    throw ValidationError("mass region must be a disk inside the unit disk");
  const auto rule = disk_rule(region);
  const auto sh = sheets(s);
  std::vector<double> per;
  for (const auto& g : sh) per.push_back(g.weight > 0.0 ? leaf_mass(s, g, rule) : 0.0);
  return weighted_total(all_weights(sh), per);
}

double pair(const WeightedCurrent& s, const TestForm& form) {
  const auto sh = sheets(s);
  return weighted_total(all_weights(sh), leaf_pairings(s, sh, form));
}

double closedness_residual(const WeightedCurrent& s, const std::vector<TestForm>& forms, int n) {
  if (n < 5) throw ValidationError("closedness grid needs n >= 5");
  for (const auto& f : forms) validate_form(f, TestForm::Kind::One);
  const double h = 2.0 / (n - 1);
  auto node = [&](int r, int c) { return cplx(-1.0 + c * h, -1.0 + r * h); };
  const auto sh = sheets(s);

  std::vector<std::vector<double>> per_form(forms.size(), std::vector<double>(sh.size(), 0.0));
  for (std::size_t k = 0; k < sh.size(); ++k) {
    const auto& g = sh[k];
    if (g.weight == 0.0) continue;
    Eigen::ArrayXXcd phi = Eigen::ArrayXXcd::Zero(n, n), dphi = Eigen::ArrayXXcd::Zero(n, n);
    Eigen::ArrayXXd dens = Eigen::ArrayXXd::Zero(n, n);
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> inside(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const cplx z = node(r, c);
        inside(r, c) = std::abs(z) < 1.0;
        if (!inside(r, c)) continue;
        phi(r, c) = g.phi(z);
        dphi(r, c) = g.dphi(z);
        dens(r, c) = density_at(s, g, z);
      }
    for (std::size_t f = 0; f < forms.size(); ++f) {
      // pullback beta|_L = a dz + conj(a) dzbar
      Eigen::ArrayXXcd a = Eigen::ArrayXXcd::Zero(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
          if (!inside(r, c)) continue;
          const cplx z = node(r, c), w = phi(r, c);
          check_support(forms[f], z, w);
          a(r, c) = coeff(forms[f].c1, z, w) + coeff(forms[f].c2, z, w) * dphi(r, c);
        }
      // d(beta|_L) = -4 Im(da/dzbar) dA; a vanishes on the border of the square
      std::vector<double> terms;
      for (int r = 1; r < n - 1; ++r)
        for (int c = 1; c < n - 1; ++c) {
          if (dens(r, c) == 0.0) continue;
          const cplx dzbar = 0.5 * ((a(r, c + 1) - a(r, c - 1)) + cplx(0, 1) * (a(r + 1, c) - a(r - 1, c))) / (2 * h);
          terms.push_back(-4.0 * dzbar.imag() * dens(r, c) * h * h);
        }
      per_form[f][k] = pairwise_sum(terms);
    }
  }
  double worst = 0.0;
  const auto w = all_weights(sh);
  for (const auto& pf : per_form) worst = std::max(worst, std::abs(weighted_total(w, pf)));
  return worst;
}

double directedness_residual(const WeightedCurrent& s, const std::vector<cplx>& z_samples) {
  const auto& lam = s.base().lamination();
  double worst = 0.0;
  for (std::size_t i = 0; i < s.base().tau().size(); ++i) {
    if (s.base().weights()[i] == 0.0) continue;
    const cplx a = s.base().tau()[i];
    for (cplx z : z_samples) {
      const auto dl = directed_form(lam, z, a);
      worst = std::max(worst, std::abs(dl(1.0, lam.motion.leaf_derivative(a, z))));
    }
  }
  for (const auto& g : s.base().rogue()) {
    if (g.weight == 0.0) continue;
    for (cplx z : z_samples) {
      const auto dl = directed_form(lam, z, lam.motion.leaf_through(z, g.phi(z)));
      worst = std::max(worst, std::abs(dl(1.0, g.dphi(z))));
    }
  }
  return worst;
}

LeafDensity radon_nikodym(const LaminarCurrent& s, const LaminarCurrent& t) {
  require_same_lamination(s, t);
  LeafDensity f;
  for (std::size_t i = 0; i < t.tau().size(); ++i) {
    const double si = s.weights()[i], ti = t.weights()[i];
    if (si > ti) {
      std::ostringstream os;
      os << std::setprecision(17) << "S is not dominated by T on leaf " << i << " (alpha = " << t.tau()[i] << "): s = " << si
         << " > t = " << ti;
      throw DominationError(os.str(), i, t.tau()[i]);
    }
    f.numerator.push_back(ti > 0.0 ? si : 0.0);
    f.denominator.push_back(ti);
  }
  return f;
}

LaminarCurrent reconstruct(const LeafDensity& f, const LaminarCurrent& t) {
  if (f.size() != t.tau().size() || f.denominator.size() != f.size())
    throw ValidationError("density and current have different leaf counts");
  std::vector<double> w(f.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double ti = t.weights()[i];
    if (f.denominator[i] == ti)
      w[i] = ti > 0.0 ? f.numerator[i] : 0.0;  // the ratio cancels exactly
    else
      w[i] = f[i] * ti;
  }
  return LaminarCurrent(t.lamination(), std::move(w), t.rogue());
}

std::vector<RefinementStep> refine_subdivide(const WeightedCurrent& s, const TestForm& form, int depth) {
  if (depth < 1) throw ValidationError("refinement depth must be >= 1");
  if (!s.base().rogue().empty()) throw ValidationError("refinement needs a laminar current");
  const auto sh = sheets(s);
  const auto pairings = leaf_pairings(s, sh, form);
  const auto masses = [&] {
    const auto rule = disk_rule(Disk{});
    std::vector<double> m;
    for (const auto& g : sh) m.push_back(leaf_mass(s, g, rule));
    return m;
  }();
  const auto& tau = s.base().tau();
  std::vector<double> w = s.base().weights();
  if (!(weighted_total(w, pairings) > 0.0)) throw ValidationError("<S, form> must be positive to refine");

  std::vector<RefinementStep> steps;
  for (int k = 1; k <= depth; ++k) {
    const double diam = std::pow(10.0, -k);
    const double r = 0.45 * diam;
    std::vector<std::size_t> supp;
    for (std::size_t j = 0; j < tau.size(); ++j)
      if (w[j] > 0.0) supp.push_back(j);
    // greedy cover: every support point lies within r/2 of a center
    std::vector<cplx> centers;
    for (std::size_t j : supp)
      if (std::none_of(centers.begin(), centers.end(), [&](cplx c) { return std::abs(tau[j] - c) < 0.5 * r; }))
        centers.push_back(tau[j]);
    // theta_i = b_i / sum b, with hat functions b_i of radius r
    Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(static_cast<Index>(centers.size()), static_cast<Index>(tau.size()));
    double defect = 0.0;
    for (std::size_t j : supp) {
      double total = 0.0;
      for (std::size_t i = 0; i < centers.size(); ++i) {
        theta(static_cast<Index>(i), static_cast<Index>(j)) = std::max(0.0, 1.0 - std::abs(tau[j] - centers[i]) / r);
        total += theta(static_cast<Index>(i), static_cast<Index>(j));
      }
      theta.col(static_cast<Index>(j)) /= total;
      defect = std::max(defect, std::abs(theta.col(static_cast<Index>(j)).sum() - 1.0));
    }
    std::vector<double> piece(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) {
      std::vector<double> wi(tau.size());
      for (std::size_t j = 0; j < tau.size(); ++j) wi[j] = theta(static_cast<Index>(i), static_cast<Index>(j)) * w[j];
      piece[i] = weighted_total(wi, pairings);
    }
    const double whole = pair(WeightedCurrent(LaminarCurrent(s.base().lamination(), w), s.density_fn(), s.p()), form);
    const auto best = static_cast<std::size_t>(std::max_element(piece.begin(), piece.end()) - piece.begin());
    if (!(piece[best] > 0.0))
      throw ContradictionError("no piece of the partition pairs positively with the form at step " + std::to_string(k),
                               piece);
    std::vector<double> next(tau.size());
    for (std::size_t j = 0; j < tau.size(); ++j) next[j] = theta(static_cast<Index>(best), static_cast<Index>(j)) * w[j];
    const double m = weighted_total(next, masses);
    if (!(m > 0.0)) throw NumericalError("selected piece has zero mass", m);
    for (double& x : next) x /= m;

    WeightedCurrent sk(LaminarCurrent(s.base().lamination(), next), s.density_fn(), s.p());
    steps.push_back(RefinementStep{
        .k = k,
        .center = centers[best],
        .ball_diameter = 2.0 * r,
        .support_diameter = support_diameter(tau, next),
        .mass = mass(sk),
        .pairing = piece[best],
        .partition_defect = defect,
        .pairing_defect = std::abs(pairwise_sum(piece) - whole),
        .pieces = centers.size(),
        .current = sk,
    });
    w = next;
  }
  return steps;
}

void write_refinement_csv(std::ostream& os, const std::vector<RefinementStep>& steps) {
  os << "k,center_re,center_im,ball_diameter,support_diameter,mass,pairing\n" << std::setprecision(17);
  for (const auto& st : steps)
    os << st.k << ',' << st.center.real() << ',' << st.center.imag() << ',' << st.ball_diameter << ','
       << st.support_diameter << ',' << st.mass << ',' << st.pairing << '\n';
}

}  // namespace qclam
