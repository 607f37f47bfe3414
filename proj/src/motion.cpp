#include "qclam/motion.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace qclam {

namespace {

constexpr cplx I{0.0, 1.0};

// integral of the quintic smoothstep 6u^5 - 15u^4 + 10u^3
double smoothstep_integral(double u) { return u * u * u * u * (2.5 + u * (-3.0 + u)); }

// t psi(t) of the taper.
double taper_m(double t, double r0, double d) {
  const double c = r0 - 0.5 * d;
  if (t <= r0) return t;
  if (t <= r0 + d) {
    const double u = (t - r0) / d;
    return r0 + d * (u - 2.0 * smoothstep_integral(u));
  }
  const double t2 = r0 + d + c;
  if (t <= t2) return r0 - (t - r0 - d);
  if (t <= t2 + d) {
    const double u = (t - t2) / d;
    return 0.5 * d + d * (-u + smoothstep_integral(u));
  }
  return 0.0;
}

double keys_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

}  // namespace

HolomorphicMotion::HolomorphicMotion(std::string description, LeafFn phi, std::vector<cplx> tau, double epsilon_bound,
                                     bool global, double base_radius)
    : description_(std::move(description)),
      phi_(std::move(phi)),
      tau_(std::move(tau)),
      epsilon_bound_(epsilon_bound),
      global_(global),
      base_radius_(base_radius) {
  if (!phi_) throw ValidationError("motion needs a leaf function");
  if (tau_.empty()) throw ValidationError("motion needs a nonempty tau");
  for (cplx a : tau_)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw ValidationError("tau contains non-finite values");
  if (!(epsilon_bound > 0.0 && epsilon_bound < 1.0)) throw ValidationError("epsilon_bound must lie in (0, 1)");
  if (!(base_radius >= 1.0)) throw ValidationError("base radius must be >= 1");
  if (global_) {
    normalized_ = true;
    for (int i = 0; i <= 8 && normalized_; ++i)
      for (int j = 0; j <= 8 && normalized_; ++j) {
        const cplx a(-1.0 + 0.25 * i, -1.0 + 0.25 * j);
        normalized_ = std::abs(phi_(a, 0.0) - a) <= 1e-14 * (1.0 + std::abs(a));
      }
    for (cplx a : tau_) normalized_ = normalized_ && std::abs(phi_(a, 0.0) - a) <= 1e-14 * (1.0 + std::abs(a));
  }
}

HolomorphicMotion HolomorphicMotion::from_formula(std::string_view formula, std::vector<cplx> tau,
                                                  double epsilon_bound, bool global) {
  Expr e = parse(formula);
  return HolomorphicMotion(std::string(formula), [e](cplx a, cplx z) { return eval(e, a, z); }, std::move(tau),
                           epsilon_bound, global);
}

HolomorphicMotion HolomorphicMotion::from_leaves(const std::vector<std::vector<std::pair<cplx, cplx>>>& leaves,
                                                 std::vector<cplx> tau, double epsilon_bound) {
  if (leaves.size() != tau.size()) throw ValidationError("one leaf sample list is required per tau point");
  std::vector<std::vector<cplx>> coeffs;
  double residual = 0.0;
  for (std::size_t k = 0; k < leaves.size(); ++k) {
    const auto& pts = leaves[k];
    if (pts.empty()) throw ValidationError("leaf " + std::to_string(k) + " has no samples");
    for (const auto& [z, w] : pts)
      if (!(std::abs(z) < 1.0)) throw ValidationError("leaf samples must have |z| < 1");
    const auto n = static_cast<Index>(pts.size());
    const Index degree = std::min<Index>(12, n <= 4 ? n - 1 : n / 2);
    Eigen::MatrixXcd A(n, degree + 1);
    Eigen::VectorXcd b(n);
    for (Index i = 0; i < n; ++i) {
      cplx p = 1.0;
      for (Index j = 0; j <= degree; ++j, p *= pts[i].first) A(i, j) = p;
      b(i) = pts[i].second;
    }
    const Eigen::VectorXcd c = A.colPivHouseholderQr().solve(b);
    residual = std::max(residual, (A * c - b).cwiseAbs().maxCoeff());
    coeffs.emplace_back(c.data(), c.data() + c.size());
  }
  auto tau_copy = tau;
  LeafFn phi = [tau_copy, coeffs](cplx a, cplx z) {
    for (std::size_t k = 0; k < tau_copy.size(); ++k)
      if (tau_copy[k] == a) {
        cplx acc{};
        for (auto it = coeffs[k].rbegin(); it != coeffs[k].rend(); ++it) acc = acc * z + *it;
        return acc;
      }
    throw DomainError("tabulated motion has no leaf through alpha");
  };
  HolomorphicMotion m("tabulated leaves", std::move(phi), std::move(tau), epsilon_bound, false);
  m.tabulated_ = true;
  m.fit_residual_ = residual;
  m.coefficients_ = std::move(coeffs);
  return m;
}

std::vector<std::string> HolomorphicMotion::builtin_names() { return {"horizontal", "affine", "shear"}; }

std::vector<cplx> HolomorphicMotion::default_tau() {
  return {cplx(0.3, 0.0), cplx(0.0, 0.1), cplx(-0.2, 0.15), cplx(0.05, -0.25)};
}

HolomorphicMotion HolomorphicMotion::builtin(std::string_view name, std::vector<cplx> tau, double epsilon_bound) {
  if (name == "horizontal")
    return {"alpha", [](cplx a, cplx) { return a; }, std::move(tau), epsilon_bound, true};
  if (name == "affine")
    return {"alpha*(1 + z/2)", [](cplx a, cplx z) { return a * (1.0 + 0.5 * z); }, std::move(tau), epsilon_bound, true};
  if (name == "shear")
    return {"alpha + z*conj(alpha)", [](cplx a, cplx z) { return a + z * std::conj(a); }, std::move(tau),
            epsilon_bound, true};
  throw ValidationError("unknown built-in motion '" + std::string(name) + "'");
}

cplx HolomorphicMotion::operator()(cplx alpha, cplx z) const {
  if (!global_ && std::find(tau_.begin(), tau_.end(), alpha) == tau_.end())
    throw DomainError("non-global motion evaluated off tau");
  return phi_(alpha, z);
}

cplx HolomorphicMotion::leaf_derivative(cplx alpha, cplx z) const {
  if (tabulated_) {
    const auto k = static_cast<std::size_t>(std::find(tau_.begin(), tau_.end(), alpha) - tau_.begin());
    if (k == tau_.size()) throw DomainError("tabulated motion has no leaf through alpha");
    const auto& c = coefficients_[k];
    cplx acc{};
    for (std::size_t j = c.size() - 1; j >= 1; --j) acc = acc * z + static_cast<double>(j) * c[j];
    return acc;
  }
  const double h = 1e-3;
  const cplx fx = (*this)(alpha, z + h) - (*this)(alpha, z - h);
  const cplx fy = (*this)(alpha, z + I * h) - (*this)(alpha, z - I * h);
  return (fx - I * fy) / (4.0 * h);
}

cplx HolomorphicMotion::leaf_through(cplx z, cplx w) const {
  if (!global_) {
    for (cplx a : tau_)
      if (std::abs(phi_(a, z) - w) <= 1e-12 * (1.0 + std::abs(w))) return a;
    throw DomainError("point lies on no leaf of the (non-global) motion");
  }
  const double tol = 1e-14 * (1.0 + std::abs(w));
  for (cplx start : {w, cplx{}, 0.5 * w}) {
    cplx a = start;
    double res = std::abs(phi_(a, z) - w);
    for (int it = 0; it < 80 && res > tol; ++it) {
      const double s = 1e-7 * (1.0 + std::abs(a));
      const cplx ja = (phi_(a + s, z) - phi_(a - s, z)) / (2 * s);
      const cplx jb = (phi_(a + I * s, z) - phi_(a - I * s, z)) / (2 * s);
      Eigen::Matrix2d J;
      J << ja.real(), jb.real(), ja.imag(), jb.imag();
      const cplx F = phi_(a, z) - w;
      const double det = J.determinant();
      if (!(std::abs(det) > 1e-300)) break;
      const Eigen::Vector2d step = J.inverse() * Eigen::Vector2d(F.real(), F.imag());
      double lambda = 1.0;
      bool improved = false;
      for (int k = 0; k < 40; ++k, lambda *= 0.5) {
        const cplx trial = a - lambda * cplx(step(0), step(1));
        const double r = std::abs(phi_(trial, z) - w);
        if (r < res) {
          a = trial;
          res = r;
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    if (res <= std::max(tol, 1e-12 * (1.0 + std::abs(w)))) return a;
  }
  throw DomainError("fiber inversion failed: no leaf found through the point");
}

double taper_outer_radius(double r0, double width) { return 2.0 * r0 + 1.5 * width; }

double taper_profile(double t, double r0, double width) {
  if (t <= r0) return 1.0;
  if (t >= taper_outer_radius(r0, width)) return 0.0;
  return taper_m(t, r0, width) / t;
}

HolomorphicMotion taper(const HolomorphicMotion& m, double r0, double width) {
  if (!m.global()) throw ValidationError("only global motions can be tapered");
  if (!(width > 0.0 && r0 >= 0.5 * width)) throw ValidationError("taper needs width > 0 and r0 >= width/2");
  const LeafFn phi = m.leaf_fn();
  return HolomorphicMotion(
      "taper(" + m.description() + ")",
      [phi, r0, width](cplx a, cplx z) {
        const double psi = taper_profile(std::abs(a), r0, width);
        return psi == 0.0 ? a : a + psi * (phi(a, z) - a);
      },
      m.tau(), m.epsilon_bound(), true, m.base_radius());
}

std::vector<cplx> default_z_samples() {
  std::vector<cplx> zs{0.0};
  for (double r : {0.2, 0.4, 0.6, 0.8, 0.9, 0.95})
    for (int k = 0; k < 24; ++k) zs.push_back(std::polar(r, 2.0 * std::numbers::pi * (k + 0.5 * (r > 0.5)) / 24.0));
  return zs;
}

cplx FiberGrid::point(int row, int col) const { return {-radius + col * spacing(), -radius + row * spacing()}; }

HolonomyMap::HolonomyMap(cplx source, cplx target, std::vector<std::pair<cplx, cplx>> tau_pairs,
                         std::optional<FiberGrid> grid, Eigen::ArrayXXcd table)
    : source_(source), target_(target), tau_pairs_(std::move(tau_pairs)), grid_(grid), table_(std::move(table)) {
  if (grid_ && (table_.rows() != grid_->n || table_.cols() != grid_->n))
    throw ValidationError("holonomy table does not match its fiber grid");
}

cplx HolonomyMap::operator()(cplx w) const {
  for (const auto& [s, t] : tau_pairs_)
    if (s == w) return t;
  if (!grid_) throw DomainError("holonomy of a non-global motion is defined on tau only");
  const FiberGrid& g = *grid_;
  const double h = g.spacing();
  const double fr = (w.imag() + g.radius) / h, fc = (w.real() + g.radius) / h;
  const double slack = 1e-9;
  if (fr < -slack || fc < -slack || fr > g.n - 1 + slack || fc > g.n - 1 + slack)
    throw DomainError("point lies outside the tabulated fiber square");
  const auto r0 = static_cast<int>(std::floor(fr)), c0 = static_cast<int>(std::floor(fc));
  auto clampi = [&g](int i) { return std::clamp(i, 0, g.n - 1); };
  cplx acc{};
  for (int a = -1; a <= 2; ++a) {
    const double wr = keys_weight(fr - (r0 + a));
    if (wr == 0.0) continue;
    cplx row{};
    for (int b = -1; b <= 2; ++b) {
      const double wc = keys_weight(fc - (c0 + b));
      if (wc != 0.0) row += wc * table_(clampi(r0 + a), clampi(c0 + b));
    }
    acc += wr * row;
  }
  return acc;
}

HolonomyMap holonomy(const HolomorphicMotion& m, cplx z, cplx zp, std::optional<FiberGrid> grid) {
  if (!(std::abs(z) < 1.0 && std::abs(zp) < 1.0)) throw ValidationError("holonomy fibers must lie in the unit disk");
  std::vector<std::pair<cplx, cplx>> pairs;
  for (cplx a : m.tau()) pairs.emplace_back(m(a, z), m(a, zp));
  if (!m.global() || !grid) return HolonomyMap(z, zp, std::move(pairs), std::nullopt, {});
  if (grid->n < 4 || !(grid->radius > 0.0)) throw ValidationError("fiber grid needs n >= 4 and a positive radius");
  Eigen::ArrayXXcd table(grid->n, grid->n);
  for (int r = 0; r < grid->n; ++r)
    for (int c = 0; c < grid->n; ++c) {
      const cplx w = grid->point(r, c);
      const cplx a = (z == cplx{} && m.normalized()) ? w : m.leaf_through(z, w);
      table(r, c) = m(a, zp);
    }
  return HolonomyMap(z, zp, std::move(pairs), grid, std::move(table));
}

cplx holonomy_dilatation(const HolomorphicMotion& m, cplx z, cplx w) {
  if (!m.global()) throw ValidationError("holonomy dilatation needs a global motion");
  auto h = [&](cplx x) { return m(m.normalized() ? x : m.leaf_through(0.0, x), z); };
  const double d = 1e-6;
  const cplx hx = (h(w + d) - h(w - d)) / (2 * d);
  const cplx hy = (h(w + I * d) - h(w - I * d)) / (2 * d);
  const cplx dw = 0.5 * (hx - I * hy);
  const cplx dwb = 0.5 * (hx + I * hy);
  if (std::abs(dw) < 1e-12) throw DegeneratePointError("holonomy has vanishing dh/dw", w);
  return dwb / dw;
}

BeltramiField beltrami_of_holonomy(const HolomorphicMotion& m, cplx z, const GridSpec& spec, SupportPolicy policy) {
  if (!m.global()) throw ValidationError("Beltrami coefficient of holonomy needs a global motion");
  const Index n = spec.resolution();
  Eigen::ArrayXXcd mu = Eigen::ArrayXXcd::Zero(n, n);
  for (Index c = 0; c < n; ++c)
    for (Index r = 0; r < n; ++r) {
      const cplx w = spec.node(r, c);
      const bool inside = std::abs(w) <= 1.0;
      if (!inside && policy == SupportPolicy::ClipToDisk) continue;
      const cplx v = holonomy_dilatation(m, z, w);
      if (!inside && std::abs(v) > 1e-8)  // difference-quotient noise is ~1e-10
        throw ValidationError("mu^z does not vanish outside the unit disk (at w = " + std::to_string(w.real()) + " + " +
                              std::to_string(w.imag()) + "i); make the leaves horizontal there, e.g. by tapering");
      // below the difference-quotient noise floor the coefficient is zero
      if (inside && std::abs(v) > 1e-10) mu(r, c) = v;
    }
  const double sup = mu.abs().maxCoeff();
  if (!(sup < 1.0)) throw ValidationError("holonomy dilatation reaches 1: the motion is degenerate at this fiber");
  return BeltramiField(ComplexField(spec, std::move(mu)), sup, 1.0);
}

HarnackReport check_harnack_hoelder(const HolomorphicMotion& m, cplx alpha, cplx beta, cplx z) {
  if (alpha == beta) throw ValidationError("Harnack check needs two distinct leaves");
  const double s = std::abs(z);
  if (!(s < 1.0)) throw ValidationError("Harnack check needs |z| < 1");
  HarnackReport r;
  r.d0 = std::abs(m(alpha, 0.0) - m(beta, 0.0));
  r.dz = std::abs(m(alpha, z) - m(beta, z));
  if (r.d0 == 0.0) throw ValidationError("leaves coincide at z = 0");
  const double a = (1.0 + s) / (1.0 - s);
  r.lower = std::pow(2.0, -2.0 * s / (1.0 - s)) * std::pow(r.d0, a);
  r.upper = std::pow(2.0, 2.0 * s / (1.0 + s)) * std::pow(r.d0, 1.0 / a);
  r.margin_lower = r.dz - r.lower;
  r.margin_upper = r.upper - r.dz;
  r.exponent_min = 1.0 / a;
  r.exponent_max = a;
  r.in_regime = r.d0 < 2.0 && r.dz < 2.0 && r.dz > 0.0;
  r.exponent = r.in_regime ? std::log(r.dz / 2.0) / std::log(r.d0 / 2.0) : std::nan("");
  r.passes = r.margin_lower >= -1e-9 && r.margin_upper >= -1e-9 &&
             (!r.in_regime || (r.exponent >= r.exponent_min - 1e-9 && r.exponent <= r.exponent_max + 1e-9));
  return r;
}

DisjointnessReport check_disjointness(const HolomorphicMotion& m, const std::vector<cplx>& z_samples) {
  DisjointnessReport rep;
  const auto& tau = m.tau();
  for (std::size_t i = 0; i < tau.size(); ++i)
    for (std::size_t j = i + 1; j < tau.size(); ++j)
      for (cplx z : z_samples) {
        const double g = std::abs(m(tau[i], z) - m(tau[j], z));
        if (g < rep.min_gap) {
          rep.min_gap = g;
          rep.alpha = tau[i];
          rep.beta = tau[j];
          rep.z = z;
        }
      }
  rep.passes = rep.min_gap > 1e-9;
  return rep;
}

BoundednessReport check_boundedness(const HolomorphicMotion& m, const std::vector<cplx>& z_samples) {
  BoundednessReport rep;
  rep.limit = 1.0 - m.epsilon_bound();
  for (cplx a : m.tau())
    for (cplx z : z_samples) rep.max_modulus = std::max(rep.max_modulus, std::abs(m(a, z)));
  rep.passes = rep.max_modulus <= rep.limit + 1e-12;
  return rep;
}

SchwarzReport check_schwarz(const HolomorphicMotion& m, const std::vector<cplx>& zs, int w_samples_per_axis) {
  if (!m.global()) throw ValidationError("Schwarz check needs a global motion");
  SchwarzReport rep;
  const int k = std::max(2, w_samples_per_axis);
  for (cplx z : zs) {
    double sup = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const cplx w(-0.98 + 1.96 * i / (k - 1), -0.98 + 1.96 * j / (k - 1));
        if (std::abs(w) >= 0.98) continue;
        sup = std::max(sup, std::abs(holonomy_dilatation(m, z, w)));
      }
    rep.rows.push_back({z, sup, std::abs(z) - sup});
    rep.worst_excess = std::max(rep.worst_excess, sup - std::abs(z));
  }
  rep.passes = rep.worst_excess <= 5e-2;
  return rep;
}

bool MotionReport::passes() const {
  return disjointness.passes && holomorphy.passes && boundedness.passes && (!schwarz || schwarz->passes) &&
         harnack_violations == 0;
}

MotionReport check_motion(const HolomorphicMotion& m, const std::vector<cplx>& harnack_z) {
  MotionReport rep;
  const auto zs = default_z_samples();
  rep.disjointness = check_disjointness(m, zs);
  rep.boundedness = check_boundedness(m, zs);
  rep.holomorphy = check_leaf_holomorphy([&m](cplx a, cplx z) { return m(a, z); }, m.tau(), zs);
  if (m.tabulated() && m.fit_residual() > 1e-6) {
    rep.holomorphy.passes = false;
    rep.holomorphy.max_dzbar = std::max(rep.holomorphy.max_dzbar, m.fit_residual());
  }
  if (m.global()) {
    // holonomy needs a leaf through every fiber point; families that are not
    // motions at all (coinciding or non-holomorphic leaves) fail here
    try {
      rep.schwarz = check_schwarz(m, {0.1, 0.3, 0.6, cplx(0, 0.5), cplx(-0.6, -0.6)});
    } catch (const std::exception& e) {
      rep.schwarz = SchwarzReport{};
      rep.schwarz->passes = false;
      rep.schwarz_failure = e.what();
    }
  }
  const auto& tau = m.tau();
  for (std::size_t i = 0; i < tau.size(); ++i)
    for (std::size_t j = i + 1; j < tau.size(); ++j) {
      if (m(tau[i], 0.0) == m(tau[j], 0.0)) continue;  // reported by disjointness
      for (cplx z : harnack_z) {
        const auto h = check_harnack_hoelder(m, tau[i], tau[j], z);
        ++rep.harnack_checks;
        rep.harnack_violations += !h.passes;
        rep.harnack_out_of_regime += !h.in_regime;
        rep.harnack_worst_margin = std::min({rep.harnack_worst_margin, h.margin_lower, h.margin_upper});
      }
    }
  return rep;
}

void require_admissible(const HolomorphicMotion& m) {
  const auto zs = default_z_samples();
  const auto d = check_disjointness(m, zs);
  if (!d.passes) throw ValidationError("leaves are not disjoint (min gap " + std::to_string(d.min_gap) + ")");
  const auto b = check_boundedness(m, zs);
  if (!b.passes)
    throw ValidationError("leaves leave the disk of radius 1 - epsilon_bound (max |phi| " +
                          std::to_string(b.max_modulus) + ")");
  const auto h = check_leaf_holomorphy([&m](cplx a, cplx z) { return m(a, z); }, m.tau(), zs);
  if (!h.passes || (m.tabulated() && m.fit_residual() > 1e-6))
    throw ValidationError("leaves are not holomorphic in z");
}

}  // namespace qclam
