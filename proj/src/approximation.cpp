#include "qclam/approximation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qclam {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kFlag = 1e-9;
constexpr double kStep = 1e-6;

double keys_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return (1.5 * t - 2.5) * t * t + 1.0;
  if (t < 2.0) return ((-0.5 * t + 2.5) * t - 4.0) * t + 2.0;
  return 0.0;
}

std::string show(cplx z) {
  std::ostringstream os;
  os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
  return os.str();
}

// Wirtinger derivatives of t -> f(t) by central differences
template <typename F>
std::pair<cplx, cplx> wirtinger(F&& f, cplx t, double d = kStep) {
  const cplx fx = (f(t + d) - f(t - d)) / (2 * d);
  const cplx fy = (f(t + I * d) - f(t - I * d)) / (2 * d);
  return {0.5 * (fx - I * fy), 0.5 * (fx + I * fy)};
}

}  // namespace

double localization_kappa(double r) {
  if (!(r > 0.0 && r < 1.0)) throw ValidationError("localization radius must lie in (0, 1)");
  return 2.0 * r / (1.0 + r * r);
}

LocalizedMotion localize(const HolomorphicMotion& m, double r) {
  const double kappa = localization_kappa(r);
  const LeafFn phi = m.leaf_fn();
  std::ostringstream name;
  name << "localize(" << m.description() << ", " << r << ")";
  HolomorphicMotion loc(name.str(), [phi, r](cplx a, cplx z) { return phi(a, r * z); }, m.tau(), m.epsilon_bound(),
                        m.global(), m.base_radius() / r);
  return {std::move(loc), r, kappa};
}

cplx MollifiedLamination::displacement(cplx alpha, cplx z, cplx* dz) const {
  if (std::abs(z) > 1.0 + 1e-9) throw DomainError("mollified leaves are evaluated for |z| <= 1 only (z = " + show(z) + ")");
  if (dz) *dz = 0.0;
  if (fibers_ == 0) return 0.0;
  const Index n = grid_.resolution();
  const auto [fr, fc] = grid_.locate(alpha);
  if (!(fr >= 2.0 && fc >= 2.0 && fr <= n - 3.0 && fc <= n - 3.0))
    throw DomainError("alpha = " + show(alpha) + " lies outside the fiber grid");
  const auto r0 = static_cast<Index>(std::floor(fr)), c0 = static_cast<Index>(std::floor(fc));
  std::array<double, 4> wr{}, wc{};
  for (int k = 0; k < 4; ++k) {
    wr[k] = keys_weight(fr - static_cast<double>(r0 - 1 + k));
    wc[k] = keys_weight(fc - static_cast<double>(c0 - 1 + k));
  }
  const auto terms = static_cast<std::size_t>(terms_);
  cplx acc{}, dacc{};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double wgt = wr[a] * wc[b];
      if (wgt == 0.0) continue;
      const auto node = static_cast<std::size_t>((r0 - 1 + a) + (c0 - 1 + b) * n);
      const cplx* c = coef_.data() + node * terms;
      cplx p = c[terms - 1], dp = 0.0;
      for (std::size_t k = terms - 1; k-- > 0;) {
        dp = dp * z + p;
        p = p * z + c[k];
      }
      acc += wgt * p;
      dacc += wgt * dp;
    }
  if (dz) *dz = dacc;
  return acc;
}

cplx MollifiedLamination::leaf(cplx alpha, cplx z) const { return alpha + displacement(alpha, z, nullptr); }

cplx MollifiedLamination::leaf_derivative(cplx alpha, cplx z) const {
  cplx d;
  displacement(alpha, z, &d);
  return d;
}

cplx MollifiedLamination::chart(cplx z, cplx w) const {
  if (fibers_ == 0) {
    displacement(w, z, nullptr);  // domain checks only
    return w;
  }
  const double tol = 1e-15 * (1.0 + std::abs(w));
  cplx a = w - displacement(w, z, nullptr);
  cplx F = leaf(a, z) - w;
  for (int it = 0; it < 30 && std::abs(F) > tol; ++it) {
    const double s = 1e-7;
    const cplx ja = (leaf(a + s, z) - leaf(a - s, z)) / (2 * s);
    const cplx jb = (leaf(a + I * s, z) - leaf(a - I * s, z)) / (2 * s);
    Eigen::Matrix2d J;
    J << ja.real(), jb.real(), ja.imag(), jb.imag();
    const Eigen::Vector2d step = J.partialPivLu().solve(Eigen::Vector2d(F.real(), F.imag()));
    const cplx next = a - cplx(step(0), step(1));
    const cplx Fn = leaf(next, z) - w;
    if (!(std::abs(Fn) < std::abs(F))) break;
    a = next;
    F = Fn;
  }
  if (!(std::abs(F) <= 1e-12 * (1.0 + std::abs(w))))
    throw DomainError("chart inversion failed at z = " + show(z) + ", w = " + show(w));
  return a;
}

MollifiedLamination mollified_lamination(const Lamination& lam, double epsilon, const PipelineConfig& cfg) {
  const auto& m = lam.motion;
  if (!m.global()) throw ValidationError("mollified lamination needs a global motion");
  if (!(epsilon > 0.0 && epsilon < cfg.grid.half_width() - 1.0))
    throw ValidationError("epsilon must lie in (0, L - 1)");
  if (!(cfg.tol > 0.0)) throw ValidationError("tolerance must be positive");
  if (cfg.fibers < 0) throw ValidationError("fiber count must be >= 0");

  MollifiedLamination out(m, cfg.grid);
  out.epsilon_ = epsilon;
  const MollifierSpec ms{epsilon};

  // dilatation over the unit disk, from fibers on its boundary
  for (int j = 0; j < 16; ++j) {
    const cplx z = std::polar(1.0, 2.0 * std::numbers::pi * j / 16);
    const auto mu = beltrami_of_holonomy(m, z, cfg.grid, SupportPolicy::RequireDiskSupport);
    const double s = sup_norm(mu.mu());
    const double se = s > 0.0 ? sup_norm(mollify(mu, ms).mu()) : 0.0;
    out.sup_mu_ = std::max(out.sup_mu_, s);
    out.sup_mu_eps_ = std::max(out.sup_mu_eps_, se);
    out.moll_excess_ = std::max(out.moll_excess_, se - s);
  }
  out.kappa_ = cfg.kappa.value_or(out.sup_mu_);
  // mu^z is holomorphic in z: vanishing on the unit circle means it vanishes everywhere
  if (out.sup_mu_ == 0.0) return out;

  const double R = std::min(2.0, 0.5 * (1.0 + m.base_radius()));
  int M = cfg.fibers;
  if (M == 0) {
    const double need = R > 1.0 ? std::ceil(std::log(cfg.alias_target) / std::log(1.0 / R)) : 1e9;
    if (need > 256)
      throw ValidationError("leaves are holomorphic only for |z| < " + std::to_string(m.base_radius()) +
                            "; localize the motion so the sampling circle clears the unit disk");
    M = std::max(8, static_cast<int>(need) + static_cast<int>(need) % 2);
  }
  out.radius_ = R;
  out.fibers_ = M;
  out.terms_ = M;

  const Index n = cfg.grid.resolution();
  const Eigen::ArrayXXcd nodes = node_coordinates(cfg.grid);
  std::vector<Eigen::ArrayXXcd> disp;
  disp.reserve(static_cast<std::size_t>(M));
  for (int j = 0; j < M; ++j) {
    const cplx z = std::polar(R, 2.0 * std::numbers::pi * j / M);
    const auto mu = beltrami_of_holonomy(m, z, cfg.grid, SupportPolicy::RequireDiskSupport);
    const auto sol = principal_solution(mollify(mu, ms), cfg.tol);
    out.max_iterations_ = std::max(out.max_iterations_, sol.iterations);
    out.max_residual_ = std::max(out.max_residual_, sol.residual);
    disp.push_back(sol.h.values() - nodes);
  }
  // Taylor coefficients c_k = (1/M) sum_j D_j z_j^{-k}
  const auto nn = static_cast<std::size_t>(n * n);
  out.coef_.assign(nn * static_cast<std::size_t>(M), cplx{});
  for (int k = 0; k < M; ++k) {
    Eigen::ArrayXXcd ck = Eigen::ArrayXXcd::Zero(n, n);
    for (int j = 0; j < M; ++j) ck += std::polar(std::pow(R, -k), -2.0 * std::numbers::pi * j * k / M) * disp[j];
    ck /= static_cast<double>(M);
    if (k >= M / 2) out.tail_ = std::max(out.tail_, ck.abs().maxCoeff());
    for (std::size_t idx = 0; idx < nn; ++idx) out.coef_[idx * static_cast<std::size_t>(M) + k] = ck(static_cast<Index>(idx));
  }
  return out;
}

double leaf_deviation(const MollifiedLamination& moll, const std::vector<cplx>& alphas, const std::vector<cplx>& z_samples) {
  double worst = 0.0;
  for (cplx a : alphas)
    for (cplx z : z_samples) worst = std::max(worst, std::abs(moll.leaf(a, z) - moll.motion()(a, z)));
  return worst;
}

AmbientFunction approximate(const AmbientFunction& f_straight, const MollifiedLamination& moll) {
  if (!f_straight) throw ValidationError("approximate needs a function");
  return [f_straight, &moll](cplx z, cplx w) { return f_straight(z, moll.chart(z, w)); };
}

AmbientFunction approximate(const LeafFunction& f, const MollifiedLamination& moll, double smoothing) {
  return approximate(c1_extend(f, smoothing), moll);
}

ApproximationError w1p_error(const AmbientFunction& f_straight, const MollifiedLamination& moll, double p,
                             double delta, const ZGrid& grid) {
  if (!(p > 1.0)) throw ValidationError("p must exceed 1");
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("delta must lie in (0, 1)");
  const auto& m = moll.motion();
  const auto f_eps = approximate(f_straight, moll);
  const double rad = 1.0 - delta;
  std::vector<Eigen::ArrayXXd> vals;
  std::vector<Eigen::ArrayXXcd> grads;
  for (cplx a : m.tau()) {
    auto g = [&](cplx z) { return f_straight(z, a) - f_eps(z, m(a, z)); };
    Eigen::ArrayXXd v = Eigen::ArrayXXd::Zero(grid.n, grid.n);
    Eigen::ArrayXXcd gr = Eigen::ArrayXXcd::Zero(grid.n, grid.n);
    for (int r = 0; r < grid.n; ++r)
      for (int c = 0; c < grid.n; ++c) {
        const cplx z = grid.point(r, c);
        if (!(std::abs(z) < rad)) continue;
        v(r, c) = g(z);
        gr(r, c) = cplx((g(z + kStep) - g(z - kStep)) / (2 * kStep), (g(z + I * kStep) - g(z - I * kStep)) / (2 * kStep));
      }
    vals.push_back(std::move(v));
    grads.push_back(std::move(gr));
  }
  LeafFunction diff(grid, m.tau(), std::move(vals), std::move(grads), Smoothness::W1p);
  std::vector<double> per;
  double sup = 0.0;
  for (std::size_t k = 0; k < m.tau().size(); ++k) {
    LeafFunction one(grid, {m.tau()[k]}, {diff.values(k)}, {diff.gradients(k)}, Smoothness::W1p);
    per.push_back(w1p_norm(one, p, delta));
    sup = std::max(sup, diff.values(k).abs().maxCoeff());
  }
  const double pm = p_max(moll.kappa());
  return ApproximationError{
      .sup_error = sup,
      .w1p_error = w1p_norm(diff, p, delta),
      .w1p_error_per_leaf = std::move(per),
      .p = p,
      .p_max = pm,
      .in_regime = p < pm,
      .difference = std::move(diff),
  };
}

double ProjectionTrace::fraction_within(double bound) const {
  std::size_t ok = 0, total = 0;
  for (Index c = 0; c < nu.cols(); ++c)
    for (Index r = 0; r < nu.rows(); ++r) {
      if (!inside(r, c) || flagged(r, c)) continue;
      ++total;
      ok += std::abs(nu(r, c)) <= bound;
    }
  return total ? static_cast<double>(ok) / static_cast<double>(total) : 1.0;
}

double ProjectionTrace::gradient_lp(double p) const {
  if (!(p >= 1.0)) throw ValidationError("p must be >= 1");
  std::vector<double> terms;
  for (Index c = 0; c < pi.cols(); ++c)
    for (Index r = 0; r < pi.rows(); ++r)
      if (inside(r, c))
        terms.push_back(std::pow(2.0 * (std::norm(d_pi(r, c)) + std::norm(dbar_pi(r, c))), 0.5 * p));
  const double h = grid.spacing();
  return std::pow(pairwise_sum(terms) * h * h, 1.0 / p);
}

ProjectionTrace projection_trace(const MollifiedLamination& moll, cplx beta, const ZGrid& grid, double radius) {
  if (!(radius > 0.0 && radius < 1.0)) throw ValidationError("trace radius must lie in (0, 1)");
  const auto& m = moll.motion();
  auto pi = [&](cplx z) { return moll.chart(z, m(beta, z)) - beta; };
  ProjectionTrace t{.beta = beta, .grid = grid, .radius = radius};
  const auto n = static_cast<Index>(grid.n);
  t.pi = t.d_pi = t.dbar_pi = t.nu = Eigen::ArrayXXcd::Zero(n, n);
  t.inside = t.flagged = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false);
  for (int r = 0; r < grid.n; ++r)
    for (int c = 0; c < grid.n; ++c) {
      const cplx z = grid.point(r, c);
      if (!(std::abs(z) < radius)) continue;
      t.inside(r, c) = true;
      ++t.samples;
      t.pi(r, c) = pi(z);
      const auto [d, dbar] = wirtinger(pi, z);
      t.d_pi(r, c) = d;
      t.dbar_pi(r, c) = dbar;
      if (std::abs(d) < kFlag) {
        t.flagged(r, c) = true;
        ++t.flagged_count;
        continue;
      }
      t.nu(r, c) = dbar / d;
      t.nu_sup = std::max(t.nu_sup, std::abs(t.nu(r, c)));
    }
  return t;
}

Transversal Transversal::vertical(cplx z0) {
  std::ostringstream os;
  os << "z = " << show(z0);
  return Transversal{Kind::Vertical, z0, {}, {}, os.str()};
}

Transversal Transversal::graph(std::function<cplx(cplx)> g, std::function<cplx(cplx)> dg, std::string label) {
  if (!g || !dg) throw ValidationError("graph transversal needs g and its derivative");
  return Transversal{Kind::Graph, 0.0, std::move(g), std::move(dg), std::move(label)};
}

namespace {

// leaf label of the point of d with parameter t
cplx label_of(const MollifiedLamination& moll, const Transversal& d, cplx t) {
  return d.kind == Transversal::Kind::Vertical ? moll.chart(d.z0, t) : moll.chart(t, d.g(t));
}

// parameter of the point where the leaf alpha crosses d
cplx crossing(const MollifiedLamination& moll, const Transversal& d, cplx alpha, cplx guess) {
  if (d.kind == Transversal::Kind::Vertical) return moll.leaf(alpha, d.z0);
  cplx z = guess;
  for (int it = 0; it < 60; ++it) {
    if (std::abs(z) > 1.0) break;
    const cplx F = moll.leaf(alpha, z) - d.g(z);
    const cplx dF = moll.leaf_derivative(alpha, z) - d.dg(z);
    if (std::abs(dF) < kFlag)
      throw DegeneratePointError("transversal '" + d.label + "' is tangent to the leaf " + show(alpha) + " at z = " + show(z),
                                 z);
    const cplx step = F / dF;
    z -= step;
    if (std::abs(step) <= 1e-15 * (1.0 + std::abs(z))) {
      if (std::abs(z) > 1.0) break;
      return z;
    }
  }
  throw DomainError("leaf " + show(alpha) + " does not cross transversal '" + d.label + "' inside the unit disk");
}

}  // namespace

DilatationReport transversal_dilatation(const MollifiedLamination& moll, const Transversal& d1, const Transversal& d2,
                                        const std::vector<cplx>& alphas) {
  if (alphas.empty()) throw ValidationError("no leaves to follow");
  DilatationReport rep;
  for (cplx a : alphas) {
    const cplx t1 = crossing(moll, d1, a, a);
    const cplx t2 = crossing(moll, d2, a, a);
    auto T = [&](cplx t) { return crossing(moll, d2, label_of(moll, d1, t), t2); };
    const auto [d, dbar] = wirtinger(T, t1);
    if (std::abs(d) < kFlag) throw DegeneratePointError("holonomy is singular along the leaf " + show(a), a);
    const double k = std::abs(dbar) / std::abs(d);
    ++rep.samples;
    if (k > rep.sup || rep.samples == 1) {
      rep.sup = std::max(rep.sup, k);
      rep.worst_alpha = a;
    }
  }
  return rep;
}

std::vector<cplx> default_transversal_alphas() {
  std::vector<cplx> out;
  for (int i = -4; i <= 4; ++i)
    for (int j = -4; j <= 4; ++j) {
      const cplx a(0.15 * i, 0.15 * j);
      if (std::abs(a) <= 0.6 + 1e-12) out.push_back(a);
    }
  return out;
}

}  // namespace qclam
